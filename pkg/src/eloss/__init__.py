"""Layer-wise differential entropy estimation and the Entropy Loss regularizer."""

from .analysis import layer_trajectory, log_regression_r2, mean_accuracy, pca, smooth_curve
from .entropy import EntropyEstimate, Jitter, digamma, entropy_knn, entropy_knn_gradient, entropy_nn, layer_deltas
from .errors import DegenerateSampleError, InvalidArgument, InvalidData, ParseError
from .loss import EntropyLossConfig, combined_entropy_loss, direction_loss, entropy_loss_gradients, variance_loss
from .neighbors import brute_force_knn, knn_distances
from .network import NetworkDims, OptimizerState, forward, init_network, train_step

__version__ = "0.1.0"
