"""Experiment configs, the training loop, and the reports built on top of it.

Run records are JSON with sorted keys and round-trip float formatting, so
running the same config twice writes byte-identical ``record.json`` files.
Wall-clock timings go to a separate ``timing.json``.
"""

import dataclasses
import json
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import analysis
from .data import ActivationDump, DatasetSpec, atomic_write_text, generate_dataset, write_dump
from .entropy import Jitter, parse_policy, policy_name
from .errors import InvalidArgument, InvalidData
from .loss import EntropyLossConfig, combined_entropy_loss
from .network import (
    NetworkDims,
    OptimizerState,
    _forward,
    evaluate,
    init_network,
    measure_entropy,
    train_step,
)

log = logging.getLogger(__name__)

RECORD_VERSION = 1


@dataclass(frozen=True)
class NetworkSpec:
    hidden_width: int = 32
    hidden_count: int = 4
    activation: str = "relu"


@dataclass(frozen=True)
class OptimizerSpec:
    kind: str = "adam"
    lr: float = 1e-3
    momentum: float = 0.9
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    def state(self) -> OptimizerState:
        return OptimizerState(**dataclasses.asdict(self))


@dataclass(frozen=True)
class ExperimentConfig:
    dataset: DatasetSpec = field(default_factory=DatasetSpec)
    network: NetworkSpec = field(default_factory=NetworkSpec)
    optimizer: OptimizerSpec = field(default_factory=OptimizerSpec)
    entropy: EntropyLossConfig = field(default_factory=lambda: EntropyLossConfig(duplicate_policy=Jitter()))
    epochs: int = 200
    batch_size: int = 64
    seed: int = 0
    out_dir: str | None = None

    def __post_init__(self):
        if self.epochs < 1:
            raise InvalidArgument(f"epochs must be at least 1, got {self.epochs}")
        if self.batch_size < 2:
            raise InvalidArgument(f"batch_size must be at least 2, got {self.batch_size}")

    def dims(self) -> NetworkDims:
        return NetworkDims(
            self.dataset.input_dim,
            self.network.hidden_width,
            self.network.hidden_count,
            self.dataset.output_dim,
        )

    def with_seed(self, seed: int) -> "ExperimentConfig":
        """Same experiment with ``seed`` driving data, init and shuffling."""
        return dataclasses.replace(self, seed=seed, dataset=dataclasses.replace(self.dataset, seed=seed))

    def baseline(self) -> "ExperimentConfig":
        """This config with Entropy Loss switched off (weights zero)."""
        ent = dataclasses.replace(self.entropy, w_variance=0.0, w_direction=0.0)
        return dataclasses.replace(self, entropy=ent)

    def to_dict(self) -> dict:
        out = dataclasses.asdict(self)
        out["entropy"]["duplicate_policy"] = policy_name(self.entropy.duplicate_policy)
        if self.entropy.layers is not None:
            out["entropy"]["layers"] = list(self.entropy.layers)
        out.pop("out_dir")
        return out

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        raw = dict(raw)
        try:
            parts = {
                "dataset": DatasetSpec(**raw.pop("dataset", {})),
                "network": NetworkSpec(**raw.pop("network", {})),
                "optimizer": OptimizerSpec(**raw.pop("optimizer", {})),
            }
            ent = dict(raw.pop("entropy", {}))
            ent["duplicate_policy"] = parse_policy(ent.get("duplicate_policy", "jitter"))
            parts["entropy"] = EntropyLossConfig(**ent)
            return cls(**parts, **raw)
        except TypeError as exc:
            raise InvalidArgument(f"bad experiment config: {exc}") from None


def load_config(path) -> ExperimentConfig:
    try:
        raw = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InvalidData(f"{path}: cannot load config ({exc})") from None
    return ExperimentConfig.from_dict(raw)


@dataclass
class EpochEntry:
    epoch: int
    task_loss: float
    l1: float
    l2: float
    entropy_loss: float
    total_loss: float
    layer_entropies: list  # validation set, one per hidden layer
    signed_delta_sum: float
    val_metric: float


@dataclass
class RunRecord:
    config: dict
    seed: int
    metric: str  # "accuracy" or "mse"
    initial: dict
    entries: list = field(default_factory=list)
    wall_time: list = field(default_factory=list)  # seconds per epoch; kept out of record.json

    def curve(self, name: str = "val_metric") -> list:
        return [getattr(e, name) for e in self.entries]

    def to_dict(self) -> dict:
        return {
            "version": RECORD_VERSION,
            "config": self.config,
            "seed": self.seed,
            "metric": self.metric,
            "initial": self.initial,
            "entries": [dataclasses.asdict(e) for e in self.entries],
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "RunRecord":
        try:
            entries = [EpochEntry(**e) for e in raw["entries"]]
            return cls(raw["config"], raw["seed"], raw["metric"], raw["initial"], entries)
        except (KeyError, TypeError) as exc:
            raise InvalidData(f"malformed run record ({exc})") from None


def dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=1, allow_nan=True) + "\n"


def load_record(path) -> RunRecord:
    try:
        return RunRecord.from_dict(json.loads(Path(path).read_text()))
    except (OSError, json.JSONDecodeError) as exc:
        raise InvalidData(f"{path}: cannot load run record ({exc})") from None


def _entropy_context(exc: Exception, epoch: int, phase: str) -> InvalidData:
    layer = getattr(exc, "layer", None)
    err = type(exc)(f"epoch {epoch} ({phase}): {exc}")
    err.layer, err.epoch = layer, epoch
    return err


def _probe(net, data, config: EntropyLossConfig, epoch: int) -> tuple:
    try:
        m = measure_entropy(net, data.inputs, config)
    except ValueError as exc:
        raise _entropy_context(exc, epoch, "validation probe") from None
    return m["layer_entropies"], m["signed_delta_sum"]


def run_experiment(config: ExperimentConfig, write: bool = True) -> RunRecord:
    """Train one network and record per-epoch metrics.

    Each epoch shuffles the training set, takes one :func:`train_step` per
    minibatch, then measures validation accuracy (or MSE) and per-layer
    entropies on the whole validation set. The ``initial`` entry holds the
    same measurements before any training.
    """
    train, val = generate_dataset(config.dataset)
    net = init_network(config.dims(), config.network.activation, config.seed)
    state = config.optimizer.state()
    ent_cfg = config.entropy
    # entropy terms are logged even when they are switched off
    probe_cfg = dataclasses.replace(ent_cfg, w_variance=1.0, w_direction=1.0) if not ent_cfg.enabled else ent_cfg
    metric = "accuracy" if config.dataset.is_classification else "mse"
    shuffle_rng = np.random.default_rng([config.seed, 1])

    h0, s0 = _probe(net, val, probe_cfg, -1)
    record = RunRecord(
        config=config.to_dict(),
        seed=config.seed,
        metric=metric,
        initial={"val_metric": evaluate(net, val.inputs, val.targets), "layer_entropies": h0, "signed_delta_sum": s0},
    )
    n = len(train)
    for epoch in range(config.epochs):
        start = time.perf_counter()
        order = shuffle_rng.permutation(n)
        sums = {"task_loss": 0.0, "l1": 0.0, "l2": 0.0, "entropy_loss": 0.0, "total": 0.0}
        steps = 0
        for lo in range(0, n, config.batch_size):
            idx = order[lo : lo + config.batch_size]
            if idx.size < 2:
                continue
            xb, yb = train.inputs[idx], train.targets[idx]
            try:
                if not ent_cfg.enabled:
                    logged = measure_entropy(net, xb, probe_cfg)
                net, state, m = train_step(net, state, xb, yb, ent_cfg)
            except ValueError as exc:
                raise _entropy_context(exc, epoch, "training") from None
            if not ent_cfg.enabled:
                m.update(l1=logged["l1"], l2=logged["l2"], entropy_loss=0.0)
            for key in sums:
                sums[key] += m[key]
            steps += 1
        hs, signed = _probe(net, val, probe_cfg, epoch)
        record.entries.append(
            EpochEntry(
                epoch=epoch,
                task_loss=sums["task_loss"] / steps,
                l1=sums["l1"] / steps,
                l2=sums["l2"] / steps,
                entropy_loss=sums["entropy_loss"] / steps,
                total_loss=sums["total"] / steps,
                layer_entropies=hs,
                signed_delta_sum=signed,
                val_metric=evaluate(net, val.inputs, val.targets),
            )
        )
        record.wall_time.append(time.perf_counter() - start)
        log.debug("epoch %d: %s", epoch, record.entries[-1])
    record.final_net = net
    if write and config.out_dir is not None:
        save_run(record, config.out_dir, net=net, val_inputs=val.inputs)
    return record


def curves_table(record: RunRecord) -> str:
    """Plot-ready CSV: one row per epoch."""
    n_layers = len(record.entries[0].layer_entropies) if record.entries else 0
    head = ["epoch", "task_loss", "l1", "l2", "entropy_loss", "total_loss", "signed_delta_sum", "val_metric"]
    head += [f"H{i}" for i in range(n_layers)]
    lines = [",".join(head)]
    for e in record.entries:
        row = [e.epoch, e.task_loss, e.l1, e.l2, e.entropy_loss, e.total_loss, e.signed_delta_sum, e.val_metric]
        lines.append(",".join(repr(v) for v in row + list(e.layer_entropies)))
    return "\n".join(lines) + "\n"


def save_run(record: RunRecord, out_dir, net=None, val_inputs=None) -> Path:
    out = Path(out_dir)
    atomic_write_text(out / "record.json", dumps(record.to_dict()))
    atomic_write_text(out / "curves.csv", curves_table(record))
    atomic_write_text(out / "timing.json", dumps({"epoch_seconds": record.wall_time, "total_seconds": sum(record.wall_time)}))
    if net is not None and val_inputs is not None:
        cache = _forward(net, val_inputs)
        dump = ActivationDump(
            [(f"hidden{i}", h) for i, h in enumerate(cache.post)],
            {"epoch": len(record.entries) - 1, "batch": "validation", "seed": record.seed},
        )
        write_dump(out / "activations.txt", dump)
    return out / "record.json"


def run_sweep(config: ExperimentConfig, seeds, workers: int = 1) -> list:
    """Independent runs over ``seeds``; each writes to ``out_dir/seed_<s>``."""

    def one(seed):
        cfg = config.with_seed(seed)
        if config.out_dir is not None:
            cfg = dataclasses.replace(cfg, out_dir=str(Path(config.out_dir) / f"seed_{seed}"))
        return run_experiment(cfg)

    seeds = list(seeds)
    if workers <= 1:
        return [one(s) for s in seeds]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(one, seeds))


# -- reports ----------------------------------------------------------------------


def profile_dump(dump: ActivationDump, config: EntropyLossConfig | None = None) -> dict:
    """Per-layer entropy, deltas and both loss terms for an activation dump."""
    config = config or EntropyLossConfig()
    try:
        value = combined_entropy_loss(dump.matrices, config)
    except ValueError as exc:
        layer = getattr(exc, "layer", None)
        if layer is not None:
            exc.args = (str(exc).replace(f"layer {layer}:", f"layer {dump.names[layer]!r}:", 1),)
        raise
    chosen = range(len(dump.layers)) if config.layers is None else config.layers
    names = [dump.names[i] for i in chosen]
    deltas = list(value.profile.deltas)
    decreasing = sum(1 for d in deltas if d < 0)
    return {
        "layers": names,
        "layer_entropies": list(value.profile.layer_entropies),
        "deltas": deltas,
        "l1": value.l1,
        "l2": value.l2,
        "total": value.total,
        "signed_delta_sum": value.signed_sum,
        "decreasing_transitions": decreasing,
        "monotone_decrease": decreasing == len(deltas),
        "k": config.k,
        "sample_convention": config.sample_convention,
        "meta": dict(dump.meta),
    }


def trajectory_table(dump: ActivationDump, c: int = 2) -> str:
    """CSV of every layer's shared-basis PCA projection plus centroids."""
    traj = analysis.layer_trajectory(dump.matrices, c)
    cols = ",".join(f"pc{j}" for j in range(c))
    lines = [f"layer,kind,{cols}"]
    for name, proj, cen in zip(dump.names, traj.projections, traj.centroids):
        lines += [f"{name},point," + ",".join(repr(float(v)) for v in row) for row in proj]
        lines.append(f"{name},centroid," + ",".join(repr(float(v)) for v in cen))
    return "\n".join(lines) + "\n"


def _summarize(curve: list) -> dict:
    window = min(5, len(curve) if len(curve) % 2 else len(curve) - 1)
    out = {
        "smoothed": analysis.smooth_curve(curve, window) if window >= 1 else [],
        "mean_accuracy": analysis.mean_accuracy(curve),
        "log_fit": None,
    }
    try:
        fit = analysis.log_regression_r2(curve)
        out["log_fit"] = {"a": fit.a, "b": fit.b, "r_squared": fit.r_squared}
    except ValueError as exc:
        out["log_fit_error"] = str(exc)
    return out


def _final_mean(values: list, window: int = 50) -> float:
    return float(np.mean(values[-window:]))


def compare_runs(record_a: RunRecord, record_b: RunRecord, labels=("a", "b")) -> dict:
    """Side-by-side curve statistics of two runs, with ``b - a`` deltas."""
    if not record_a.entries or not record_b.entries:
        raise InvalidArgument("cannot compare empty run records")
    n = min(len(record_a.entries), len(record_b.entries))
    report = {"epochs_compared": n, "warning": None}
    if len(record_a.entries) != len(record_b.entries):
        report["warning"] = (
            f"epoch counts differ ({len(record_a.entries)} vs {len(record_b.entries)}); "
            f"compared the first {n}"
        )
    stats = {}
    for label, rec in zip(labels, (record_a, record_b)):
        s = _summarize(rec.curve()[:n])
        s["final_l1"] = _final_mean(rec.curve("l1")[:n])
        s["metric"] = rec.metric
        stats[label] = s
    report["runs"] = stats
    a, b = stats[labels[0]], stats[labels[1]]
    r2 = None
    if a["log_fit"] and b["log_fit"]:
        r2 = b["log_fit"]["r_squared"] - a["log_fit"]["r_squared"]
    report["delta"] = {
        "mean_accuracy": b["mean_accuracy"] - a["mean_accuracy"],
        "r_squared": r2,
        "final_l1": b["final_l1"] - a["final_l1"],
    }
    return report
