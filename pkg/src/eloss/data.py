"""Synthetic datasets and the plain-text point / activation-dump formats.

Point files hold one sample per line, values separated by whitespace or
commas. Lines starting with ``#`` are comments; activation dumps use
``# layer: <name>`` comment lines to start each layer's block and
``# key: value`` lines before the first block for metadata.
"""

import math
import os
import re
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import InvalidArgument, ParseError

DATASET_KINDS = ("gaussian_blobs", "ring_vs_blob", "regression_sine")


@dataclass(frozen=True)
class DatasetSpec:
    kind: str = "gaussian_blobs"
    n_train: int = 512
    n_val: int = 256
    noise: float = 1.0
    seed: int = 0
    n_classes: int = 2
    input_dim: int = 2
    separation: float = 6.0

    def __post_init__(self):
        if self.kind not in DATASET_KINDS:
            raise InvalidArgument(f"unknown dataset kind {self.kind!r}; expected one of {DATASET_KINDS}")
        if self.n_train < 1 or self.n_val < 1:
            raise InvalidArgument("n_train and n_val must be positive")
        if self.noise < 0:
            raise InvalidArgument("noise must be nonnegative")
        if self.n_classes < 2 and self.kind == "gaussian_blobs":
            raise InvalidArgument("gaussian_blobs needs at least 2 classes")
        if self.input_dim < 1 or (self.kind == "ring_vs_blob" and self.input_dim < 2):
            raise InvalidArgument(f"input_dim {self.input_dim} is too small for {self.kind}")

    @property
    def is_classification(self) -> bool:
        return self.kind != "regression_sine"

    @property
    def output_dim(self) -> int:
        if self.kind == "gaussian_blobs":
            return self.n_classes
        if self.kind == "ring_vs_blob":
            return 2
        return self.input_dim


@dataclass
class Dataset:
    inputs: np.ndarray
    targets: np.ndarray  # int labels or float regression targets

    def __len__(self):
        return self.inputs.shape[0]


def _balanced_labels(rng, n, n_classes):
    labels = np.arange(n) % n_classes
    rng.shuffle(labels)
    return labels


def _blobs(rng, n, spec: DatasetSpec):
    labels = _balanced_labels(rng, n, spec.n_classes)
    angles = 2 * math.pi * np.arange(spec.n_classes) / spec.n_classes
    centers = np.zeros((spec.n_classes, spec.input_dim))
    centers[:, 0] = 0.5 * spec.separation * np.cos(angles)
    if spec.input_dim > 1:
        centers[:, 1] = 0.5 * spec.separation * np.sin(angles)
    x = centers[labels] + spec.noise * rng.standard_normal((n, spec.input_dim))
    return Dataset(x, labels.astype(np.int64))


def _ring_vs_blob(rng, n, spec: DatasetSpec):
    labels = _balanced_labels(rng, n, 2)
    x = spec.noise * 0.5 * rng.standard_normal((n, spec.input_dim))
    theta = rng.uniform(0, 2 * math.pi, n)
    radius = 0.5 * spec.separation + spec.noise * 0.5 * rng.standard_normal(n)
    ring = labels == 1
    x[ring, 0] = radius[ring] * np.cos(theta[ring])
    x[ring, 1] = radius[ring] * np.sin(theta[ring])
    return Dataset(x, labels.astype(np.int64))


def _sine(rng, n, spec: DatasetSpec):
    x = rng.uniform(-math.pi, math.pi, (n, spec.input_dim))
    y = np.sin(x) + spec.noise * rng.standard_normal(x.shape)
    return Dataset(x, y)


_GENERATORS = {"gaussian_blobs": _blobs, "ring_vs_blob": _ring_vs_blob, "regression_sine": _sine}


def generate_dataset(spec: DatasetSpec) -> tuple[Dataset, Dataset]:
    """Deterministic ``(train, validation)`` split for ``spec``.

    ``noise`` is the per-coordinate standard deviation (for the sine task,
    the target noise, so its variance is ``noise**2``).
    """
    if isinstance(spec, dict):
        spec = DatasetSpec(**spec)
    rng = np.random.default_rng(spec.seed)
    make = _GENERATORS[spec.kind]
    return make(rng, spec.n_train, spec), make(rng, spec.n_val, spec)


# -- text formats ------------------------------------------------------------------

_SPLIT = re.compile(r"[\s,]+")


def _parse_row(line: str, path, lineno: int) -> list:
    fields = [f for f in _SPLIT.split(line.strip()) if f]
    try:
        row = [float(f) for f in fields]
    except ValueError as exc:
        raise ParseError(f"not a number ({exc})", path, lineno) from None
    if not all(math.isfinite(v) for v in row):
        raise ParseError("non-finite value", path, lineno)
    return row


def _iter_lines(path):
    try:
        with open(path) as fh:
            yield from enumerate(fh, start=1)
    except OSError as exc:
        raise ParseError(f"cannot read file ({exc.strerror})", path) from None


def read_points(path) -> np.ndarray:
    """Load an ``(n, d)`` point set from a delimited text file."""
    rows, width, first = [], None, None
    for lineno, line in _iter_lines(path):
        text = line.strip()
        if not text or text.startswith("#"):
            continue
        row = _parse_row(text, path, lineno)
        if width is None:
            width, first = len(row), lineno
        elif len(row) != width:
            raise ParseError(f"expected {width} columns (as on line {first}), found {len(row)}", path, lineno)
        rows.append(row)
    if not rows:
        raise ParseError("no data rows", path)
    return np.array(rows, dtype=np.float64)


def _fmt(v: float) -> str:
    return repr(float(v))


def atomic_write_text(path, text: str) -> None:
    """Write via a temporary file in the same directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def format_rows(matrix) -> str:
    m = np.asarray(matrix, dtype=np.float64)
    if m.ndim == 1:
        m = m[:, None]
    return "".join(" ".join(_fmt(v) for v in row) + "\n" for row in m)


def write_points(path, points, comments=()) -> None:
    head = "".join(f"# {c}\n" for c in comments)
    atomic_write_text(path, head + format_rows(points))


def write_dataset(path, data: Dataset, comments=()) -> None:
    """Features followed by the label / target columns."""
    y = data.targets.reshape(len(data), -1).astype(np.float64)
    write_points(path, np.hstack([data.inputs, y]), comments)


@dataclass
class ActivationDump:
    layers: list  # [(name, (n, d) array)], forward order
    meta: dict = field(default_factory=dict)

    @property
    def names(self) -> list:
        return [name for name, _ in self.layers]

    @property
    def matrices(self) -> list:
        return [m for _, m in self.layers]


def write_dump(path, dump: ActivationDump) -> None:
    parts = ["# activation-dump\n"]
    parts += [f"# {k}: {v}\n" for k, v in dump.meta.items()]
    for name, m in dump.layers:
        parts.append(f"# layer: {name}\n")
        parts.append(format_rows(m))
    atomic_write_text(path, "".join(parts))


def read_dump(path) -> ActivationDump:
    """Parse an activation dump; a file without layer markers is one layer."""
    meta, blocks = {}, []
    current = None
    for lineno, line in _iter_lines(path):
        text = line.strip()
        if not text:
            continue
        if text.startswith("#"):
            key, sep, value = text[1:].strip().partition(":")
            if sep and key.strip() == "layer":
                current = [value.strip(), [], lineno]
                blocks.append(current)
            elif sep and not blocks:
                meta[key.strip()] = value.strip()
            continue
        if current is None:
            current = [f"layer{len(blocks)}", [], lineno]
            blocks.append(current)
        row = _parse_row(text, path, lineno)
        if current[1] and len(row) != len(current[1][0]):
            raise ParseError(f"layer {current[0]!r} mixes row widths", path, lineno)
        current[1].append(row)
    if not blocks:
        raise ParseError("no layers found", path)
    layers = []
    for name, rows, lineno in blocks:
        if not rows:
            raise ParseError(f"layer {name!r} has no rows", path, lineno)
        layers.append((name, np.array(rows, dtype=np.float64)))
    return ActivationDump(layers, meta)
