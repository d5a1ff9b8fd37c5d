"""Feature-matrix ingestion (CSV and a binary container), per-feature
normalization, label files, and the synthetic multi-view benchmark
generator."""

from __future__ import annotations

import csv
import struct

import numpy as np

from .numerics import Matrix

MAGIC = b"DMJC"
BINARY_VERSION = 1


class DataError(Exception):
    """Problem with an input data file."""


class BadMagicError(DataError):
    """The binary container header is wrong or truncated."""


class RaggedRowsError(DataError):
    """CSV rows have inconsistent lengths."""


class NonFiniteDataError(DataError):
    """A matrix contains NaN or infinite entries."""


def save_matrix_binary(matrix: Matrix, path) -> None:
    """Write the binary container: magic 'DMJC', version u16, rows u64,
    cols u64, then row-major little-endian float32 values."""
    m = np.ascontiguousarray(matrix, dtype="<f4")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<HQQ", BINARY_VERSION, m.shape[0], m.shape[1]))
        fh.write(m.tobytes())


def load_matrix_binary(path) -> Matrix:
    with open(path, "rb") as fh:
        blob = fh.read()
    header = struct.calcsize("<HQQ")
    if len(blob) < 4 + header or blob[:4] != MAGIC:
        raise BadMagicError(f"{path}: not a DMJC binary matrix")
    version, rows, cols = struct.unpack("<HQQ", blob[4 : 4 + header])
    if version != BINARY_VERSION:
        raise BadMagicError(f"{path}: unsupported container version {version}")
    payload = blob[4 + header :]
    expected = rows * cols * 4
    if len(payload) != expected:
        raise BadMagicError(
            f"{path}: payload has {len(payload)} bytes, expected {expected}"
        )
    values = np.frombuffer(payload, dtype="<f4").astype(np.float64)
    matrix = values.reshape(rows, cols)
    if not np.isfinite(matrix).all():
        raise NonFiniteDataError(f"{path}: non-finite values in matrix")
    return matrix


def _is_number(token: str) -> bool:
    try:
        float(token)
        return True
    except ValueError:
        return False


def load_matrix_csv(path) -> Matrix:
    """Numeric CSV with an optional single header row. Ragged rows and
    non-finite values are rejected."""
    with open(path, newline="") as fh:
        rows = [row for row in csv.reader(fh) if row]
    if not rows:
        raise DataError(f"{path}: no rows")
    if not all(_is_number(tok) for tok in rows[0]):
        rows = rows[1:]
        if not rows:
            raise DataError(f"{path}: header but no data rows")
    width = len(rows[0])
    if any(len(r) != width for r in rows):
        raise RaggedRowsError(f"{path}: rows have inconsistent lengths")
    try:
        matrix = np.array([[float(tok) for tok in r] for r in rows], dtype=np.float64)
    except ValueError as exc:
        raise DataError(f"{path}: non-numeric cell in data row: {exc}") from exc
    if not np.isfinite(matrix).all():
        raise NonFiniteDataError(f"{path}: non-finite values in matrix")
    return matrix


def save_matrix_csv(matrix: Matrix, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        for row in np.asarray(matrix):
            writer.writerow([repr(float(x)) for x in row])


def load_feature_matrix(path) -> Matrix:
    """Load a feature matrix, dispatching on the binary magic bytes."""
    try:
        with open(path, "rb") as fh:
            head = fh.read(4)
    except OSError as exc:
        raise DataError(f"{path}: unreadable file: {exc}") from exc
    if head == MAGIC:
        return load_matrix_binary(path)
    return load_matrix_csv(path)


def load_labels(path) -> np.ndarray:
    """Single-column integer CSV (optional header)."""
    matrix = load_matrix_csv(path)
    if matrix.shape[1] != 1:
        raise DataError(f"{path}: label file must have a single column")
    col = matrix[:, 0]
    labels = col.astype(np.int64)
    if not np.array_equal(labels, col):
        raise DataError(f"{path}: labels must be integers")
    return labels


def save_labels(labels, path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write("label\n")
        for y in labels:
            fh.write(f"{int(y)}\n")


def normalize(matrix: Matrix, mode: str) -> Matrix:
    """Per-feature normalization: 'unit_interval' rescales each column to
    [0,1], 'standardize' to zero mean unit variance, 'none' passes through.
    Constant columns map to 0."""
    if mode == "none":
        return matrix
    if mode == "unit_interval":
        lo = matrix.min(axis=0)
        span = matrix.max(axis=0) - lo
        out = np.zeros_like(matrix)
        np.divide(matrix - lo, span, out=out, where=span > 0)
        return out
    if mode == "standardize":
        mean = matrix.mean(axis=0)
        std = matrix.std(axis=0)
        out = np.zeros_like(matrix)
        np.divide(matrix - mean, std, out=out, where=std > 0)
        return out
    raise ValueError(f"unknown normalization mode {mode!r}")


ConfusionPlan = list[list[tuple[int, int]]]


def default_confusion_plan(n_views: int, n_clusters: int) -> ConfusionPlan:
    """One merged cluster pair per view (none for a single view), chosen so
    every pair stays separable in some other view."""
    if n_views == 1:
        return [[]]
    return [[(v % n_clusters, (v + 1) % n_clusters)] for v in range(n_views)]


def _merge_groups(n_clusters: int, merges) -> np.ndarray:
    """Union-find roots after merging the given cluster pairs."""
    root = np.arange(n_clusters)

    def find(a):
        while root[a] != a:
            root[a] = root[root[a]]
            a = root[a]
        return a

    for a, b in merges:
        if not (0 <= a < n_clusters and 0 <= b < n_clusters) or a == b:
            raise ValueError(f"bad merge pair ({a}, {b}) for {n_clusters} clusters")
        root[max(find(a), find(b))] = min(find(a), find(b))
    return np.array([find(j) for j in range(n_clusters)])


def make_synthetic(
    n_views: int,
    n_clusters: int,
    n_per_cluster: int,
    confusion_plan: ConfusionPlan,
    rng: np.random.Generator,
    dim: int = 8,
    separation: float = 10.0,
    noise: float = 1.0,
) -> tuple[list[Matrix], np.ndarray]:
    """Gaussian blobs where each view merges some cluster pairs (samples of a
    merged pair share one center in that view), so no single view separates
    everything but the union of views does.

    Returns one feature matrix per view (same shuffled row order) and the
    ground-truth labels.
    """
    if len(confusion_plan) != n_views:
        raise ValueError(f"confusion plan has {len(confusion_plan)} entries for {n_views} views")
    if dim < n_clusters:
        raise ValueError(f"need dim >= n_clusters to place separated centers, got {dim} < {n_clusters}")

    group_maps = [_merge_groups(n_clusters, merges) for merges in confusion_plan]
    for a in range(n_clusters):
        for b in range(a + 1, n_clusters):
            if all(g[a] == g[b] for g in group_maps):
                raise ValueError(
                    f"infeasible plan: clusters {a} and {b} are merged in every view"
                )

    n = n_clusters * n_per_cluster
    labels = np.repeat(np.arange(n_clusters), n_per_cluster)
    order = rng.permutation(n)
    labels = labels[order]

    views = []
    for g in group_maps:
        centers = np.zeros((n_clusters, dim))
        centers[np.arange(n_clusters), np.arange(n_clusters)] = separation
        centers = centers[g]  # merged clusters share the root's center
        x = centers[labels] + noise * rng.standard_normal((n, dim))
        views.append(x)
    return views, labels
