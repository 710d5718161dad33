"""K-means codebook training (k-means++ init, Lloyd or minibatch refinement)
and nearest-centroid assignment.

Distances are squared Euclidean on raw features, computed in float64 with a
fixed chunked reduction so results are deterministic for a given seed and
input order. Codebook file layout (little-endian): magic ``SCBK``, version
u16 = 1, reserved u16 = 0, k u32, dim u32, meta_len u32, meta_len bytes of
UTF-8 JSON metadata, then k*dim f32 centroids.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .binio import FormatError, check_magic, check_version, read_exact

CODEBOOK_MAGIC = b"SCBK"
CODEBOOK_VERSION = 1

# ~64 MB of float64 distance buffer per chunk; sizing affects memory only,
# never results (per-row reductions are independent).
_CHUNK_ELEMS = 8_000_000


@dataclass(frozen=True)
class KMeansConfig:
    k: int
    max_iters: int = 100
    rel_tol: float = 1e-4
    seed: int = 0
    batch_size: int | None = None  # None = full Lloyd; int enables minibatch mode

    def __post_init__(self):
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")
        if self.max_iters < 1:
            raise ValueError(f"max_iters must be >= 1, got {self.max_iters}")
        if self.rel_tol < 0:
            raise ValueError(f"rel_tol must be >= 0, got {self.rel_tol}")
        if self.batch_size is not None and self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")


@dataclass(frozen=True, eq=False)
class Codebook:
    """K x D centroids plus training metadata."""

    centroids: np.ndarray  # (k, dim) float32
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        arr = np.ascontiguousarray(self.centroids, dtype=np.float32)
        if arr.ndim != 2:
            raise ValueError(f"centroids must be 2-D, got shape {arr.shape}")
        if not np.isfinite(arr).all():
            raise ValueError("centroids must be finite")
        object.__setattr__(self, "centroids", arr)

    @property
    def k(self) -> int:
        return self.centroids.shape[0]

    @property
    def dim(self) -> int:
        return self.centroids.shape[1]

    def save(self, path: Path | str) -> None:
        meta_bytes = json.dumps(self.meta, sort_keys=True).encode("utf-8")
        with open(path, "wb") as fh:
            fh.write(CODEBOOK_MAGIC)
            fh.write(struct.pack("<HH", CODEBOOK_VERSION, 0))
            fh.write(struct.pack("<III", self.k, self.dim, len(meta_bytes)))
            fh.write(meta_bytes)
            fh.write(self.centroids.astype("<f4", copy=False).tobytes())

    @classmethod
    def load(cls, path: Path | str) -> "Codebook":
        with open(path, "rb") as fh:
            check_magic(fh, CODEBOOK_MAGIC)
            check_version(fh, CODEBOOK_VERSION)
            k, dim, meta_len = struct.unpack("<III", read_exact(fh, 12, "header"))
            meta = json.loads(read_exact(fh, meta_len, "metadata").decode("utf-8"))
            payload = fh.read()
        expected = k * dim * 4
        if len(payload) != expected:
            raise FormatError(
                f"{path}: centroid payload mismatch: expected {expected} bytes, got {len(payload)}"
            )
        centroids = np.frombuffer(payload, dtype="<f4").reshape(k, dim)
        return cls(centroids=centroids, meta=meta)


def _as_matrix(vectors) -> np.ndarray:
    x = np.asarray(vectors, dtype=np.float64)
    if x.ndim != 2:
        raise ValueError(f"expected a 2-D array of vectors, got shape {x.shape}")
    if not np.isfinite(x).all():
        raise ValueError("input vectors must be finite")
    return x


def _nearest(x: np.ndarray, centers: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Labels and squared distance to the nearest center, ties to lowest index."""
    n, d = x.shape
    k = centers.shape[0]
    labels = np.empty(n, dtype=np.int64)
    best = np.empty(n, dtype=np.float64)
    chunk = max(1, _CHUNK_ELEMS // max(1, k * d))
    for s in range(0, n, chunk):
        xb = x[s : s + chunk]
        d2 = ((xb[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        lb = np.argmin(d2, axis=1)
        labels[s : s + len(xb)] = lb
        best[s : s + len(xb)] = d2[np.arange(len(xb)), lb]
    return labels, best


def _nearest_fast(x: np.ndarray, centers: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """BLAS-backed variant of _nearest via the |x|^2 - 2x.c + |c|^2 expansion.

    Used only inside minibatch training, where expansion rounding cannot leak
    into the public assignment contract.
    """
    n = x.shape[0]
    k = centers.shape[0]
    x2 = np.einsum("ij,ij->i", x, x)
    c2 = np.einsum("ij,ij->i", centers, centers)
    labels = np.empty(n, dtype=np.int64)
    best = np.empty(n, dtype=np.float64)
    chunk = max(1, _CHUNK_ELEMS // max(1, k))
    for s in range(0, n, chunk):
        xb = x[s : s + chunk]
        d2 = x2[s : s + chunk, None] - 2.0 * (xb @ centers.T) + c2[None, :]
        np.maximum(d2, 0.0, out=d2)
        lb = np.argmin(d2, axis=1)
        labels[s : s + len(xb)] = lb
        best[s : s + len(xb)] = d2[np.arange(len(xb)), lb]
    return labels, best


def _kmeanspp(x: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """Seeded k-means++: next center drawn with probability proportional to D^2."""
    n = x.shape[0]
    centers = np.empty((k, x.shape[1]), dtype=np.float64)
    centers[0] = x[int(rng.integers(n))]
    d2 = ((x - centers[0]) ** 2).sum(axis=1)
    for j in range(1, k):
        total = d2.sum()
        if total <= 0:
            idx = int(rng.integers(n))  # all points sit on chosen centers
        else:
            r = rng.random() * total
            idx = min(int(np.searchsorted(np.cumsum(d2), r, side="right")), n - 1)
        centers[j] = x[idx]
        d2 = np.minimum(d2, ((x - centers[j]) ** 2).sum(axis=1))
    return centers


def _relocate_empty(
    x: np.ndarray, centers: np.ndarray, labels: np.ndarray, d2: np.ndarray
) -> None:
    """Reseed each empty cluster at the point currently farthest from its centroid."""
    k = centers.shape[0]
    while True:
        counts = np.bincount(labels, minlength=k)
        empties = np.flatnonzero(counts == 0)
        if empties.size == 0:
            return
        moved = False
        for e in empties:
            idx = int(np.argmax(d2))
            if d2[idx] <= 0.0:
                continue  # every point already coincides with a centroid
            centers[e] = x[idx]
            labels[idx] = e
            d2[idx] = 0.0
            moved = True
        if not moved:
            return


def _group_means(x: np.ndarray, labels: np.ndarray, k: int, fallback: np.ndarray) -> np.ndarray:
    counts = np.bincount(labels, minlength=k).astype(np.float64)
    out = np.empty((k, x.shape[1]), dtype=np.float64)
    for j in range(x.shape[1]):
        out[:, j] = np.bincount(labels, weights=x[:, j], minlength=k)
    nonzero = counts > 0
    out[nonzero] /= counts[nonzero, None]
    out[~nonzero] = fallback[~nonzero]
    return out


def train_kmeans(vectors, config: KMeansConfig, extra_meta: dict | None = None) -> Codebook:
    """Train a codebook with k-means++ init and Lloyd (or minibatch) refinement.

    Lloyd mode iterates until the relative inertia improvement drops below
    ``config.rel_tol``, the assignment reaches a fixed point, or
    ``config.max_iters`` is hit. Empty clusters are reseeded at the point
    farthest from its assigned centroid, which keeps the per-iteration inertia
    sequence non-increasing. Deterministic for a fixed seed and input order.
    """
    x = _as_matrix(vectors)
    n = x.shape[0]
    if n == 0:
        raise ValueError("cannot train on an empty vector set")
    if config.k > n:
        raise ValueError(f"k={config.k} exceeds the number of input points ({n})")

    rng = np.random.default_rng(config.seed)
    if config.batch_size is not None:
        return _train_minibatch(x, config, rng, extra_meta)
    centers = _kmeanspp(x, config.k, rng)

    # The loop breaks before applying an update, so the emitted centroids are
    # always the ones that produced history[-1].
    history: list[float] = []
    prev_labels: np.ndarray | None = None
    iterations = 0
    while iterations < config.max_iters:
        iterations += 1
        labels, d2 = _nearest(x, centers)
        _relocate_empty(x, centers, labels, d2)
        history.append(float(d2.sum()))
        if history[-1] == 0.0:
            break  # absolute fixed point; a mean update could only drift by ulps
        if prev_labels is not None and np.array_equal(labels, prev_labels):
            break  # exact fixed point
        if len(history) >= 2:
            prev, cur = history[-2], history[-1]
            if prev <= 0.0 or (prev - cur) < config.rel_tol * prev:
                break
        if iterations == config.max_iters:
            break
        prev_labels = labels
        centers = _group_means(x, labels, config.k, centers)

    meta = {
        "seed": config.seed,
        "iterations_run": iterations,
        "final_inertia": history[-1],
        "inertia_history": history,
        "mode": "lloyd",
    }
    if extra_meta:
        meta.update(extra_meta)
    return Codebook(centroids=centers.astype(np.float32), meta=meta)


def _train_minibatch(
    x: np.ndarray,
    config: KMeansConfig,
    rng: np.random.Generator,
    extra_meta: dict | None,
) -> Codebook:
    """Minibatch refinement: per-batch aggregated center updates with a
    1/count learning rate. k-means++ runs on a seeded subsample so very large
    k stays affordable; results remain deterministic for a fixed seed."""
    n, d = x.shape
    batch = min(config.batch_size or n, n)
    init_size = min(n, max(3 * batch, 3 * config.k))
    init_idx = np.sort(rng.choice(n, size=init_size, replace=False))
    centers = _kmeanspp(x[init_idx], config.k, rng)
    counts = np.zeros(config.k, dtype=np.float64)
    for _ in range(config.max_iters):
        idx = rng.integers(0, n, size=batch)
        xb = x[idx]
        labels, _ = _nearest_fast(xb, centers)
        batch_counts = np.bincount(labels, minlength=config.k).astype(np.float64)
        sums = np.empty((config.k, d), dtype=np.float64)
        for j in range(d):
            sums[:, j] = np.bincount(labels, weights=xb[:, j], minlength=config.k)
        hit = batch_counts > 0
        counts[hit] += batch_counts[hit]
        lr = (batch_counts[hit] / counts[hit])[:, None]
        centers[hit] = (1.0 - lr) * centers[hit] + lr * (sums[hit] / batch_counts[hit, None])
    labels, d2 = _nearest_fast(x, centers)
    _relocate_empty(x, centers, labels, d2)
    meta = {
        "seed": config.seed,
        "iterations_run": config.max_iters,
        "final_inertia": float(d2.sum()),
        "mode": "minibatch",
        "batch_size": batch,
    }
    if extra_meta:
        meta.update(extra_meta)
    return Codebook(centroids=centers.astype(np.float32), meta=meta)


def assign(codebook: Codebook, vectors) -> np.ndarray:
    """Nearest-centroid unit id per vector (ties broken toward the lowest index)."""
    x = _as_matrix(vectors)
    if x.shape[0] and x.shape[1] != codebook.dim:
        raise ValueError(f"vector dim {x.shape[1]} != codebook dim {codebook.dim}")
    labels, _ = _nearest(x, codebook.centroids.astype(np.float64))
    return labels


def inertia(codebook: Codebook, vectors) -> float:
    """Sum of squared distances from each vector to its assigned centroid."""
    x = _as_matrix(vectors)
    if x.shape[0] and x.shape[1] != codebook.dim:
        raise ValueError(f"vector dim {x.shape[1]} != codebook dim {codebook.dim}")
    _, d2 = _nearest(x, codebook.centroids.astype(np.float64))
    return float(d2.sum())
