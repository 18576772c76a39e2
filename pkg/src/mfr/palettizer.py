"""Weight palettization: scalar k-means over tensor values plus size reporting.

Two clustering strategies share one contract (centroids sorted ascending,
cost = sum of squared errors in f64):

* ``exact_dp`` — globally optimal 1-D k-means. Optimal clusters of scalars
  are contiguous in sorted order, so the problem reduces to the dynamic
  program D[i][j] = min over s of D[s][j-1] + cost(s+1..i) with interval
  costs from prefix sums of x and x^2. The interval cost satisfies the
  concave quadrangle inequality, which makes the optimal split point
  monotone in i; each DP row is therefore filled by divide and conquer in
  O(n log n) instead of O(n^2). The kernel is numba-compiled.
* ``lloyd`` — classic alternating assignment/mean iteration with
  deterministic quantile initialization, used for large tensors.

All clustering math runs in f64 regardless of storage dtype; the emitted
LUT is rounded to the tensor's dtype and the reported SSE is the error
actually achieved on disk.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from . import weight_store
from .canonical import canonical_json
from .weight_store import DTYPES, PalettizedTensor, Tensor, pack_indices

# Tensors at or below this element count always use the exact DP; above it
# the configured strategy applies (lloyd by default).
EXACT_DP_MAX_ELEMENTS = 4096


@dataclass(frozen=True)
class PalettizationConfig:
    n_bits: int = 6
    strategy: str = "lloyd"  # "exact_dp" forces the DP above EXACT_DP_MAX_ELEMENTS
    min_elements: int = 4096
    lloyd_max_iters: int = 100
    lloyd_rel_tol: float = 1e-7
    sample_limit: int = 1_000_000

    def __post_init__(self):
        if not 1 <= self.n_bits <= 8:
            raise ValueError(f"n_bits must be in [1,8], got {self.n_bits}")
        if self.strategy not in ("exact_dp", "lloyd"):
            raise ValueError(f"unknown strategy {self.strategy!r}")
        if self.min_elements < 1:
            raise ValueError("min_elements must be >= 1")
        if self.sample_limit < (1 << self.n_bits):
            raise ValueError("sample_limit must be >= 2**n_bits")


@njit(cache=True)
def _dp_rows(values, k):  # pragma: no cover - exercised via kmeans_1d_exact
    n = values.shape[0]
    ps = np.zeros(n + 1)
    ps2 = np.zeros(n + 1)
    for i in range(n):
        ps[i + 1] = ps[i] + values[i]
        ps2[i + 1] = ps2[i] + values[i] * values[i]

    prev = np.empty(n)
    cur = np.empty(n)
    back = np.zeros((k + 1, n), dtype=np.int64)
    for i in range(n):
        s = ps[i + 1]
        prev[i] = ps2[i + 1] - s * s / (i + 1)

    # stack entries: (ilo, ihi, slo, shi), split point monotone in i
    stack = np.empty((2 * n + 4, 4), dtype=np.int64)
    for j in range(2, k + 1):
        top = 0
        stack[top, 0] = j - 1
        stack[top, 1] = n - 1
        stack[top, 2] = j - 2
        stack[top, 3] = n - 2
        top += 1
        while top > 0:
            top -= 1
            il, ih, sl, sh = stack[top, 0], stack[top, 1], stack[top, 2], stack[top, 3]
            if il > ih:
                continue
            im = (il + ih) // 2
            best = np.inf
            bests = -1
            hi = sh if sh < im - 1 else im - 1
            for s in range(sl, hi + 1):
                seg_sum = ps[im + 1] - ps[s + 1]
                seg_cost = ps2[im + 1] - ps2[s + 1] - seg_sum * seg_sum / (im - s)
                c = prev[s] + seg_cost
                if c < best:
                    best = c
                    bests = s
            cur[im] = best
            back[j, im] = bests
            stack[top, 0] = il
            stack[top, 1] = im - 1
            stack[top, 2] = sl
            stack[top, 3] = bests
            top += 1
            stack[top, 0] = im + 1
            stack[top, 1] = ih
            stack[top, 2] = bests
            stack[top, 3] = sh
            top += 1
        for i in range(j - 1, n):
            prev[i] = cur[i]

    centroids = np.empty(k)
    cost = prev[n - 1]
    end = n - 1
    for j in range(k, 1, -1):
        s = back[j, end]
        centroids[j - 1] = (ps[end + 1] - ps[s + 1]) / (end - s)
        end = s
    centroids[0] = ps[end + 1] / (end + 1)
    return centroids, cost


def _distinct_count(sorted_values: np.ndarray) -> int:
    if sorted_values.size == 0:
        return 0
    return int(np.count_nonzero(np.diff(sorted_values) > 0)) + 1


def kmeans_1d_exact(values: np.ndarray, k: int) -> tuple[np.ndarray, float]:
    """Globally optimal SSE clustering of sorted scalars into k groups.

    ``values`` must be sorted ascending and ``k`` must not exceed the number
    of distinct values. Returns (centroids ascending, total SSE).
    """
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        raise ValueError("empty input")
    if np.any(np.diff(values) < 0):
        raise ValueError("values must be sorted ascending")
    if k < 1:
        raise ValueError("k must be >= 1")
    distinct = _distinct_count(values)
    if k > distinct:
        raise ValueError(f"k={k} exceeds distinct value count {distinct}")
    centroids, cost = _dp_rows(values, k)
    return centroids, max(float(cost), 0.0)


def _assign_sorted(values: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    """Nearest-centroid index per value; centroids sorted ascending.

    Equidistant values go to the lower index (d_left <= d_right wins).
    """
    pos = np.searchsorted(centroids, values)
    pos = np.clip(pos, 1, centroids.size - 1) if centroids.size > 1 else np.zeros_like(pos)
    if centroids.size == 1:
        return np.zeros(values.shape, dtype=np.int64)
    left = pos - 1
    d_left = values - centroids[left]
    d_right = centroids[pos] - values
    return np.where(d_left <= d_right, left, pos)


def _lloyd_fit(sample: np.ndarray, k: int, max_iters: int, rel_tol: float):
    """Lloyd iteration on a sorted sample; returns (centroids, sse_history)."""
    n = sample.size
    ranks = ((np.arange(k) + 0.5) * n / k).astype(np.int64)
    centroids = sample[ranks].astype(np.float64)
    centroids = np.sort(centroids)
    history = []
    prev_sse = math.inf
    for _ in range(max_iters):
        idx = _assign_sorted(sample, centroids)
        dist = (sample - centroids[idx]) ** 2
        sse = float(dist.sum())
        history.append(sse)
        if prev_sse - sse < rel_tol * prev_sse:
            break
        prev_sse = sse
        counts = np.bincount(idx, minlength=k)
        sums = np.bincount(idx, weights=sample, minlength=k)
        occupied = counts > 0
        centroids = centroids.copy()
        centroids[occupied] = sums[occupied] / counts[occupied]
        if not occupied.all():
            # Reseed each empty cluster at the point farthest from its
            # centroid, excluding points already taken by earlier reseeds.
            d = dist.copy()
            for j in np.nonzero(~occupied)[0]:
                far = int(np.argmax(d))
                if d[far] <= 0.0:
                    break
                centroids[j] = sample[far]
                d[far] = -1.0
        centroids = np.sort(centroids)
        if sse == 0.0:
            break
    return centroids, history


def lloyd_1d(
    values: np.ndarray, k: int, config: PalettizationConfig = PalettizationConfig()
) -> tuple[np.ndarray, float]:
    """Lloyd k-means with deterministic quantile init.

    Fits on a strided subsample of at most ``config.sample_limit`` sorted
    values, then assigns every value to the fitted centroids. Returns
    (centroids ascending, SSE over all values).
    """
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        raise ValueError("empty input")
    if k < 1:
        raise ValueError("k must be >= 1")
    svals = np.sort(values)
    distinct = _distinct_count(svals)
    if k > distinct:
        raise ValueError(f"k={k} exceeds distinct value count {distinct}")
    stride = -(-svals.size // config.sample_limit)
    sample = svals[::stride]
    k_fit = min(k, _distinct_count(sample))
    centroids, _ = _lloyd_fit(sample, k_fit, config.lloyd_max_iters, config.lloyd_rel_tol)
    centroids = np.unique(centroids)
    idx = _assign_sorted(svals, centroids)
    cost = float(((svals - centroids[idx]) ** 2).sum())
    return centroids, cost


def _cluster(values_f64: np.ndarray, k: int, config: PalettizationConfig) -> np.ndarray:
    if values_f64.size <= EXACT_DP_MAX_ELEMENTS or config.strategy == "exact_dp":
        centroids, _ = kmeans_1d_exact(np.sort(values_f64), k)
    else:
        centroids, _ = lloyd_1d(values_f64, k, config)
    return centroids


def palettize_tensor(
    t: Tensor, config: PalettizationConfig = PalettizationConfig()
) -> Tensor | PalettizedTensor:
    """Palettize ``t`` per ``config``; tensors below ``min_elements`` pass through.

    The LUT holds the clustered centroids rounded to the tensor dtype
    (deduplicated if rounding collides), sorted ascending and padded to
    2**n_bits entries by repeating the last centroid. Values map to their
    nearest LUT entry, ties to the lower index.
    """
    if t.numel < config.min_elements:
        return t
    values = t.data.astype(np.float64)
    distinct = _distinct_count(np.sort(values))
    k = min(1 << config.n_bits, distinct)
    centroids = _cluster(values, k, config)

    lut_live = np.unique(np.asarray(centroids, dtype=np.float64).astype(DTYPES[t.dtype]))
    idx = _assign_sorted(values, lut_live.astype(np.float64))
    lut = np.concatenate([lut_live, np.repeat(lut_live[-1], (1 << config.n_bits) - lut_live.size)])
    return PalettizedTensor(
        name=t.name,
        n_bits=config.n_bits,
        lut=lut,
        lut_dtype=t.dtype,
        shape=t.shape,
        packed_indices=pack_indices(idx, config.n_bits),
    )


def depalettize_tensor(p: PalettizedTensor) -> Tensor:
    """Expand packed indices through the LUT back into a raw tensor."""
    return Tensor(name=p.name, dtype=p.lut_dtype, shape=p.shape, data=p.lut[p.indices()])


def reconstruction_sse(t: Tensor, p: PalettizedTensor) -> tuple[float, float]:
    """(SSE, max abs error) between ``t`` and the depalettized form of ``p``, in f64."""
    orig = t.data.astype(np.float64)
    recon = p.lut[p.indices()].astype(np.float64)
    err = orig - recon
    return float((err**2).sum()), float(np.abs(err).max() if err.size else 0.0)


@dataclass(frozen=True)
class SizeRow:
    name: str
    raw_bytes: int
    compressed_bytes: int
    sse: float
    max_abs_err: float


@dataclass(frozen=True)
class SizeReport:
    """Per-tensor payload sizes plus totals for one compression run."""

    rows: list[SizeRow] = field(default_factory=list)

    @property
    def total_raw_bytes(self) -> int:
        return sum(r.raw_bytes for r in self.rows)

    @property
    def total_compressed_bytes(self) -> int:
        return sum(r.compressed_bytes for r in self.rows)

    @property
    def reduction_percent(self) -> float:
        raw = self.total_raw_bytes
        if raw == 0:
            return 0.0
        return 100.0 * (1.0 - self.total_compressed_bytes / raw)

    def to_obj(self) -> dict:
        return {
            "rows": [
                {
                    "name": r.name,
                    "raw_bytes": r.raw_bytes,
                    "compressed_bytes": r.compressed_bytes,
                    "sse": r.sse,
                    "max_abs_err": r.max_abs_err,
                }
                for r in self.rows
            ],
            "totals": {
                "raw_bytes": self.total_raw_bytes,
                "compressed_bytes": self.total_compressed_bytes,
                "reduction_percent": self.reduction_percent,
            },
        }

    def to_json(self) -> str:
        return canonical_json(self.to_obj())

    def to_table(self) -> str:
        headers = ("tensor", "raw B", "compressed B", "sse", "max|err|")
        body = [
            (r.name, str(r.raw_bytes), str(r.compressed_bytes), f"{r.sse:.6g}", f"{r.max_abs_err:.6g}")
            for r in self.rows
        ]
        body.append(
            (
                "TOTAL",
                str(self.total_raw_bytes),
                str(self.total_compressed_bytes),
                f"reduction {self.reduction_percent:.1f}%",
                "",
            )
        )
        widths = [max(len(row[i]) for row in [headers, *body]) for i in range(len(headers))]
        lines = ["  ".join(h.ljust(w) for h, w in zip(headers, widths)).rstrip()]
        lines += ["  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip() for row in body]
        return "\n".join(lines)


def compress_model(in_path, out_path, config: PalettizationConfig = PalettizationConfig()) -> SizeReport:
    """Palettize every eligible tensor of an artifact and write the result.

    Rows account for tensor payload bytes only (blob lengths, no header or
    alignment padding); totals are exact row sums.
    """
    tensors, metadata = weight_store.read_artifact(in_path)
    out_tensors: list[weight_store.AnyTensor] = []
    rows: list[SizeRow] = []
    for t in tensors:
        if isinstance(t, Tensor):
            out = palettize_tensor(t, config)
            if isinstance(out, PalettizedTensor):
                sse, max_err = reconstruction_sse(t, out)
            else:
                sse, max_err = 0.0, 0.0
            rows.append(SizeRow(t.name, t.payload_bytes, out.payload_bytes, sse, max_err))
            out_tensors.append(out)
        else:
            # Already palettized: copy through untouched.
            rows.append(SizeRow(t.name, t.payload_bytes, t.payload_bytes, 0.0, 0.0))
            out_tensors.append(t)
    weight_store.write_artifact(out_tensors, metadata, out_path)
    return SizeReport(rows=rows)


def storage_report(path) -> SizeReport:
    """Report stored payload bytes of an artifact against its raw-dtype equivalent."""
    tensors, _ = weight_store.read_artifact(path)
    rows = []
    for t in tensors:
        if isinstance(t, PalettizedTensor):
            raw_equiv = t.numel * DTYPES[t.lut_dtype].itemsize
        else:
            raw_equiv = t.payload_bytes
        rows.append(SizeRow(t.name, raw_equiv, t.payload_bytes, 0.0, 0.0))
    return SizeReport(rows=rows)
