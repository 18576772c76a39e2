"""Independent brute-force oracles and small builders shared across tests.

These deliberately avoid the library's own algorithms: clustering by
enumeration of contiguous splits, partitioning and knapsack by exhaustive
subset/cut enumeration, bit packing by per-bit arithmetic.
"""

import itertools
import math

import numpy as np

from mfr.weight_store import Tensor


def brute_kmeans_cost(values, k):
    """Optimal SSE over all contiguous splits of the sorted values."""
    vs = sorted(values)
    n = len(vs)
    best = math.inf
    for cuts in itertools.combinations(range(1, n), k - 1):
        bounds = [0, *cuts, n]
        cost = 0.0
        for a, b in zip(bounds, bounds[1:]):
            seg = vs[a:b]
            mu = sum(seg) / len(seg)
            cost += sum((x - mu) ** 2 for x in seg)
        best = min(best, cost)
    return best


def brute_minimax(sizes, n_chunks):
    """Minimal largest-chunk total over all contiguous partitions."""
    m = len(sizes)
    best = math.inf
    for cuts in itertools.combinations(range(1, m), n_chunks - 1):
        bounds = [0, *cuts, m]
        best = min(best, max(sum(sizes[a:b]) for a, b in zip(bounds, bounds[1:])))
    return best


def brute_knapsack(items, budget_bytes):
    """items: list of (garment_id, size_bytes, score). Enumerates all subsets
    under the KiB-quantized budget; tie-break (max score, min byte total,
    lexicographically smallest id tuple). Returns the sorted id list."""
    capacity = budget_bytes // 1024
    ids = sorted(i[0] for i in items)
    by_id = {i[0]: i for i in items}
    best_key, best_set = None, []
    for r in range(len(ids) + 1):
        for sub in itertools.combinations(ids, r):
            if sum(-(-by_id[i][1] // 1024) for i in sub) > capacity:
                continue
            score = sum(by_id[i][2] for i in sub)
            size = sum(by_id[i][1] for i in sub)
            key = (-score, size, sub)
            if best_key is None or key < best_key:
                best_key, best_set = key, list(sub)
    return best_set


def pack_bits_reference(indices, n_bits):
    """Per-bit reference packing: bit j of the stream lands in byte j//8 at
    position j%8."""
    total = len(indices) * n_bits
    out = bytearray(-(-total // 8))
    for i, idx in enumerate(indices):
        for b in range(n_bits):
            if (idx >> b) & 1:
                g = i * n_bits + b
                out[g // 8] |= 1 << (g % 8)
    return bytes(out)


def random_tensor(rng, name="t", dtype="f32", shape=(8,), distinct=None):
    n = int(np.prod(shape))
    if distinct is None:
        data = rng.standard_normal(n)
    else:
        pool = rng.standard_normal(distinct)
        data = pool[rng.integers(0, distinct, size=n)]
    return Tensor(name, dtype, shape, data.astype(np.float16 if dtype == "f16" else np.float32))


def pearson(a, b):
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    return float(np.corrcoef(a, b)[0, 1])
