"""Scaled dot-product attention in two layouts, plus an equivalence harness.

The baseline kernel works on (B, H, S, D) operands. The split variant views
the same operands as (B, H*D, 1, S) and processes head chunks by reducing
over the channel axis, never materializing a transposed copy of k; both
accumulate in f32 and must agree to within reduction-order noise. Timings
are reported, never asserted: they depend on this machine, not on any
deployment target.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from statistics import median

import numpy as np


@dataclass(frozen=True)
class AttentionInputs:
    """Query/key/value operands of shape (batch, heads, sequence, head_dim)."""

    q: np.ndarray
    k: np.ndarray
    v: np.ndarray
    scale: float | None = None

    def __post_init__(self):
        for name, a in (("q", self.q), ("k", self.k), ("v", self.v)):
            if a.ndim != 4:
                raise ValueError(f"{name} must be 4-D (B,H,S,D), got shape {a.shape}")
        if not (self.q.shape == self.k.shape == self.v.shape):
            raise ValueError(f"shape mismatch: q{self.q.shape} k{self.k.shape} v{self.v.shape}")
        b, h, s, d = self.q.shape
        if s < 1 or d < 1 or b < 1 or h < 1:
            raise ValueError(f"all dims must be >= 1, got {self.q.shape}")
        object.__setattr__(self, "q", np.ascontiguousarray(self.q, dtype=np.float32))
        object.__setattr__(self, "k", np.ascontiguousarray(self.k, dtype=np.float32))
        object.__setattr__(self, "v", np.ascontiguousarray(self.v, dtype=np.float32))
        if self.scale is None:
            object.__setattr__(self, "scale", 1.0 / float(np.sqrt(d)))

    @property
    def shape(self) -> tuple[int, int, int, int]:
        return self.q.shape


def _softmax_lastaxis(scores: np.ndarray) -> np.ndarray:
    m = scores.max(axis=-1, keepdims=True)
    e = np.exp(scores - m)
    return e / e.sum(axis=-1, keepdims=True)


def attention_baseline(inputs: AttentionInputs) -> np.ndarray:
    """Reference attention: out[b,h,s] = softmax(scale * q.k^T) @ v."""
    scores = np.einsum("bhsd,bhtd->bhst", inputs.q, inputs.k) * np.float32(inputs.scale)
    weights = _softmax_lastaxis(scores)
    return np.einsum("bhst,bhtd->bhsd", weights, inputs.v)


def attention_split_einsum(inputs: AttentionInputs, head_chunk: int = 1) -> np.ndarray:
    """Same math in the channels-first layout.

    q, k, v are viewed as (B, H*D, 1, S); each chunk of ``head_chunk`` heads
    is reduced over its channel rows to form scores, softmaxed along the key
    axis, and accumulated back into (B, H, S, D).
    """
    if head_chunk < 1:
        raise ValueError("head_chunk must be >= 1")
    b, h, s, d = inputs.shape
    scale = np.float32(inputs.scale)
    q2 = inputs.q.transpose(0, 1, 3, 2).reshape(b, h * d, 1, s)
    k2 = inputs.k.transpose(0, 1, 3, 2).reshape(b, h * d, 1, s)
    v2 = inputs.v.transpose(0, 1, 3, 2).reshape(b, h * d, 1, s)

    out = np.empty((b, h, d, s), dtype=np.float32)
    for h0 in range(0, h, head_chunk):
        h1 = min(h0 + head_chunk, h)
        rows = slice(h0 * d, h1 * d)
        qc = q2[:, rows, 0, :].reshape(b, h1 - h0, d, s)
        kc = k2[:, rows, 0, :].reshape(b, h1 - h0, d, s)
        vc = v2[:, rows, 0, :].reshape(b, h1 - h0, d, s)
        scores = np.einsum("bcds,bcdt->bcst", qc, kc) * scale
        weights = _softmax_lastaxis(scores)
        out[:, h0:h1] = np.einsum("bcst,bcdt->bcds", weights, vc)
    return out.transpose(0, 1, 3, 2).copy()


def _seeded_inputs(shape: tuple[int, int, int, int], seed: int, index: int) -> AttentionInputs:
    rng = np.random.default_rng(np.random.SeedSequence([seed, index]))
    b, h, s, d = shape
    make = lambda: rng.standard_normal((b, h, s, d), dtype=np.float32)
    return AttentionInputs(q=make(), k=make(), v=make())


def compare_kernels(sizes: list[tuple[int, int, int, int]], trials: int = 3, seed: int = 0) -> dict:
    """Equivalence + timing report over seeded random inputs.

    Inputs depend only on (seed, size index), so diff values are identical
    across trial counts. All shapes are validated before any benchmarking.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    prepared = [_seeded_inputs(tuple(shape), seed, i) for i, shape in enumerate(sizes)]

    cases = []
    overall = 0.0
    for inputs in prepared:
        ref = attention_baseline(inputs)
        alt = attention_split_einsum(inputs)
        diff = float(np.abs(ref - alt).max())
        overall = max(overall, diff)
        times = {"baseline": [], "split_einsum": []}
        for _ in range(trials):
            t0 = time.perf_counter()
            attention_baseline(inputs)
            times["baseline"].append(time.perf_counter() - t0)
            t0 = time.perf_counter()
            attention_split_einsum(inputs)
            times["split_einsum"].append(time.perf_counter() - t0)
        bsz, h, s, d = inputs.shape
        cases.append(
            {
                "b": bsz,
                "h": h,
                "s": s,
                "d": d,
                "max_abs_diff": diff,
                "median_s_baseline": median(times["baseline"]),
                "median_s_split_einsum": median(times["split_einsum"]),
            }
        )
    return {"seed": seed, "trials": trials, "max_abs_diff": overall, "cases": cases}
