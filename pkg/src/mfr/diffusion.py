"""Deterministic denoising loop: guidance combination, DDIM updates,
mask-constrained inpainting, and the result-page eraser blend.

Everything is seedable and reproducible: the only randomness is one
counter-based (Philox) stream per generation, the sampler is the
deterministic DDIM update, and a final hard composite guarantees that
pixels outside the mask are returned bit-exactly.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Protocol

import numpy as np

COND_DIM = 64


@dataclass(frozen=True)
class Schedule:
    """Linear beta schedule with cumulative alpha products."""

    T: int
    beta: np.ndarray
    alpha: np.ndarray
    alpha_bar: np.ndarray

    def alpha_bar_at(self, t: int) -> float:
        """alpha_bar for step t in [0, T]; t=0 is defined as exactly 1."""
        if not 0 <= t <= self.T:
            raise ValueError(f"t must be in [0, {self.T}], got {t}")
        return 1.0 if t == 0 else float(self.alpha_bar[t - 1])


def make_schedule(T: int) -> Schedule:
    """Linear beta from 1e-4 to 0.02 over T steps; products taken in f64,
    stored narrowed to f32."""
    if T < 1:
        raise ValueError(f"T must be >= 1, got {T}")
    beta = np.linspace(1e-4, 0.02, T, dtype=np.float64)
    alpha = 1.0 - beta
    alpha_bar = np.cumprod(alpha)
    return Schedule(
        T=T,
        beta=beta.astype(np.float32),
        alpha=alpha.astype(np.float32),
        alpha_bar=alpha_bar.astype(np.float32),
    )


class Denoiser(Protocol):
    """Anything that predicts the noise component of x_t, optionally conditioned."""

    def predict(self, x_t: np.ndarray, t: int, cond: np.ndarray | None) -> np.ndarray: ...


@dataclass(frozen=True)
class GenerationParams:
    guidance_weight: float = 5.0
    steps: int = 20
    seed: int = 0

    def __post_init__(self):
        if self.steps < 1:
            raise ValueError("steps must be >= 1")
        if not np.isfinite(self.guidance_weight):
            raise ValueError("guidance_weight must be finite")
        if not 0 <= int(self.seed) < (1 << 64):
            raise ValueError("seed must fit in 64 bits")


def encode_condition(prompt: str, dim: int = COND_DIM) -> np.ndarray:
    """Expand a prompt into a fixed-width condition vector via a stable
    64-bit hash; stands in for a text encoder."""
    digest = hashlib.blake2b(prompt.encode("utf-8"), digest_size=8).digest()
    key = int.from_bytes(digest, "little")
    rng = np.random.Generator(np.random.Philox(key=key))
    return rng.standard_normal(dim, dtype=np.float32)


def cfg_combine(eps_uncond: np.ndarray, eps_cond: np.ndarray, w: float) -> np.ndarray:
    """Classifier-free guidance: eps_uncond + w * (eps_cond - eps_uncond)."""
    if eps_uncond.shape != eps_cond.shape:
        raise ValueError(f"shape mismatch: {eps_uncond.shape} vs {eps_cond.shape}")
    return eps_uncond + np.float32(w) * (eps_cond - eps_uncond)


def ddim_step(x_t: np.ndarray, eps: np.ndarray, t: int, schedule: Schedule) -> np.ndarray:
    """Deterministic DDIM update from x_t to x_{t-1}; the final step (t=1)
    returns the clean-image prediction itself since alpha_bar(0) := 1."""
    if not 1 <= t <= schedule.T:
        raise ValueError(f"t must be in [1, {schedule.T}], got {t}")
    ab_t = np.float32(schedule.alpha_bar_at(t))
    ab_prev = np.float32(schedule.alpha_bar_at(t - 1))
    x0_pred = (x_t - np.sqrt(1 - ab_t) * eps) / np.sqrt(ab_t)
    return np.sqrt(ab_prev) * x0_pred + np.sqrt(1 - ab_prev) * eps


def reimpose_known_region(
    x: np.ndarray, x0: np.ndarray, mask_b: np.ndarray, alpha_bar_prev: float, noise: np.ndarray
) -> np.ndarray:
    """Replace the known (mask_b == 0) region of ``x`` with the original
    image forward-noised to the current step."""
    ab = np.float32(alpha_bar_prev)
    known = np.sqrt(ab) * x0 + np.sqrt(1 - ab) * noise
    return np.where(mask_b, x, known)


def _check_image(image: np.ndarray, name: str) -> np.ndarray:
    image = np.asarray(image, dtype=np.float32)
    if image.ndim != 3 or image.shape[2] != 3:
        raise ValueError(f"{name} must be (H,W,3), got {image.shape}")
    if image.min() < 0.0 or image.max() > 1.0:
        raise ValueError(f"{name} values must lie in [0,1]")
    return image


def _check_mask(mask: np.ndarray, hw: tuple[int, int]) -> np.ndarray:
    mask = np.asarray(mask, dtype=np.float32)
    if mask.shape != hw:
        raise ValueError(f"mask dims {mask.shape} do not match image dims {hw}")
    if mask.min() < 0.0 or mask.max() > 1.0:
        raise ValueError("mask values must lie in [0,1]")
    return mask


def inpaint_generate(
    original: np.ndarray,
    mask: np.ndarray,
    denoiser: Denoiser,
    cond: np.ndarray | None,
    params: GenerationParams = GenerationParams(),
) -> np.ndarray:
    """Regenerate the masked region of ``original`` with the given denoiser.

    The loop runs in [-1,1] space from seeded Gaussian noise; after every
    DDIM step the known region is re-imposed as the forward-noised original
    (binarized mask), and the final result is hard-composited with the soft
    mask so that mask==0 pixels equal the input bit-exactly.
    """
    original = _check_image(original, "original")
    mask = _check_mask(mask, original.shape[:2])
    schedule = make_schedule(params.steps)
    w = params.guidance_weight

    x0 = (2.0 * original - 1.0).astype(np.float32)
    mask_b = (mask >= 0.5)[:, :, None]
    rng = np.random.Generator(np.random.Philox(key=int(params.seed)))
    x = rng.standard_normal(original.shape, dtype=np.float32)

    for t in range(schedule.T, 0, -1):
        eps_uncond = denoiser.predict(x, t, None)
        eps_cond = denoiser.predict(x, t, cond)
        eps = cfg_combine(eps_uncond, eps_cond, w)
        x = ddim_step(x, eps, t, schedule)
        noise = rng.standard_normal(original.shape, dtype=np.float32)
        x = reimpose_known_region(x, x0, mask_b, schedule.alpha_bar_at(t - 1), noise)

    result = np.clip((x + 1.0) / 2.0, 0.0, 1.0).astype(np.float32)
    m = mask[:, :, None]
    return (1.0 - m) * original + m * result


def erase_blend(original: np.ndarray, current: np.ndarray, eraser_mask: np.ndarray) -> np.ndarray:
    """Per-pixel blend restoring the original where the eraser was drawn:
    out = e * original + (1 - e) * current."""
    original = np.asarray(original, dtype=np.float32)
    current = np.asarray(current, dtype=np.float32)
    if original.shape != current.shape:
        raise ValueError(f"image dims differ: {original.shape} vs {current.shape}")
    e = _check_mask(eraser_mask, original.shape[:2])[:, :, None]
    return e * original + (1.0 - e) * current
