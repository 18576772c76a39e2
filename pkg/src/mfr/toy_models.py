"""Per-garment toy denoisers plus the bundled demo catalog.

A toy denoiser is an MFRW artifact holding a procedural garment texture and
a strength scalar. Its noise prediction is constructed so the clean-image
estimate cancels algebraically: under the matching condition vector it
predicts exactly the noise that makes x0_pred equal the garment texture, and
without (or with a foreign) condition it steers toward neutral gray. That
turns "the prompt summons the garment" into arithmetic the test suite can
assert, with no learning anywhere.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from . import chunker, weight_store
from .catalog import Catalog, GarmentRecord, prompt_text
from .diffusion import Schedule, encode_condition, make_schedule
from .weight_store import Tensor

TEXTURE_NAME = "texture"
STRENGTH_NAME = "strength"

FIXTURE_SIZE = 64
# Fixture textures stay close to mid-gray so that guided clean-image
# estimates (scaled by the guidance weight) remain inside [-1,1] unclipped.
FIXTURE_LO = 0.42
FIXTURE_HI = 0.58


def nearest_resize(image: np.ndarray, hw: tuple[int, int]) -> np.ndarray:
    """Nearest-neighbor resize of an (H,W,C) array to (hw[0], hw[1], C)."""
    h, w = image.shape[:2]
    rows = (np.arange(hw[0]) * h // hw[0]).astype(np.int64)
    cols = (np.arange(hw[1]) * w // hw[1]).astype(np.int64)
    return image[rows][:, cols]


class ToyDenoiser:
    """Denoiser steering x0_pred toward a garment texture when conditioned.

    With the matching condition: eps = (x_t - sqrt(ab_t) * target) /
    sqrt(1 - ab_t) where target is the texture mapped to [-1,1]. Otherwise
    the same expression toward neutral gray, scaled by ``strength``.
    """

    def __init__(self, texture: np.ndarray, strength: float, prompt: str, schedule: Schedule):
        texture = np.asarray(texture, dtype=np.float32)
        if texture.ndim != 3 or texture.shape[2] != 3:
            raise ValueError(f"texture must be (H,W,3), got {texture.shape}")
        if texture.min() < 0.0 or texture.max() > 1.0:
            raise ValueError("texture values must lie in [0,1]")
        if not 0.0 < strength <= 1.0:
            raise ValueError(f"strength must be in (0,1], got {strength}")
        self.target = 2.0 * texture - 1.0
        self.strength = np.float32(strength)
        self.prompt = prompt
        self.cond = encode_condition(prompt)
        self.schedule = schedule

    @classmethod
    def from_artifact(
        cls,
        tensors: list[weight_store.AnyTensor],
        metadata: dict,
        steps: int,
        image_hw: tuple[int, int] | None = None,
    ) -> "ToyDenoiser":
        from .palettizer import depalettize_tensor

        by_name = {}
        for t in tensors:
            if isinstance(t, weight_store.PalettizedTensor):
                t = depalettize_tensor(t)
            by_name[t.name] = t
        try:
            tex_t = by_name[TEXTURE_NAME]
            strength_t = by_name[STRENGTH_NAME]
        except KeyError as exc:
            raise ValueError(f"artifact lacks tensor {exc.args[0]!r}") from None
        texture = tex_t.data.astype(np.float32).reshape(tex_t.shape)
        if image_hw is not None and texture.shape[:2] != tuple(image_hw):
            texture = nearest_resize(texture, tuple(image_hw))
        prompt = prompt_text(metadata["garment_token"], metadata["garment_class"])
        return cls(
            texture=texture,
            strength=float(strength_t.data[0]),
            prompt=prompt,
            schedule=make_schedule(steps),
        )

    def predict(self, x_t: np.ndarray, t: int, cond: np.ndarray | None) -> np.ndarray:
        if x_t.shape != self.target.shape:
            raise ValueError(f"x_t shape {x_t.shape} does not match texture {self.target.shape}")
        ab = np.float32(self.schedule.alpha_bar_at(t))
        root_ab = np.sqrt(ab)
        root_1mab = np.sqrt(np.float32(1.0) - ab)
        if cond is not None and cond.shape == self.cond.shape and np.array_equal(cond, self.cond):
            return (x_t - root_ab * self.target) / root_1mab
        return self.strength * x_t / root_1mab


def _stripes(size: int) -> np.ndarray:
    rows = np.broadcast_to(((np.arange(size) // 8) % 2)[:, None], (size, size))
    img = np.where(rows, FIXTURE_HI, FIXTURE_LO).astype(np.float32)
    return np.repeat(img[:, :, None], 3, axis=2)


def _checker(size: int) -> np.ndarray:
    ix = np.arange(size) // 8
    grid = (ix[:, None] + ix[None, :]) % 2
    img = np.where(grid, FIXTURE_HI, FIXTURE_LO).astype(np.float32)
    return np.repeat(img[:, :, None], 3, axis=2)


def _gradient(size: int) -> np.ndarray:
    ramp = FIXTURE_LO + (FIXTURE_HI - FIXTURE_LO) * (np.arange(size) / (size - 1))
    img = np.repeat(ramp[None, :].astype(np.float32), size, axis=0)
    return np.repeat(img[:, :, None], 3, axis=2)


FIXTURES = (
    # (garment_id, display_name, class, token, texture builder, interest, chunked)
    ("fx-stripes", "Striped Shirt", "shirt", "rtr", _stripes, 10.0, False),
    ("fx-checker", "Checker Shirt", "shirt", "vqx", _checker, 6.0, True),
    ("fx-gradient", "Gradient Dress", "dress", "zq", _gradient, 11.0, False),
)


def fixture_texture(garment_id: str, size: int = FIXTURE_SIZE) -> np.ndarray:
    for gid, _, _, _, builder, _, _ in FIXTURES:
        if gid == garment_id:
            return builder(size)
    raise ValueError(f"unknown fixture {garment_id!r}")


def _fixture_tensors(texture: np.ndarray) -> list[Tensor]:
    return [
        Tensor(TEXTURE_NAME, "f32", texture.shape, texture.reshape(-1)),
        Tensor(STRENGTH_NAME, "f32", (1,), np.array([1.0], dtype=np.float32)),
    ]


def make_fixture_catalog(out_dir) -> Catalog:
    """Build the three-garment demo catalog under ``out_dir``.

    Deterministic: running twice produces byte-identical trees. The checker
    shirt ships as a two-chunk artifact to exercise manifest loading.
    """
    out_dir = Path(out_dir)
    models = out_dir / "models"
    models.mkdir(parents=True, exist_ok=True)
    cat = Catalog(out_dir)
    for gid, display, klass, token, builder, interest, chunked in FIXTURES:
        texture = builder(FIXTURE_SIZE)
        tensors = _fixture_tensors(texture)
        metadata = {"model_id": gid, "garment_token": token, "garment_class": klass}
        if chunked:
            single = models / f"{gid}.mfrw"
            weight_store.write_artifact(tensors, metadata, single)
            chunk_dir = models / gid
            chunker.write_chunks(single, chunk_dir, 2)
            single.unlink()
            rel = f"models/{gid}/{chunker.MANIFEST_NAME}"
            size = sum(f.stat().st_size for f in chunk_dir.glob("chunk_*.mfrw"))
        else:
            path = models / f"{gid}.mfrw"
            weight_store.write_artifact(tensors, metadata, path)
            rel = f"models/{gid}.mfrw"
            size = path.stat().st_size
        cat.register_garment(
            GarmentRecord(
                garment_id=gid,
                display_name=display,
                garment_class=klass,
                identifier_token=token,
                artifact=rel,
                size_bytes=size,
                interest_score=interest,
                downloaded=False,
            )
        )
    return cat


def load_denoiser(cat: Catalog, garment_id: str, steps: int, image_hw: tuple[int, int]) -> ToyDenoiser:
    """Load a garment's denoiser from its artifact (chunked or single-file)."""
    record = cat.get(garment_id)
    path = cat.artifact_path(record)
    if record.is_chunked:
        tensors, metadata = chunker.load_chunked(path)
    else:
        tensors, metadata = weight_store.read_artifact(path)
    return ToyDenoiser.from_artifact(tensors, metadata, steps, image_hw)
