"""PNG boundary helpers: 8-bit RGB images and grayscale masks.

Images cross every external surface (CLI files, HTTP bodies) as PNG; inside
the toolkit they are float32 arrays in [0,1]. Masks use 255 = regenerate,
converted by /255.
"""

from __future__ import annotations

import io
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError


class ImageError(Exception):
    """Raised for undecodable or structurally wrong image payloads."""


def decode_rgb(data: bytes) -> np.ndarray:
    """Decode PNG bytes to a (H, W, 3) uint8 array."""
    try:
        with Image.open(io.BytesIO(data)) as im:
            if im.format != "PNG":
                raise ImageError(f"expected PNG, got {im.format}")
            return np.asarray(im.convert("RGB"), dtype=np.uint8)
    except (UnidentifiedImageError, OSError) as exc:
        raise ImageError(f"invalid image: {exc}") from exc


def decode_gray(data: bytes) -> np.ndarray:
    """Decode PNG bytes to a (H, W) uint8 array (luma conversion if needed)."""
    try:
        with Image.open(io.BytesIO(data)) as im:
            if im.format != "PNG":
                raise ImageError(f"expected PNG, got {im.format}")
            return np.asarray(im.convert("L"), dtype=np.uint8)
    except (UnidentifiedImageError, OSError) as exc:
        raise ImageError(f"invalid image: {exc}") from exc


def encode_rgb(arr: np.ndarray) -> bytes:
    arr = np.asarray(arr, dtype=np.uint8)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise ImageError(f"expected (H,W,3) array, got {arr.shape}")
    buf = io.BytesIO()
    Image.fromarray(arr, mode="RGB").save(buf, format="PNG")
    return buf.getvalue()


def encode_gray(arr: np.ndarray) -> bytes:
    arr = np.asarray(arr, dtype=np.uint8)
    if arr.ndim != 2:
        raise ImageError(f"expected (H,W) array, got {arr.shape}")
    buf = io.BytesIO()
    Image.fromarray(arr, mode="L").save(buf, format="PNG")
    return buf.getvalue()


def to_unit(arr: np.ndarray) -> np.ndarray:
    """uint8 -> float32 in [0,1]."""
    return arr.astype(np.float32) / np.float32(255.0)


def to_u8(arr: np.ndarray) -> np.ndarray:
    """float in [0,1] -> uint8 with round-to-nearest."""
    return np.clip(np.rint(np.asarray(arr, dtype=np.float32) * 255.0), 0, 255).astype(np.uint8)


def read_rgb_file(path) -> np.ndarray:
    return decode_rgb(Path(path).read_bytes())


def read_mask_file(path) -> np.ndarray:
    """Load a grayscale mask PNG as float32 in [0,1]."""
    return to_unit(decode_gray(Path(path).read_bytes()))
