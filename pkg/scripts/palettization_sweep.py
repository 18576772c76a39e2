#!/usr/bin/env python3
"""Sweep palette bit widths over a synthetic model and tabulate the tradeoff.

Builds an artifact with a few weight-like tensors, compresses it at every
bit width from 1 to 8, and prints payload reduction alongside reconstruction
error. Small bit widths buy size at the cost of SSE; the curve makes the
pick (6 bits by default) visible.

Usage: python scripts/palettization_sweep.py [--elements N] [--out-dir DIR]
"""

import argparse
import tempfile
from pathlib import Path

import numpy as np

from mfr.palettizer import PalettizationConfig, compress_model
from mfr.weight_store import Tensor, write_artifact


def build_model(path: Path, elements: int) -> None:
    rng = np.random.default_rng(2024)
    tensors = [
        Tensor("unet.down.weight", "f32", (elements,), rng.standard_normal(elements).astype(np.float32)),
        Tensor("unet.mid.weight", "f16", (elements,), (rng.standard_normal(elements) * 0.02).astype(np.float16)),
        Tensor("text.proj.weight", "f32", (elements // 2,), rng.laplace(size=elements // 2).astype(np.float32)),
        Tensor("norm.bias", "f32", (64,), rng.standard_normal(64).astype(np.float32)),
    ]
    write_artifact(tensors, {"model_id": "sweep-demo"}, path)


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--elements", type=int, default=20000)
    parser.add_argument("--out-dir", default=None)
    args = parser.parse_args()

    out_dir = Path(args.out_dir) if args.out_dir else Path(tempfile.mkdtemp(prefix="mfr-sweep-"))
    out_dir.mkdir(parents=True, exist_ok=True)
    src = out_dir / "model.mfrw"
    build_model(src, args.elements)

    print(f"model: {src} ({src.stat().st_size} bytes on disk)")
    print(f"{'bits':>4}  {'payload B':>10}  {'reduction':>9}  {'total SSE':>12}  {'max|err|':>10}")
    for bits in range(1, 9):
        report = compress_model(
            src, out_dir / f"model.{bits}bit.mfrw", PalettizationConfig(n_bits=bits, min_elements=1)
        )
        sse = sum(r.sse for r in report.rows)
        max_err = max(r.max_abs_err for r in report.rows)
        print(
            f"{bits:>4}  {report.total_compressed_bytes:>10}  "
            f"{report.reduction_percent:>8.1f}%  {sse:>12.5g}  {max_err:>10.4g}"
        )


if __name__ == "__main__":
    main()
