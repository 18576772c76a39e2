#!/usr/bin/env python3
"""Run the whole try-on pipeline headlessly and save the intermediate images.

Vendor side: install the fixture catalog, palettize one garment model and
split it into two chunks. App side: register the shipped (compressed +
chunked) model in a fresh data dir, generate over a half-image mask, then
erase a horizontal band. Outputs land in the chosen directory as PNGs:
original, mask, generated, eraser, final.

Usage: python scripts/try_on_demo.py [--out-dir DIR] [--seed N] [--garment ID]
"""

import argparse
import tempfile
from pathlib import Path

import numpy as np

from mfr import chunker, images
from mfr.catalog import Catalog, GarmentRecord
from mfr.diffusion import GenerationParams, encode_condition, erase_blend, inpaint_generate
from mfr.palettizer import PalettizationConfig, compress_model
from mfr.toy_models import load_denoiser, make_fixture_catalog


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out-dir", default=None)
    parser.add_argument("--seed", type=int, default=7)
    parser.add_argument("--garment", default="fx-stripes")
    args = parser.parse_args()

    out_dir = Path(args.out_dir) if args.out_dir else Path(tempfile.mkdtemp(prefix="mfr-demo-"))
    out_dir.mkdir(parents=True, exist_ok=True)

    vendor = make_fixture_catalog(out_dir / "vendor")
    record = vendor.get(args.garment)
    if record.is_chunked:
        raise SystemExit(f"{args.garment} ships chunked already; pick a single-file fixture")

    # vendor pipeline: palettize, then split into two similarly-sized chunks
    ship_root = out_dir / "ship"
    (ship_root / "models").mkdir(parents=True, exist_ok=True)
    compressed = ship_root / "models" / f"{record.garment_id}.mfrw"
    report = compress_model(vendor.artifact_path(record), compressed, PalettizationConfig(n_bits=6))
    print(report.to_table())
    chunk_dir = ship_root / "models" / record.garment_id
    chunker.write_chunks(compressed, chunk_dir, 2)
    compressed.unlink()

    app_catalog = Catalog(ship_root)
    shipped = app_catalog.register_garment(
        GarmentRecord(
            garment_id=record.garment_id,
            display_name=record.display_name,
            garment_class=record.garment_class,
            identifier_token=record.identifier_token,
            artifact=f"models/{record.garment_id}/{chunker.MANIFEST_NAME}",
            size_bytes=sum(f.stat().st_size for f in chunk_dir.glob("chunk_*.mfrw")),
            interest_score=record.interest_score,
        )
    )
    print(f"shipped garment: {shipped.garment_id} ({shipped.size_bytes} bytes, 2 chunks)")

    # app pipeline: draw, generate, erase
    rng = np.random.default_rng(args.seed)
    original = rng.random((64, 64, 3)).astype(np.float32)
    mask = np.zeros((64, 64), dtype=np.float32)
    mask[:, 32:] = 1.0

    params = GenerationParams(seed=args.seed)
    denoiser = load_denoiser(app_catalog, shipped.garment_id, params.steps, (64, 64))
    cond = encode_condition(app_catalog.prompt_for(shipped.garment_id))
    generated = inpaint_generate(original, mask, denoiser, cond, params)

    eraser = np.zeros((64, 64), dtype=np.float32)
    eraser[24:40] = 1.0
    final = erase_blend(original, generated, eraser)

    for name, arr in [
        ("original.png", images.to_u8(original)),
        ("generated.png", images.to_u8(generated)),
        ("final.png", images.to_u8(final)),
    ]:
        (out_dir / name).write_bytes(images.encode_rgb(arr))
    (out_dir / "mask.png").write_bytes(images.encode_gray(images.to_u8(mask)))
    (out_dir / "eraser.png").write_bytes(images.encode_gray(images.to_u8(eraser)))
    print(f"images written to {out_dir}")


if __name__ == "__main__":
    main()
