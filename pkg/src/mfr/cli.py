"""Command-line entry point: compression, chunking, verification, kernel
benchmarks, headless generation, catalog management, and serving.

Data goes to stdout, diagnostics to stderr. Every subcommand exits 0 on
success and 1 with a single-line error on operation failure; usage mistakes
exit 2. ``--json`` switches data output to canonical JSON.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass
from pathlib import Path

import click

from . import attention, catalog as catalog_mod, chunker, diffusion, images, palettizer, toy_models, weight_store
from .canonical import canonical_json


@dataclass
class CliConfig:
    data_dir: Path
    seed: int
    quiet: bool
    as_json: bool

    def emit(self, obj, text: str) -> None:
        if self.as_json:
            click.echo(canonical_json(obj))
        elif not self.quiet:
            click.echo(text)


pass_config = click.make_pass_decorator(CliConfig)


def _fail(message: str) -> "click.ClickException":
    return click.ClickException(message)


@click.group()
@click.option("--data-dir", default=None, help="Data root (default: $MFR_HOME or ./mfr_data).")
@click.option("--seed", default=0, show_default=True, help="Default seed for seeded subcommands.")
@click.option("--quiet", is_flag=True, help="Suppress non-data output.")
@click.option("--json", "as_json", is_flag=True, help="Emit machine-readable canonical JSON.")
@click.pass_context
def main(ctx, data_dir, seed, quiet, as_json):
    """Local virtual try-on toolkit."""
    ctx.obj = CliConfig(
        data_dir=catalog_mod.data_root(data_dir), seed=seed, quiet=quiet, as_json=as_json
    )


@main.command()
@click.option("--bits", default=6, show_default=True, help="Palette bit width (1-8).")
@click.option("--in", "in_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
@click.option("--min-elements", default=4096, show_default=True)
@click.option(
    "--strategy",
    type=click.Choice(["lloyd", "exact_dp"]),
    default="lloyd",
    show_default=True,
    help="Clustering for large tensors (small ones always use the exact DP).",
)
@pass_config
def compress(cfg: CliConfig, bits, in_path, out_path, min_elements, strategy):
    """Palettize an artifact's tensors and report the size change."""
    try:
        pconf = palettizer.PalettizationConfig(
            n_bits=bits, strategy=strategy, min_elements=min_elements
        )
        report = palettizer.compress_model(in_path, out_path, pconf)
    except (ValueError, weight_store.ArtifactError) as exc:
        raise _fail(str(exc))
    cfg.emit(report.to_obj(), report.to_table())


@main.command()
@click.option("--n", "n_chunks", default=2, show_default=True, help="Number of chunks.")
@click.option("--in", "in_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out-dir", required=True, type=click.Path(file_okay=False))
@pass_config
def chunk(cfg: CliConfig, n_chunks, in_path, out_dir):
    """Split an artifact into similarly-sized chunk files plus a manifest."""
    try:
        manifest = chunker.write_chunks(in_path, out_dir, n_chunks)
    except (chunker.ChunkError, weight_store.ArtifactError) as exc:
        raise _fail(str(exc))
    lines = [f"wrote {manifest['n_chunks']} chunks to {out_dir}"]
    lines += [f"  {c['file']}  {c['bytes']} B  {c['sha256'][:12]}…" for c in manifest["chunks"]]
    cfg.emit(manifest, "\n".join(lines))


@main.command()
@click.argument("path", type=click.Path(exists=True, dir_okay=False))
@pass_config
def verify(cfg: CliConfig, path):
    """Validate an artifact file or chunk manifest; exits 1 on violations."""
    if path.endswith(".json"):
        violations = chunker.verify_manifest(path)
    else:
        violations = weight_store.verify_artifact(path)
    cfg.emit(
        {"path": path, "violations": violations},
        "ok" if not violations else "\n".join(violations),
    )
    if violations:
        sys.exit(1)


@main.command()
@click.argument("path", type=click.Path(exists=True, dir_okay=False))
@pass_config
def report(cfg: CliConfig, path):
    """Show stored payload bytes per tensor against the raw-dtype equivalent."""
    try:
        rep = palettizer.storage_report(path)
    except weight_store.ArtifactError as exc:
        raise _fail(str(exc))
    cfg.emit(rep.to_obj(), rep.to_table())


@main.command("bench-attn")
@click.option("--b", default=1, show_default=True)
@click.option("--h", default=4, show_default=True)
@click.option("--s", default=64, show_default=True)
@click.option("--d", default=32, show_default=True)
@click.option("--trials", default=3, show_default=True)
@click.option("--seed", default=None, type=int, help="Override the global --seed.")
@pass_config
def bench_attn(cfg: CliConfig, b, h, s, d, trials, seed):
    """Compare baseline vs split-einsum attention; always prints canonical JSON."""
    try:
        rep = attention.compare_kernels(
            [(b, h, s, d)], trials=trials, seed=cfg.seed if seed is None else seed
        )
    except ValueError as exc:
        raise _fail(str(exc))
    click.echo(canonical_json(rep))


@main.command()
@click.option("--garment", "garment_id", required=True)
@click.option("--image", "image_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--mask", "mask_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
@click.option("--steps", default=20, show_default=True)
@click.option("--guidance", default=5.0, show_default=True)
@click.option("--seed", default=None, type=int, help="Override the global --seed.")
@pass_config
def generate(cfg: CliConfig, garment_id, image_path, mask_path, out_path, steps, guidance, seed):
    """Headless try-on: inpaint the masked region with a garment's model.

    Unlike the HTTP service this path does not require the downloaded flag;
    it verifies and loads the artifact directly.
    """
    try:
        cat = catalog_mod.Catalog(cfg.data_dir)
        record = cat.get(garment_id)
        violations = cat.verify_garment_artifact(record)
        if violations:
            raise _fail(f"artifact verification failed: {violations[0]}")
        original = images.to_unit(images.read_rgb_file(image_path))
        mask = images.read_mask_file(mask_path)
        params = diffusion.GenerationParams(
            guidance_weight=guidance, steps=steps, seed=cfg.seed if seed is None else seed
        )
        denoiser = toy_models.load_denoiser(cat, garment_id, params.steps, original.shape[:2])
        cond = diffusion.encode_condition(cat.prompt_for(garment_id))
        result = diffusion.inpaint_generate(original, mask, denoiser, cond, params)
        Path(out_path).write_bytes(images.encode_rgb(images.to_u8(result)))
    except (catalog_mod.CatalogError, chunker.ChunkError, weight_store.ArtifactError,
            images.ImageError, ValueError) as exc:
        raise _fail(str(exc))
    cfg.emit({"out": out_path, "seed": params.seed}, f"wrote {out_path}")


@main.command()
@click.option("--original", "original_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--current", "current_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--mask", "mask_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
@pass_config
def erase(cfg: CliConfig, original_path, current_path, mask_path, out_path):
    """Blend the original back over a generated image where the eraser mask is set."""
    try:
        original = images.to_unit(images.read_rgb_file(original_path))
        current = images.to_unit(images.read_rgb_file(current_path))
        mask = images.read_mask_file(mask_path)
        out = diffusion.erase_blend(original, current, mask)
        Path(out_path).write_bytes(images.encode_rgb(images.to_u8(out)))
    except (images.ImageError, ValueError) as exc:
        raise _fail(str(exc))
    cfg.emit({"out": out_path}, f"wrote {out_path}")


@main.group()
def catalog():
    """Manage the garment catalog."""


@catalog.command("add")
@click.option("--fixtures", is_flag=True, help="Install the bundled demo garments.")
@click.option("--id", "garment_id", default=None)
@click.option("--name", "display_name", default=None)
@click.option("--class", "garment_class", default=None)
@click.option("--token", default=None)
@click.option("--artifact", default=None, help="Artifact path relative to the data dir.")
@click.option("--interest", default=0.0, show_default=True)
@click.option("--size-bytes", default=None, type=int, help="Override the on-disk size.")
@pass_config
def catalog_add(cfg: CliConfig, fixtures, garment_id, display_name, garment_class, token, artifact, interest, size_bytes):
    """Register one garment, or install the fixture catalog with --fixtures."""
    try:
        if fixtures:
            cat = toy_models.make_fixture_catalog(cfg.data_dir)
            ids = [r.garment_id for r in cat.list_garments()]
            cfg.emit({"added": ids}, "installed fixtures: " + ", ".join(ids))
            return
        missing = [
            flag
            for flag, value in (
                ("--id", garment_id),
                ("--name", display_name),
                ("--class", garment_class),
                ("--token", token),
                ("--artifact", artifact),
            )
            if value is None
        ]
        if missing:
            raise click.UsageError(f"missing {', '.join(missing)} (or use --fixtures)")
        cat = catalog_mod.Catalog(cfg.data_dir)
        if size_bytes is None:
            target = cfg.data_dir / artifact
            if not target.is_file():
                raise _fail(f"artifact {target} not found")
            size_bytes = target.stat().st_size
        record = catalog_mod.GarmentRecord(
            garment_id=garment_id,
            display_name=display_name,
            garment_class=garment_class,
            identifier_token=token,
            artifact=artifact,
            size_bytes=size_bytes,
            interest_score=interest,
        )
        cat.register_garment(record)
    except (catalog_mod.CatalogError, chunker.ChunkError, weight_store.ArtifactError) as exc:
        raise _fail(str(exc))
    cfg.emit(record.to_obj(), f"registered {garment_id}")


@catalog.command("list")
@click.option("--class", "garment_class", default=None)
@pass_config
def catalog_list(cfg: CliConfig, garment_class):
    """List garments, optionally filtered by class."""
    cat = catalog_mod.Catalog(cfg.data_dir)
    records = cat.list_garments(garment_class)
    rows = [r.to_obj() for r in records]
    text = "\n".join(
        f"{r.garment_id}  {r.display_name!r}  class={r.garment_class}  token={r.identifier_token}  "
        f"{r.size_bytes} B  interest={r.interest_score}  downloaded={r.downloaded}"
        for r in records
    )
    cfg.emit(rows, text if rows else "(empty catalog)")


@catalog.command("plan")
@click.option("--budget", required=True, type=int, help="Byte budget for prefetching.")
@pass_config
def catalog_plan(cfg: CliConfig, budget):
    """Plan which undownloaded garments to prefetch within the budget."""
    try:
        cat = catalog_mod.Catalog(cfg.data_dir)
        ids = cat.plan_downloads(budget)
    except catalog_mod.CatalogError as exc:
        raise _fail(str(exc))
    cfg.emit({"budget_bytes": budget, "garment_ids": ids}, " ".join(ids) if ids else "(nothing to prefetch)")


@main.command()
@click.option("--port", default=8008, show_default=True)
@click.option("--bind", default="127.0.0.1", show_default=True, help="Loopback by default; opt in to expose.")
@click.option("--static-dir", default=None, type=click.Path(file_okay=False, exists=True),
              help="Serve the browser UI build from this directory at /ui.")
@pass_config
def serve(cfg: CliConfig, port, bind, static_dir):
    """Run the HTTP try-on service."""
    import uvicorn

    from .service import create_app

    app = create_app(cfg.data_dir, static_dir=static_dir)
    if not cfg.quiet:
        click.echo(f"serving on http://{bind}:{port} (data dir: {cfg.data_dir})", err=True)
    uvicorn.run(app, host=bind, port=port, log_level="warning" if cfg.quiet else "info")


if __name__ == "__main__":
    main()
