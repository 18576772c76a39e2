"""Acceptance suite: one test per contract criterion, each printing a
PASS/FAIL line (run with ``pytest tests/test_acceptance.py -v -s``).

Paper-scale numbers (billion-parameter models, whole-app size budgets,
mobile latency) are out of reach on a desk machine; these criteria pin the
desk-scale arithmetic and the algorithmic properties instead.
"""

import json
import time
from contextlib import contextmanager

import numpy as np
import pytest
from click.testing import CliRunner

from mfr import chunker, images, weight_store as ws
from mfr.attention import AttentionInputs, attention_baseline, attention_split_einsum
from mfr.catalog import Catalog, GarmentRecord
from mfr.cli import main as cli_main
from mfr.diffusion import GenerationParams, cfg_combine, encode_condition, inpaint_generate
from mfr.palettizer import (
    PalettizationConfig,
    compress_model,
    depalettize_tensor,
    kmeans_1d_exact,
    palettize_tensor,
)
from mfr.toy_models import FIXTURES, fixture_texture, load_denoiser, make_fixture_catalog
from mfr.weight_store import Tensor

from helpers import brute_kmeans_cost, brute_knapsack, brute_minimax, pearson, random_tensor


@contextmanager
def criterion(label):
    try:
        yield
    except BaseException:
        print(f"\nACCEPTANCE {label}: FAIL")
        raise
    print(f"\nACCEPTANCE {label}: PASS")


def test_c01_palettization_optimality():
    with criterion("C1 palettization-optimality"):
        rng = np.random.default_rng(101)
        start = time.perf_counter()
        for _ in range(500):
            n = int(rng.integers(1, 13))
            values = np.sort(rng.uniform(-100, 100, size=n))
            k = int(rng.integers(1, min(4, len(np.unique(values))) + 1))
            _, cost = kmeans_1d_exact(values, k)
            assert abs(cost - brute_kmeans_cost(values.tolist(), k)) <= 1e-9
        elapsed = time.perf_counter() - start
        assert elapsed < 10.0, f"took {elapsed:.1f}s"


def test_c02_palettization_exactness():
    with criterion("C2 palettization-exactness"):
        rng = np.random.default_rng(102)
        for n_bits in range(1, 9):
            for dtype in ("f32", "f16"):
                for n in (600, 5000):  # exact-DP path and Lloyd path
                    distinct = 1 << n_bits
                    t = random_tensor(rng, dtype=dtype, shape=(n,), distinct=distinct)
                    p = palettize_tensor(t, PalettizationConfig(n_bits=n_bits, min_elements=1))
                    assert depalettize_tensor(p) == t


def test_c03_size_arithmetic(tmp_path):
    with criterion("C3 size-arithmetic"):
        rng = np.random.default_rng(103)
        t = random_tensor(rng, dtype="f16", shape=(1000,))
        src, dst = tmp_path / "in.mfrw", tmp_path / "out.mfrw"
        ws.write_artifact([t], {"model_id": "m"}, src)
        report = compress_model(src, dst, PalettizationConfig(n_bits=6, min_elements=1))
        (row,) = report.rows
        assert row.raw_bytes == 2000
        assert row.compressed_bytes == 878
        assert report.reduction_percent == pytest.approx(56.1, abs=0.05)
        assert "reduction 56.1%" in report.to_table()

        # totals equal row sums on every fixture artifact
        fix_root = tmp_path / "fixtures"
        cat = make_fixture_catalog(fix_root)
        for record in cat.list_garments():
            if record.is_chunked:
                continue
            rep = compress_model(
                cat.artifact_path(record), tmp_path / f"{record.garment_id}.c.mfrw",
                PalettizationConfig(n_bits=6, min_elements=1),
            )
            assert rep.total_raw_bytes == sum(r.raw_bytes for r in rep.rows)
            assert rep.total_compressed_bytes == sum(r.compressed_bytes for r in rep.rows)
        mixed = [random_tensor(rng, name=f"t{i}", shape=(int(rng.integers(5, 6000)),)) for i in range(6)]
        ws.write_artifact(mixed, {}, tmp_path / "mixed.mfrw")
        rep = compress_model(tmp_path / "mixed.mfrw", tmp_path / "mixed.c.mfrw", PalettizationConfig())
        assert rep.total_raw_bytes == sum(r.raw_bytes for r in rep.rows)
        assert rep.total_compressed_bytes == sum(r.compressed_bytes for r in rep.rows)


def test_c04_chunking_optimality(tmp_path):
    with criterion("C4 chunking-optimality"):
        rng = np.random.default_rng(104)
        for _ in range(1000):
            length = int(rng.integers(1, 11))
            sizes = rng.integers(1, 64, size=length).tolist()
            n_chunks = int(rng.integers(1, min(3, length) + 1))
            ranges = chunker.split_plan(sizes, n_chunks)
            achieved = max(sum(sizes[a:b]) for a, b in ranges)
            assert achieved == brute_minimax(sizes, n_chunks)

        tensors = [random_tensor(rng, name=f"t{i}", shape=(int(rng.integers(8, 900)),)) for i in range(7)]
        src = tmp_path / "m.mfrw"
        ws.write_artifact(tensors, {"model_id": "m"}, src)
        chunker.write_chunks(src, tmp_path / "ch", 3)
        loaded, _ = chunker.load_chunked(tmp_path / "ch" / "manifest.json")
        assert loaded == tensors

        victim = tmp_path / "ch" / "chunk_001.mfrw"
        raw = bytearray(victim.read_bytes())
        raw[-1] ^= 0x01
        victim.write_bytes(bytes(raw))
        with pytest.raises(chunker.ChunkError, match="digest mismatch"):
            chunker.load_chunked(tmp_path / "ch" / "manifest.json")


def test_c05_kernel_equivalence():
    with criterion("C5 kernel-equivalence"):
        rng = np.random.default_rng(105)
        start = time.perf_counter()
        for _ in range(100):
            b = int(rng.integers(1, 3))
            h = int(rng.integers(1, 9))
            s = int(rng.integers(1, 65))
            d = int(rng.integers(1, 65))
            inputs = AttentionInputs(
                q=rng.standard_normal((b, h, s, d), dtype=np.float32),
                k=rng.standard_normal((b, h, s, d), dtype=np.float32),
                v=rng.standard_normal((b, h, s, d), dtype=np.float32),
            )
            assert np.abs(attention_baseline(inputs) - attention_split_einsum(inputs)).max() <= 1e-5
            ones = AttentionInputs(q=inputs.q, k=inputs.k, v=np.ones_like(inputs.v))
            for out in (attention_baseline(ones), attention_split_einsum(ones)):
                assert np.abs(out - 1.0).max() <= 1e-6  # softmax row sums
        elapsed = time.perf_counter() - start
        assert elapsed < 30.0, f"took {elapsed:.1f}s"


def test_c06_guidance_algebra():
    with criterion("C6 guidance-algebra"):
        rng = np.random.default_rng(106)
        a = rng.standard_normal((32, 32, 3), dtype=np.float32)
        b = rng.standard_normal((32, 32, 3), dtype=np.float32)
        assert np.array_equal(cfg_combine(a, b, 0.0), a)
        assert np.abs(cfg_combine(a, b, 1.0) - b).max() <= 1e-6
        assert np.array_equal(cfg_combine(a, a, 7.5), a)
        for w in (-2.0, 0.25, 3.0, 7.5):
            expected = a.astype(np.float64) + w * (b.astype(np.float64) - a.astype(np.float64))
            assert np.abs(cfg_combine(a, b, w) - expected).max() <= 1e-5


def test_c07_inpainting_preservation(tmp_path):
    with criterion("C7 inpainting-preservation"):
        cat = make_fixture_catalog(tmp_path)
        rng = np.random.default_rng(107)
        gids = [f[0] for f in FIXTURES]
        for case in range(50):
            gid = gids[case % len(gids)]
            original = rng.random((32, 32, 3)).astype(np.float32)
            mask = (rng.integers(0, 256, size=(32, 32)) / 255.0).astype(np.float32)
            params = GenerationParams(steps=8, seed=int(rng.integers(0, 2**32)))
            den = load_denoiser(cat, gid, params.steps, (32, 32))
            cond = encode_condition(cat.prompt_for(gid))
            out = inpaint_generate(original, mask, den, cond, params)
            zero = mask == 0.0
            assert np.array_equal(out[zero], original[zero])
            if case < 3:
                again = inpaint_generate(original, mask, den, cond, params)
                assert np.array_equal(out, again)


def test_c08_try_on_signal(tmp_path):
    with criterion("C8 try-on-signal"):
        cat = make_fixture_catalog(tmp_path)
        rng = np.random.default_rng(108)
        gids = [f[0] for f in FIXTURES]
        start = time.perf_counter()
        mask = np.zeros((64, 64), dtype=np.float32)
        mask[:, :32] = 1.0
        m = mask.astype(bool)
        for gid in gids:
            den = load_denoiser(cat, gid, 20, (64, 64))
            cond = encode_condition(cat.prompt_for(gid))
            for seed in range(5):
                original = rng.random((64, 64, 3)).astype(np.float32)
                out = inpaint_generate(original, mask, den, cond, GenerationParams(seed=seed))
                own = pearson(out[m], fixture_texture(gid)[m])
                assert own > 0.9, f"{gid} seed {seed}: correlation {own:.3f}"
                for other in gids:
                    if other != gid:
                        assert own > pearson(out[m], fixture_texture(other)[m])
        elapsed = time.perf_counter() - start
        assert elapsed < 60.0, f"took {elapsed:.1f}s"


def test_c09_knapsack_planner(tmp_path):
    with criterion("C9 knapsack-planner"):
        rng = np.random.default_rng(109)
        art_root = tmp_path / "shared"
        (art_root / "models").mkdir(parents=True)
        t = Tensor("w", "f32", (4,), np.arange(4, dtype=np.float32))
        ws.write_artifact([t], {}, art_root / "models" / "m.mfrw")

        for case in range(200):
            n = int(rng.integers(0, 13))
            items = [
                (f"g{i:02d}", int(rng.integers(1, 20 * 1024)), float(rng.integers(0, 60)))
                for i in range(n)
            ]
            root = tmp_path / f"cat{case:03d}"
            (root / "models").mkdir(parents=True)
            (root / "models" / "m.mfrw").write_bytes((art_root / "models" / "m.mfrw").read_bytes())
            cat = Catalog(root)
            for i, (gid, size, score) in enumerate(items):
                cat.register_garment(
                    GarmentRecord(
                        garment_id=gid,
                        display_name=gid,
                        garment_class="shirt",
                        identifier_token=f"tk{i}",
                        artifact="models/m.mfrw",
                        size_bytes=size,
                        interest_score=score,
                    )
                )
            budget = int(rng.integers(0, 40)) * 1024
            assert cat.plan_downloads(budget) == brute_knapsack(items, budget)
            if case % 20 == 0 and items:
                by_id = {gid: score for gid, _, score in items}
                scores = [
                    sum(by_id[g] for g in cat.plan_downloads(b * 1024)) for b in (0, 5, 10, 20, 40)
                ]
                assert all(x <= y for x, y in zip(scores, scores[1:]))


def test_c10_format_round_trip(tmp_path):
    with criterion("C10 format-round-trip"):
        rng = np.random.default_rng(110)
        import hashlib

        for case in range(1000):
            tensors = []
            for i in range(int(rng.integers(0, 4))):
                dtype = "f16" if rng.integers(0, 2) else "f32"
                shape = tuple(int(x) for x in rng.integers(1, 6, size=int(rng.integers(1, 4))))
                tensors.append(random_tensor(rng, name=f"t{i}", dtype=dtype, shape=shape))
            path = tmp_path / "rt.mfrw"
            ws.write_artifact(tensors, {"model_id": f"m{case}"}, path)
            first = path.read_bytes()
            loaded, metadata = ws.read_artifact(path)
            assert loaded == tensors and metadata["model_id"] == f"m{case}"
            ws.write_artifact(loaded, metadata, path)
            assert hashlib.sha256(path.read_bytes()).digest() == hashlib.sha256(first).digest()

        # corrupt-file fixtures produce their named errors
        t = random_tensor(rng, name="w", shape=(64,))
        good = tmp_path / "good.mfrw"
        ws.write_artifact([t], {}, good)
        raw = good.read_bytes()

        bad_magic = tmp_path / "bad_magic.mfrw"
        bad_magic.write_bytes(b"XXXX" + raw[4:])
        assert any("bad magic" in v for v in ws.verify_artifact(bad_magic))

        bad_version = tmp_path / "bad_version.mfrw"
        bad_version.write_bytes(raw[:4] + (7).to_bytes(4, "little") + raw[8:])
        assert any("unsupported version" in v for v in ws.verify_artifact(bad_version))

        truncated = tmp_path / "trunc.mfrw"
        truncated.write_bytes(raw[:-10])
        assert any("truncated" in v for v in ws.verify_artifact(truncated))

        empty = tmp_path / "zero.mfrw"
        empty.write_bytes(b"")
        assert any("truncated header" in v for v in ws.verify_artifact(empty))

        pal = palettize_tensor(
            Tensor("p", "f32", (64,), np.repeat([0.0, 1.0], 32).astype(np.float32)),
            PalettizationConfig(n_bits=6, min_elements=1),
        )
        pal_path = tmp_path / "pal.mfrw"
        ws.write_artifact([pal], {}, pal_path)
        praw = bytearray(pal_path.read_bytes())
        praw[-1] = 0xFF
        pal_path.write_bytes(bytes(praw))
        assert any("index out of range" in v and "'p'" in v for v in ws.verify_artifact(pal_path))


def test_c11_end_to_end_cli(tmp_path):
    with criterion("C11 end-to-end-cli"):
        runner = CliRunner()
        rng = np.random.default_rng(111)

        def run(*args, expect=0):
            result = runner.invoke(cli_main, list(args))
            assert result.exit_code == expect, f"{args}: exit {result.exit_code}\n{result.output}"
            return result

        # vendor side: fixtures hold the raw models
        vendor = tmp_path / "vendor"
        run("--data-dir", str(vendor), "catalog", "add", "--fixtures")

        # ship side: compress, chunk, and register one garment
        ship = tmp_path / "ship"
        (ship / "models").mkdir(parents=True)
        run(
            "compress", "--bits", "6",
            "--in", str(vendor / "models" / "fx-gradient.mfrw"),
            "--out", str(ship / "models" / "dress.mfrw"),
        )
        run("chunk", "--n", "2", "--in", str(ship / "models" / "dress.mfrw"),
            "--out-dir", str(ship / "models" / "dress"))
        run("verify", str(ship / "models" / "dress" / "manifest.json"))
        run(
            "--data-dir", str(ship), "catalog", "add",
            "--id", "dress", "--name", "Gradient Dress", "--class", "dress",
            "--token", "zq", "--artifact", "models/dress/manifest.json",
        )

        # customer side: generate with a half mask, then erase a stripe
        image = tmp_path / "me.png"
        image.write_bytes(images.encode_rgb((rng.random((64, 64, 3)) * 255).astype(np.uint8)))
        half = np.zeros((64, 64), dtype=np.uint8)
        half[:, 32:] = 255
        mask = tmp_path / "mask.png"
        mask.write_bytes(images.encode_gray(half))
        out = tmp_path / "result.png"
        run(
            "--data-dir", str(ship), "generate", "--garment", "dress",
            "--image", str(image), "--mask", str(mask), "--out", str(out), "--seed", "4",
        )
        generated = images.read_rgb_file(out)
        original = images.read_rgb_file(image)
        assert np.array_equal(generated[:, :32], original[:, :32])
        tex = fixture_texture("fx-gradient")
        assert pearson(generated[:, 32:], (tex * 255)[:, 32:]) > 0.9

        stripe = np.zeros((64, 64), dtype=np.uint8)
        stripe[20:40] = 255
        eraser = tmp_path / "eraser.png"
        eraser.write_bytes(images.encode_gray(stripe))
        final = tmp_path / "final.png"
        run("erase", "--original", str(image), "--current", str(out),
            "--mask", str(eraser), "--out", str(final))
        done = images.read_rgb_file(final)
        assert np.array_equal(done[20:40], original[20:40])  # erased region restored
        assert np.array_equal(done[:20], generated[:20])
        assert np.array_equal(done[40:], generated[40:])

        # exit-code contract: op failure -> 1, usage failure -> 2
        run("--data-dir", str(ship), "generate", "--garment", "nope",
            "--image", str(image), "--mask", str(mask), "--out", str(out), expect=1)
        run("definitely-not-a-command", expect=2)
