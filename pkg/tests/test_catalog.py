import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mfr import weight_store as ws
from mfr.catalog import Catalog, CatalogError, GarmentRecord, prompt_text
from mfr.weight_store import Tensor

from helpers import brute_knapsack


def _artifact(root, name="m.mfrw"):
    (root / "models").mkdir(parents=True, exist_ok=True)
    t = Tensor("texture", "f32", (4,), np.arange(4, dtype=np.float32))
    ws.write_artifact([t], {"model_id": name}, root / "models" / name)
    return f"models/{name}"


def _record(rel, **kw):
    defaults = dict(
        garment_id="g1",
        display_name="Garment One",
        garment_class="shirt",
        identifier_token="rtr",
        artifact=rel,
        size_bytes=100,
        interest_score=1.0,
    )
    defaults.update(kw)
    return GarmentRecord(**defaults)


def test_register_and_list(tmp_path):
    cat = Catalog(tmp_path)
    rel = _artifact(tmp_path)
    cat.register_garment(_record(rel))
    assert [r.garment_id for r in cat.list_garments()] == ["g1"]
    # reload from disk sees the same record
    again = Catalog(tmp_path)
    assert again.get("g1").identifier_token == "rtr"


def test_duplicate_token_class_rejected(tmp_path):
    cat = Catalog(tmp_path)
    rel = _artifact(tmp_path)
    cat.register_garment(_record(rel))
    with pytest.raises(CatalogError, match="duplicate"):
        cat.register_garment(_record(rel, garment_id="g2"))
    # same token with a different class is fine
    cat.register_garment(_record(rel, garment_id="g3", garment_class="dress"))


def test_invalid_tokens_rejected(tmp_path):
    rel = "models/whatever.mfrw"
    with pytest.raises(CatalogError, match="ordinary word"):
        _record(rel, identifier_token="shirt")
    with pytest.raises(CatalogError, match="lowercase"):
        _record(rel, identifier_token="RTR")
    with pytest.raises(CatalogError, match="lowercase"):
        _record(rel, identifier_token="")


def test_corrupt_artifact_rejected_at_registration(tmp_path):
    cat = Catalog(tmp_path)
    rel = _artifact(tmp_path)
    target = tmp_path / rel
    raw = bytearray(target.read_bytes())
    raw[:4] = b"QQQQ"
    target.write_bytes(bytes(raw))
    with pytest.raises(CatalogError, match="verification failed"):
        cat.register_garment(_record(rel))


@pytest.mark.parametrize(
    "token,klass,expected",
    [
        ("rtr", "shirt", "a photo of an rtr shirt"),
        ("zq", "dress", "a photo of a zq dress"),
        ("ohwx", "coat", "a photo of an ohwx coat"),
        ("kxv", "hat", "a photo of a kxv hat"),
    ],
)
def test_prompt_template(token, klass, expected):
    assert prompt_text(token, klass) == expected


def test_prompt_for_unknown_garment(tmp_path):
    with pytest.raises(CatalogError, match="unknown garment"):
        Catalog(tmp_path).prompt_for("nope")


def test_list_filter_and_order(tmp_path):
    cat = Catalog(tmp_path)
    rel = _artifact(tmp_path)
    cat.register_garment(_record(rel, garment_id="d1", display_name="Bravo", garment_class="dress", identifier_token="aaq"))
    cat.register_garment(_record(rel, garment_id="s1", display_name="Alpha", garment_class="shirt", identifier_token="bbq"))
    cat.register_garment(_record(rel, garment_id="d2", display_name="Alpha", garment_class="dress", identifier_token="ccq"))
    assert [r.garment_id for r in cat.list_garments()] == ["d2", "s1", "d1"]
    assert [r.garment_id for r in cat.list_garments("dress")] == ["d2", "d1"]
    assert cat.list_garments("sock") == []


def _plan_catalog(tmp_path, items):
    cat = Catalog(tmp_path)
    rel = _artifact(tmp_path)
    for i, (gid, size, score) in enumerate(items):
        cat.register_garment(
            _record(rel, garment_id=gid, identifier_token=f"tk{i}", size_bytes=size, interest_score=score)
        )
    return cat


def test_plan_example(tmp_path):
    cat = _plan_catalog(
        tmp_path, [("A", 5 * 1024, 10.0), ("B", 5 * 1024, 6.0), ("C", 9 * 1024, 11.0)]
    )
    assert cat.plan_downloads(10 * 1024) == ["A", "B"]
    assert cat.plan_downloads(0) == []
    assert cat.plan_downloads(19 * 1024) == ["A", "B", "C"]


def test_plan_skips_downloaded(tmp_path):
    cat = _plan_catalog(tmp_path, [("A", 1024, 5.0), ("B", 1024, 4.0)])
    cat.set_downloaded("A")
    assert cat.plan_downloads(1024) == ["B"]


@settings(max_examples=40)
@given(data=st.data())
def test_plan_matches_enumeration(tmp_path_factory, data):
    n = data.draw(st.integers(0, 8))
    items = [
        (
            f"g{i:02d}",
            data.draw(st.integers(1, 20)) * 1024,
            float(data.draw(st.integers(0, 50))),
        )
        for i in range(n)
    ]
    budget = data.draw(st.integers(0, 64)) * 1024
    root = tmp_path_factory.mktemp("plan")
    cat = _plan_catalog(root, items)
    assert cat.plan_downloads(budget) == brute_knapsack(items, budget)


@settings(max_examples=20)
@given(data=st.data())
def test_plan_budget_monotone(tmp_path_factory, data):
    n = data.draw(st.integers(1, 7))
    items = [
        (f"g{i}", data.draw(st.integers(1, 10)) * 1024, float(data.draw(st.integers(0, 20))))
        for i in range(n)
    ]
    root = tmp_path_factory.mktemp("mono")
    cat = _plan_catalog(root, items)
    by_id = {gid: score for gid, _, score in items}
    budgets = sorted(data.draw(st.lists(st.integers(0, 80), min_size=2, max_size=5)))
    scores = [sum(by_id[g] for g in cat.plan_downloads(b * 1024)) for b in budgets]
    assert all(a <= b for a, b in zip(scores, scores[1:]))


def test_set_interest_persists(tmp_path):
    cat = _plan_catalog(tmp_path, [("A", 1024, 1.0)])
    cat.set_interest("A", 42.0)
    assert Catalog(tmp_path).get("A").interest_score == 42.0
    with pytest.raises(CatalogError):
        cat.set_interest("A", -1.0)
