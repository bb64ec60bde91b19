import json

import pytest

from plausibility_mc.butterfly import (
    ButterflyParams,
    Flutter,
    ImplicitButterfly,
    MissingButterfly,
    build_body,
    build_butterfly,
    build_flutter,
    extend_wings,
    load_flutter,
    recurrence_count,
    save_flutter,
)
from plausibility_mc.formula import TOP, Height
from plausibility_mc.model import ModelError, load_model

from structural import butterfly_violations


def test_body_valuation_and_order():
    b = build_body(ButterflyParams(300, 50))
    c = "b300:"
    assert b.extension(Height(300)) == {c + "w0"}
    assert b.extension(Height(250)) == {c + "w1", c + "w3"}
    assert b.extension(Height(350)) == {c + "w2", c + "w4"}
    strict = {(a, x, y) for a in b.agents for x in b.states for y in b.states if b.less(a, x, y)}
    assert strict == {
        ("R", c + "w1", c + "w0"), ("R", c + "w2", c + "w0"),
        ("C", c + "w3", c + "w0"), ("C", c + "w4", c + "w0"),
    }
    assert set(b.frontier) == {c + "w1", c + "w2", c + "w3", c + "w4"}


def test_body_needs_positive_difference():
    with pytest.raises(ModelError):
        ButterflyParams(300, 300)
    b = build_body(ButterflyParams(2, 1))
    assert b.heights == [1, 2, 3]


def test_hand_counts():
    # body 5; each of 4 leaves gets 2 children; each of those 8 gets 2 more
    assert [len(build_butterfly(ButterflyParams(300, 50, d)).states) for d in range(3)] == [5, 13, 29]


def test_first_wing_values():
    m = extend_wings(build_body(ButterflyParams(300, 50)), 1)
    assert sorted(n for s in m.states if s.startswith("b300:w1") and len(s) == 8 for n in m.heights_at(s)) == [200, 300]


def test_boundary_skips_negative_child():
    # w1 of the 60/50 body has value 10: only the +m child is added
    m = extend_wings(build_body(ButterflyParams(60, 50)), 1)
    assert "b60:w1+" in m.states and "b60:w1-" not in m.states
    assert "b60:w2-" in m.states  # 110 - 50 >= 0
    # value - m == 0 still adds the [0] child
    m = extend_wings(build_body(ButterflyParams(100, 50)), 1)
    assert m.heights_at("b100:w1-") == {0}


@pytest.mark.parametrize("k,m,d", [(300, 50, 0), (300, 50, 3), (120, 50, 3), (60, 50, 4), (2, 1, 5)])
def test_implicit_matches_inductive(k, m, d):
    explicit = build_butterfly(ButterflyParams(k, m, d))
    assert ImplicitButterfly(k, m, d).to_model() == explicit
    assert butterfly_violations(explicit, k, m, d) == []


def test_recurrence_when_nothing_is_cut():
    for d in range(1, 6):
        assert ImplicitButterfly(50 * (d + 1), 50, d).count() == recurrence_count(d) == 5 + 8 * (2**d - 1)
    # one margin short and the deepest minus child disappears
    assert ImplicitButterfly(50 * 6, 50, 6).count() < recurrence_count(6)


def test_implicit_component_structure():
    bf = ImplicitButterfly(300, 50, 4)
    for i in bf.states():
        for a in (0, 1):
            comp = bf.component(a, i)
            assert i in comp and len(comp) <= 3
            for j in comp:
                assert sorted(bf.component(a, j)) == sorted(comp)


def test_names_round_trip():
    bf = ImplicitButterfly(300, 50, 3)
    for i in bf.states():
        assert bf.index(bf.name(i)) == i
    with pytest.raises(KeyError):
        bf.index("w1----")


def test_flutter_selection():
    F = build_flutter(100, 500, 50, 6)
    w = F.resolve("b300:w2+")
    assert F.selection.select(Height(200), w) == F.center(200)
    v350 = F.resolve("b300:w2")
    assert F.value(v350) == 350
    assert F.selection.select(TOP, v350) == F.center(350)
    assert F.selection.select(TOP, F.center(300)) == F.center(300)
    with pytest.raises(MissingButterfly, match=r"MissingButterfly\(700\)"):
        F.selection.select(Height(700), w)


def test_flutter_omits_small_centers():
    F = Flutter(0, 600, 50, 2)
    assert F.centers[0] == 51
    with pytest.raises(MissingButterfly):
        F.center(50)


def test_flutter_labels():
    F = Flutter(0, 600, 50, 2)
    w = F.resolve("b250:w3-+")
    assert F.label(w) == "b250:w3-+"
    assert F.value(w) == 250 - 50 - 50 + 50


def test_flutter_save_load(tmp_path):
    F = Flutter(100, 140, 50, 2)
    save_flutter(F, tmp_path)
    manifest = json.loads((tmp_path / "flutter.json").read_text())
    assert manifest["selection"] == "butterfly-center"
    assert set(manifest["butterflies"]) == {str(k) for k in range(100, 141)}
    G = load_flutter(str(tmp_path))
    assert (G.k_lo, G.k_hi, G.m, G.d) == (100, 140, 50, 2)
    model = load_model((tmp_path / "b120.model").read_text())
    assert model == G.butterfly(120).to_model()


def test_structural_checker_catches_faults():
    from plausibility_mc.model import save_model

    text = save_model(build_butterfly(ButterflyParams(300, 50, 2)))
    assert butterfly_violations(load_model(text), 300, 40, 2)
    doubled = load_model(text.replace("atom [300]: b300:w0", "atom [300]: b300:w0 b300:w1"))
    assert "b300:w1 satisfies [250, 300]" in butterfly_violations(doubled, 300, 50, 2)


@pytest.mark.parametrize("k,m", [(2, 1), (150, 1), (150, 10), (150, 50), (300, 1), (300, 10), (300, 50)])
def test_structural_invariants(k, m):
    for d in range(7):
        model = build_butterfly(ButterflyParams(k, m, d))
        assert butterfly_violations(model, k, m, d) == []
