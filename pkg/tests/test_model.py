import itertools

import pytest

from plausibility_mc.butterfly import ButterflyParams, build_body, build_butterfly
from plausibility_mc.formula import TOP, Height
from plausibility_mc.model import (
    MissingSelectionTarget,
    Model,
    ModelError,
    ModelFormatError,
    PreorderError,
    SuccessPostulateError,
    UnknownStateError,
    epistemic_component,
    load_model,
    max_plausible,
    save_model,
    select,
)

BODY_FILE = """\
agents: R C
states: w0 w1 w2 w3 w4
atom [300]: w0
atom [250]: w1 w3
atom [350]: w2 w4
order R closure=auto: w1<w0 w2<w0
order C closure=auto: w3<w0 w4<w0
frontier:                      # optional, space-separated ids
select [300] *: w0             # '*' = all states
select true w0: w0
"""


@pytest.fixture
def body():
    return build_body(ButterflyParams(300, 50))


def test_components_in_body(body):
    c = "b300:"
    assert epistemic_component(body, "R", c + "w0") == {c + "w0", c + "w1", c + "w2"}
    assert epistemic_component(body, "R", c + "w3") == {c + "w3"}
    assert epistemic_component(body, "C", c + "w0") == {c + "w0", c + "w3", c + "w4"}


def test_singleton_model():
    m = Model(["a"], ["R"], {}, {})
    assert epistemic_component(m, "R", "a") == {"a"}
    assert max_plausible(m, "R", ["a"]) == {"a"}


def test_max_plausible(body):
    c = "b300:"
    assert max_plausible(body, "R", [c + "w0", c + "w1", c + "w2"]) == {c + "w0"}
    assert max_plausible(body, "R", []) == frozenset()
    anti = Model(["a", "b"], ["R"], {}, {})
    assert max_plausible(anti, "R", ["a", "b"]) == {"a", "b"}


def test_unknown_state(body):
    with pytest.raises(UnknownStateError):
        body.component("R", "nope")


def test_load_body_file():
    m = load_model(BODY_FILE)
    assert m.less("R", "w1", "w0") and m.less("C", "w4", "w0")
    assert not m.leq("R", "w3", "w0")
    assert m.extension(Height(250)) == {"w1", "w3"}
    assert m.extension(TOP) == set(m.states)
    assert m.frontier == {}
    assert select(m.selection, Height(300), "w3") == "w0"


def test_load_matches_generated_body(body):
    text = BODY_FILE.replace("w", "b300:w").replace("frontier:", "frontier: b300:w1@C b300:w2@C b300:w3@R b300:w4@R")
    assert load_model(text) == body


def test_save_load_round_trip():
    for d in range(4):
        m = build_butterfly(ButterflyParams(300, 50, d))
        assert load_model(save_model(m)) == m


def test_empty_states():
    with pytest.raises(ModelFormatError):
        load_model("agents: R\nstates:\n")


def test_duplicate_state():
    with pytest.raises(ModelFormatError, match="duplicate"):
        load_model("agents: R\nstates: a b a\n")


def test_transitivity_error_names_witness():
    text = "agents: R\nstates: a b c\norder R closure=none: a<=a b<=b c<=c a<=b b<=c\n"
    with pytest.raises(PreorderError) as exc:
        load_model(text)
    assert exc.value.witness == ("a", "b", "c")
    assert "not transitive via (a, b, c)" in str(exc.value)


def test_reflexivity_error():
    with pytest.raises(PreorderError, match="not reflexive at b"):
        load_model("agents: R\nstates: a b\norder R closure=none: a<=a\n")


def test_strict_pair_collapsing_under_closure():
    with pytest.raises(PreorderError, match="collapses"):
        load_model("agents: R\nstates: a b\norder R: a<b b<a\n")


def test_true_must_be_everything():
    with pytest.raises(ModelError):
        Model(["a", "b"], ["R"], {}, {TOP: {"a"}})


def test_success_postulate_enforced():
    with pytest.raises(SuccessPostulateError):
        Model(["a", "b"], ["R"], {}, {1: {"a"}}, selection={(Height(1), "b"): "b"})


def test_missing_selection_target(body):
    with pytest.raises(MissingSelectionTarget):
        body.selection.select(Height(250), "b300:w0")


def test_closure_is_preorder():
    m = Model(list("abcd"), ["R"], {"R": [("a", "b"), ("b", "c"), ("d", "c")]}, {})
    for x, y, z in itertools.product(m.states, repeat=3):
        assert m.leq("R", x, x)
        if m.leq("R", x, y) and m.leq("R", y, z):
            assert m.leq("R", x, z)


def test_components_partition():
    m = Model(list("abcdef"), ["R", "C"], {"R": [("a", "b"), ("c", "b")], "C": [("d", "e")]}, {})
    for a in m.agents:
        seen = set()
        for s in m.states:
            comp = set(m.component(a, s))
            assert s in comp
            for t in comp:
                assert set(m.component(a, t)) == comp
            seen |= comp
        assert seen == set(m.states)


def test_component_is_connectivity_not_raw_comparability(body):
    # w1 and w2 are both below w0 but not comparable to each other
    c = "b300:"
    assert not body.comparable("R", c + "w1", c + "w2")
    assert c + "w2" in body.component("R", c + "w1")
    assert ("R", c + "w1", c + "w2") in body.comparability_gaps()
