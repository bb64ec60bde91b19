import random

import pytest

from plausibility_mc.butterfly import Flutter
from plausibility_mc.checker import Checker
from plausibility_mc.formula import TOP, Height, expand_iter_reason
from plausibility_mc.lewis import (
    EventSpace,
    Replayer,
    SearchSpaceTooLarge,
    check_c1_c3,
    check_c4,
    iterated_reasons,
    reason_event,
    replay_witness,
    verify_lewis_theorem,
)
from plausibility_mc.model import load_model
from plausibility_mc.randomgen import random_raw_model

BODY = """\
agents: R C
states: w0 w1 w2 w3 w4
atom [300]: w0
atom [250]: w1 w3
atom [350]: w2 w4
order R closure=auto: w1<w0 w2<w0
order C closure=auto: w3<w0 w4<w0
select [300] *: w0
select true *: w0
"""

SINGLETON = """\
agents: R C
states: s
atom [1]: s
order R closure=auto:
order C closure=auto:
select true *: s
select [1] *: s
"""


@pytest.fixture
def body():
    return EventSpace(load_model(BODY))


def test_body_reason_events(body):
    W = frozenset(body.states)
    # every state anchors at w0, the top of both of its components
    assert reason_event(body, "R", Height(300)) == W
    assert reason_event(body, "C", {"w1", "w2"}) == frozenset()
    assert reason_event(body, "R", W) == W
    assert reason_event(body, "R", set()) == frozenset()


def test_body_center_basis(body):
    rep = verify_lewis_theorem(body, {"w0"}, Height(300))
    assert rep.premises_hold and rep.conclusion_holds and rep.stabilized
    assert all(lvl == body.full for lvl in rep.r_levels)


def test_total_and_empty_events(body):
    W = body.full
    rep = verify_lewis_theorem(body, W, W)
    assert rep.premises_hold and rep.conclusion_holds
    assert set(rep.r_levels) == {W}
    empty = check_c1_c3(body, 0, Height(250)).merge(check_c4(body, 0))
    assert all(empty.verdicts.values())


def test_failed_condition_has_witness(body):
    rep = check_c1_c3(body, {"w1"}, {"w1"})
    assert not rep.verdicts["C1"]
    w, i = rep.witnesses["C1"]
    assert w == "w1" and replay_witness(body, "C1", rep.witnesses["C1"], {"w1"})


def test_singleton():
    sp = EventSpace(load_model(SINGLETON))
    for A in (0, 1):
        assert check_c4(sp, A).verdicts["C4"]
        assert check_c4(sp, A, reading="global").verdicts["C4"]


def test_monotone():
    rng = random.Random(2)
    for _ in range(30):
        sp = EventSpace(random_raw_model(rng, 6).to_model())
        n = 1 << len(sp)
        for i in range(len(sp.agents)):
            assert sp.reason(i, sp.full) == sp.full
            for _ in range(20):
                E = rng.randrange(n)
                F = E | rng.randrange(n)
                assert sp.reason(i, E) & ~sp.reason(i, F) == 0


def test_witnesses_replay():
    rng = random.Random(7)
    replayed = 0
    for _ in range(40):
        sp = EventSpace(random_raw_model(rng, 5).to_model())
        rp = Replayer(sp)
        for A in range(1 << len(sp)):
            rep = check_c1_c3(sp, A, A).merge(check_c4(sp, A))
            for c, ok in rep.verdicts.items():
                if not ok:
                    replayed += 1
                    assert rp.replay(c, rep.witnesses[c], A, A)
    assert replayed > 0


def test_bogus_witness_rejected(body):
    assert not replay_witness(body, "C1", ("w0", "R"), {"w0"})


def test_event_levels_match_formulas():
    rng = random.Random(4)
    for _ in range(30):
        model = random_raw_model(rng, 6).to_model()
        sp = EventSpace(model)
        assert sp.added == ()
        ch = Checker(model)
        for h in model.heights:
            levels, _ = iterated_reasons(sp, Height(h), 3)
            for n in range(4):
                f = expand_iter_reason(n, Height(h), TOP, model.agents)
                assert sp.members(levels[n]) == tuple(s for s in sp.states if ch.holds(f, s))


def test_flutter_publicity():
    F = Flutter(0, 600, 50, 2)
    sp = EventSpace(F, states=F.butterfly_states(300))
    assert sp.added  # reasons at wing states anchor at other butterflies' centers
    A, B = {F.center(300)}, F.heights_limit_formula(100)
    rep = check_c1_c3(sp, A, B)
    assert rep.verdicts == {"C1": True, "C2": True, "C3": True}
    levels, stable = iterated_reasons(sp, B, 6)
    assert stable is not None
    a = sp.event(A)
    assert all(lvl & a == a for lvl in levels)


def test_guard():
    rng = random.Random(0)
    raw = random_raw_model(rng, 20)
    while len(raw.states) <= 16:
        raw = random_raw_model(rng, 20)
    sp = EventSpace(raw.to_model())
    with pytest.raises(SearchSpaceTooLarge):
        check_c4(sp, 1)
