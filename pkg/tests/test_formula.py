import pytest
from hypothesis import given, settings, strategies as st

from plausibility_mc.formula import (
    BOTTOM,
    TOP,
    AgentSetError,
    And,
    FormulaSyntaxError,
    Height,
    Know,
    Not,
    Reason,
    RestrictedConditionError,
    diamond,
    dual_reason,
    expand_diamond_chain,
    expand_iter_reason,
    implies,
    lor,
    modal_depth,
    parse,
    to_text,
)

AGENTS = ("R", "C")


def test_atom():
    assert parse("[300]") == Height(300)
    assert parse("true") == TOP


def test_unconditional_reason_is_condition_true():
    f = parse("R_R([300] | true)")
    assert f == Reason("R", Height(300), TOP)
    assert parse("R_R([300])") == f
    assert parse("R_R([300] || true)") == f


def test_compound_condition_rejected():
    with pytest.raises(RestrictedConditionError) as exc:
        parse("R_R([250] | ([300] & [200]))")
    assert exc.value.line == 1
    assert "restricted condition" in str(exc.value)
    with pytest.raises(RestrictedConditionError):
        Reason("R", TOP, And(TOP, TOP))


@pytest.mark.parametrize("text", ["[300", "K_ [1]", "R_R([1] ||)", "[1] &", "r^2([1] | [2] | [3])"])
def test_syntax_errors(text):
    with pytest.raises(FormulaSyntaxError):
        parse(text, agents=AGENTS)


def test_iterated_forms_need_agents():
    with pytest.raises(AgentSetError, match="declared agent set"):
        parse("r^2([1] || [2])")


def test_syntax_error_position():
    with pytest.raises(FormulaSyntaxError) as exc:
        parse("[1] &\n  & [2]")
    assert (exc.value.line, exc.value.column) == (2, 3)


def test_sugar_expands_to_core():
    assert parse("[1] | [2]") == lor(Height(1), Height(2))
    assert parse("[1] -> [2]") == implies(Height(1), Height(2))
    assert parse("<K_R>[1]") == Not(Know("R", Not(Height(1))))
    assert dual_reason("R", Height(1), Height(2)) == Not(Reason("R", Not(Height(1)), Height(2)))
    assert parse("false") == BOTTOM


def test_precedence():
    a, b, c = Height(1), Height(2), Height(3)
    assert parse("![1] & [2]") == And(Not(a), b)
    assert parse("[1] & [2] | [3]") == lor(And(a, b), c)
    assert parse("[1] | [2] -> [3]") == implies(lor(a, b), c)


def test_iter_reason_expansion():
    phi, p = Height(300), TOP
    r0 = And(Reason("R", phi, p), Reason("C", phi, p))
    assert expand_iter_reason(0, phi, p, AGENTS) == r0
    assert expand_iter_reason(1, phi, p, AGENTS) == And(Reason("R", r0, p), Reason("C", r0, p))
    assert expand_iter_reason(0, phi, p, ("R",)) == Reason("R", phi, p)
    for d in range(5):
        assert modal_depth(expand_iter_reason(d, phi, Height(2), AGENTS)) == d + 1


def test_iter_reason_parse():
    assert parse("r^1([300] || true)", agents=AGENTS) == expand_iter_reason(1, Height(300), TOP, AGENTS)


def test_diamond_chain():
    assert expand_diamond_chain("R", 0, Height(250), AGENTS) == diamond("R", Height(250))
    phi = Height(7)
    assert expand_diamond_chain("R", 2, phi, AGENTS) == diamond("R", diamond("C", diamond("R", phi)))
    assert parse("<K_C>^1 [7]", agents=AGENTS) == diamond("C", diamond("R", phi))
    with pytest.raises(AgentSetError):
        expand_diamond_chain("R", 1, phi, ("R", "C", "D"))


def test_modal_depth():
    assert modal_depth(Height(1)) == 0
    assert modal_depth(And(Know("R", TOP), Not(Reason("C", Know("R", TOP), TOP)))) == 2


def test_agents_checked_when_given():
    with pytest.raises(AgentSetError):
        parse("K_D [1]", agents=AGENTS)


# -- round trip ----------------------------------------------------------------

atoms = st.one_of(st.just(TOP), st.integers(0, 999).map(Height))
agents = st.sampled_from(["R", "C", "Ann", "b2"])


def formulas(depth):
    if depth == 0:
        return atoms
    sub = formulas(depth - 1)
    return st.one_of(
        atoms,
        sub.map(Not),
        st.builds(And, sub, sub),
        st.builds(Know, agents, sub),
        st.builds(Reason, agents, sub, atoms),
    )


@settings(max_examples=300, deadline=None)
@given(formulas(6))
def test_round_trip(f):
    assert parse(to_text(f)) == f
