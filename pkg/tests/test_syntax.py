"""Core term structure: substitution, alpha-equivalence, contexts."""

import pytest
from hypothesis import given, settings, strategies as st

from dtalloc.harness import GenSpec, gen_typed
from dtalloc.syntax import (
    App,
    BOX,
    Code,
    CodeTy,
    Context,
    Fst,
    Let,
    Pair,
    Pi,
    STAR,
    Sigma,
    UNIT,
    UNIT_TY,
    Var,
    alpha_eq,
    all_names,
    free_vars,
    fresh_name,
    push_binder,
    subst,
    subst_many,
)


def test_fresh_name_picks_least_unused_suffix():
    assert fresh_name("x", set()) == "x"
    assert fresh_name("x", {"x"}) == "x1"
    assert fresh_name("x", {"x", "x1", "x3"}) == "x2"


def test_free_vars_binding_structure():
    e = Pi("x", Var("a"), App(Var("x"), Var("b")))
    assert free_vars(e) == {"a", "b"}
    # in code the env binder scopes over the argument type and the body
    c = Code("n", UNIT_TY, "x", Var("n"), App(Var("n"), Var("x")))
    assert free_vars(c) == set()
    c2 = Code("n", Var("outer"), "x", UNIT_TY, Var("x"))
    assert free_vars(c2) == {"outer"}


def test_free_vars_sigma_and_let():
    s = Sigma("x", Var("a"), 1, Var("x"), 1)
    assert free_vars(s) == {"a"}
    l = Let("x", Var("a"), UNIT_TY, Var("x"))
    assert free_vars(l) == {"a"}


def test_subst_avoids_capture():
    # [y/x] under a binder named y must rename the binder
    e = Pi("y", UNIT_TY, App(Var("x"), Var("y")))
    r = subst(e, Var("y"), "x")
    assert isinstance(r, Pi)
    assert r.binder != "y"
    assert alpha_eq(r, Pi("z", UNIT_TY, App(Var("y"), Var("z"))))


def test_subst_shadowed_binder_left_alone():
    e = Let("x", Var("x"), UNIT_TY, Var("x"))
    r = subst(e, UNIT, "x")
    # the bound occurrence is the outer x; the body one is the inner
    assert r == Let("x", UNIT, UNIT_TY, Var("x"))


def test_subst_code_arg_shadows_env_binder():
    # when both binders share a name the arg type is still under the env
    c = Code("n", UNIT_TY, "n", Var("n"), Var("n"))
    r = subst(c, UNIT, "n")
    assert r == c


def test_subst_many_is_simultaneous():
    e = App(Var("x"), Var("y"))
    r = subst_many(e, {"x": Var("y"), "y": Var("x")})
    assert r == App(Var("y"), Var("x"))


def test_alpha_eq_basic():
    assert alpha_eq(Pi("x", UNIT_TY, Var("x")), Pi("y", UNIT_TY, Var("y")))
    assert not alpha_eq(Pi("x", UNIT_TY, Var("x")), Pi("y", UNIT_TY, UNIT_TY))
    assert not alpha_eq(Var("x"), Var("y"))
    assert alpha_eq(STAR, STAR)
    assert not alpha_eq(STAR, BOX)


def test_alpha_eq_ignores_positions():
    assert Var("x", pos=(1, 1)) == Var("x", pos=(9, 9))
    assert alpha_eq(Var("x", pos=(1, 1)), Var("x", pos=(9, 9)))


def test_sigma_flag_validation():
    with pytest.raises(ValueError):
        Sigma("x", UNIT_TY, 2, UNIT_TY, 0)


def test_context_lookup_innermost_wins():
    ctx = Context().extend("x", UNIT_TY).extend("x", STAR)
    assert ctx.lookup("x").ty == STAR
    assert ctx.lookup("missing") is None


def test_context_defs_shadowing():
    ctx = Context().extend("x", UNIT_TY, defn=UNIT).extend("x", STAR)
    # the undefined inner entry hides the outer definition
    assert "x" not in ctx.defs()
    ctx2 = Context().extend("x", UNIT_TY).extend("x", STAR, defn=UNIT_TY)
    assert ctx2.defs()["x"] == UNIT_TY


def test_push_binder_freshens():
    ctx = Context().extend("x", UNIT_TY)
    ctx2, name = push_binder(ctx, "x", STAR)
    assert name == "x1"
    assert len(ctx2) == 2
    assert ctx2.lookup("x").ty == UNIT_TY
    assert ctx2.lookup("x1").ty == STAR


def test_all_names_includes_binders():
    e = Let("x", UNIT, UNIT_TY, Pi("y", UNIT_TY, Var("z")))
    assert all_names(e) >= {"x", "y", "z"}


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6))
def test_alpha_eq_reflexive_on_generated_terms(seed):
    _, e, _ = gen_typed(GenSpec(depth=3, seed=seed, closed=True))
    assert alpha_eq(e, e)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6))
def test_subst_of_fresh_var_is_identity(seed):
    _, e, _ = gen_typed(GenSpec(depth=3, seed=seed, closed=True))
    fresh = fresh_name("q", all_names(e))
    assert alpha_eq(subst(e, UNIT, fresh), e)


def test_codety_alpha_eq_with_renamed_binders():
    a = CodeTy("n", UNIT_TY, "x", UNIT_TY, Sigma("y", UNIT_TY, 1, UNIT_TY, 1))
    b = CodeTy("m", UNIT_TY, "z", UNIT_TY, Sigma("w", UNIT_TY, 1, UNIT_TY, 1))
    assert alpha_eq(a, b)


def test_pair_and_projections_structural():
    s = Sigma("x", UNIT_TY, 1, UNIT_TY, 1)
    p = Pair(UNIT, UNIT, s)
    assert Fst(p) == Fst(Pair(UNIT, UNIT, s))
