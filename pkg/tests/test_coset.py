from __future__ import annotations

import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import builder, coords, shifted
from oracles import Grassmann, supermatrix_mul, to_grassmann
from supercoset.coset import (
    OverlapError,
    alpha_at,
    build_trivialization,
    coset_action_alpha,
    coset_atlas,
    decompose_product_function,
    is_right_invariant,
    reassemble,
    transversal_slice,
    verify_cocycle,
    whole_group,
)
from supercoset.geometry import compose, constant, identity, morphism_residual, pair, projection
from supercoset.superalg import ChartSignature, Product, Scalar, SuperPolynomial, sp_recenter, sp_substitute, sp_value_at


@pytest.fixture(scope="module")
def gl11_triv(gl11, gl11_H):
    S = transversal_slice(gl11, gl11_H)
    return build_trivialization(gl11, gl11_H, S, 4)


@pytest.fixture(scope="module")
def gl11_atlas(gl11, gl11_H):
    return coset_atlas(gl11, gl11_H, [{}, {"a": 2, "b": 1}], [(0, 1, {"a": 1}), (1, 0, {"a": 1})], 4)


@pytest.fixture(scope="module")
def p1_atlas():
    b = builder("P1")
    G = b.group("GL2")
    B = b.subgroup("B", 4)
    reps = [{}, {"a": 0, "b": 1, "c": 1, "d": 0}, {"a": 2, "d": 1}]
    return coset_atlas(G, B, reps, [(0, 1, {"c": 1}), (0, 2, {"c": 1}), (1, 2, {"c": 1})], 4)


# ---------------------------------------------------------------------------
# Slice and trivialization


def test_slice_is_pivot_chart(gl11_triv):
    S = gl11_triv.slice
    assert (S.chart.even, S.chart.odd) == (("a",), ("beta",))
    assert S.witness.is_invertible()


def test_trivialization_matches_supermatrix_product(gl11_triv):
    T = gl11_triv.forward
    sig = T.source
    syms = {n: sp.Symbol(n) for n in sig.even}
    order = ("beta_s", "alpha_h")
    gens = {n: n for n in sig.odd}
    G = lambda n: Grassmann.gen(n, order)
    one = Grassmann.scalar(1, order)
    zero = Grassmann.scalar(0, order)
    s = [[Grassmann.scalar(syms["a_s"], order), zero], [G("beta_s"), one]]
    h = [[one, G("alpha_h")], [zero, Grassmann.scalar(syms["b_h"], order)]]
    m = supermatrix_mul(s, h)
    want = {"a": m[0][0], "alpha": m[0][1], "beta": m[1][0], "b": m[1][1]}
    for n, w in want.items():
        assert to_grassmann(T.pullback[n], syms, gens, order) == w, n


def test_trivialization_inverse_by_hand(gl11_triv):
    inv = gl11_triv.inverse.truncate(4)
    x = coords(inv.source)
    u = shifted(inv.source)["a"]
    geo = sum(((-u) ** k for k in range(5)), SuperPolynomial.zero(inv.source))
    assert inv.pullback["a_s"] == x["a"]
    assert inv.pullback["beta_s"] == x["beta"]
    assert inv.pullback["alpha_h"] == geo * x["alpha"]
    assert inv.pullback["b_h"] == x["b"] - geo * x["beta"] * x["alpha"]


def test_trivialization_round_trips_and_blocks(gl11_triv):
    assert not any(gl11_triv.round_trip_residuals().values())
    d, witness = gl11_triv.differential_blocks()
    assert d.even == witness.even and d.odd == witness.odd
    assert d.is_invertible()


def test_affine_and_p1_trivializations():
    for stem, g, h in (("affine", "Aff", "Lin"), ("P1", "GL2", "B")):
        b = builder(stem)
        G, H = b.group(g), b.subgroup(h, 4)
        T = build_trivialization(G, H, transversal_slice(G, H), 4)
        assert not any(T.round_trip_residuals().values())


# ---------------------------------------------------------------------------
# Product decomposition


def test_decompose_multiplication_law(gl11):
    prod = gl11.product(2)
    f = gl11.mul.pullback["a"]
    parts = decompose_product_function(f, prod)
    W, F = prod.factors
    uw, xf = shifted(W), coords(F)
    assert parts == [
        (SuperPolynomial.constant(W, 1), xf["a"]),
        (coords(W)["alpha"], xf["beta"]),
        (uw["a"], xf["a"]),
    ]
    assert reassemble(parts, prod) == f


def test_decompose_with_second_factor_and_sign(gl11):
    prod = gl11.product(2)
    x = coords(prod.signature)
    f = x["alpha1"] * x["beta2"]
    parts = decompose_product_function(f, prod, w=1)
    W, F = prod.factors[1], prod.factors[0]
    assert parts == [(coords(W)["beta"], -coords(F)["alpha"])]
    assert reassemble(parts, prod, w=1) == f


SMALL = ChartSignature(("x",), ("p", "q"))
OTHER = ChartSignature(("y", "z"), ("r",), (1, 0))
PROD = Product((SMALL, OTHER), ("", ""))


@st.composite
def product_functions(draw):
    sig = PROD.signature
    terms = []
    for _ in range(draw(st.integers(0, 8))):
        exps = [draw(st.integers(0, 2)) for _ in sig.even]
        odd = draw(st.lists(st.integers(0, len(sig.odd) - 1), unique=True, max_size=len(sig.odd)))
        terms.append((exps, odd, draw(st.integers(-4, 4))))
    return SuperPolynomial.from_terms(sig, terms)


@settings(max_examples=100, deadline=None)
@given(product_functions(), st.integers(0, 1))
def test_decompose_reassembles(f, w):
    parts = decompose_product_function(f, PROD, w)
    assert reassemble(parts, PROD, w) == f
    monomials = [next(iter(h.terms()))[:2] for h, _ in parts]
    assert len(set(monomials)) == len(monomials)
    assert all(len(list(h.terms())) == 1 for h, _ in parts)


# ---------------------------------------------------------------------------
# Right invariance


@pytest.mark.parametrize("name,expected", [("a", True), ("beta", True), ("alpha", False), ("b", False)])
def test_right_invariance_of_coordinates(gl11, gl11_H, name, expected):
    f = coords(gl11.chart)[name]
    assert bool(is_right_invariant(gl11, gl11_H, f)) is expected


def test_right_invariance_away_from_identity(gl11, gl11_H):
    x = coords(gl11.chart)
    for f, expected in ((x["a"] * x["beta"], True), (x["a"] + x["b"], False)):
        g = sp_recenter(f, {"a": 2, "b": 3})
        assert bool(is_right_invariant(gl11, gl11_H, g)) is expected


def test_invariant_functions_are_constant_on_h(gl11, gl11_H):
    # f(x h) = f(x) for x = e and h running over H
    emb = gl11_H.embed
    for name in ("a", "beta"):
        f = coords(gl11.chart)[name]
        on_h = sp_substitute(f, emb.pullback)
        assert on_h == SuperPolynomial.constant(emb.source, f.constant_term())


CANDIDATES = ["a", "beta", "a*beta", "a*a", "alpha", "b", "alpha*beta", "a+b", "b*beta", "a*a*a+beta"]


@pytest.mark.parametrize("expr", CANDIDATES)
def test_invariant_iff_slice_function(gl11, gl11_H, gl11_triv, expr):
    x = coords(gl11.chart)
    f = eval(expr, {}, x)
    pulled = sp_substitute(f, gl11_triv.forward.pullback)
    h_free = not any(pulled.uses(n) for n in gl11_triv.product.signature.names if n.endswith("_h"))
    assert bool(is_right_invariant(gl11, gl11_H, f)) is h_free


def test_whole_group_invariants_are_constants(gl11):
    W = whole_group(gl11)
    assert W.dim == gl11.dim
    assert not is_right_invariant(gl11, W, coords(gl11.chart)["a"])
    assert is_right_invariant(gl11, W, SuperPolynomial.constant(gl11.chart, 5))


# ---------------------------------------------------------------------------
# Atlas, transitions, cocycle


def test_gl11_transitions(gl11_atlas):
    t01, t10 = (t.morphism for t in gl11_atlas.overlaps)
    x = coords(t01.source)
    assert t01.pullback["a"] == x["a"] * Scalar.parse("1/2")
    assert t01.pullback["beta"] == x["beta"]
    assert t10.pullback["a"] == 2 * coords(t10.source)["a"]
    for t in gl11_atlas.overlaps:
        assert not gl11_atlas.transition_residual(t)
    for i in range(2):
        assert not gl11_atlas.section_projection_residual(i)


def _series(expr, D):
    c = sp.Symbol("c")
    return sp.Poly(sp.series(expr(c), c, 1, D + 1).removeO().subs(c, c + 1).expand(), c)


@pytest.mark.parametrize("k,expr", [(0, lambda c: 1 / c), (1, lambda c: 2 * c), (2, lambda c: 2 / c)])
def test_p1_transitions_match_series(p1_atlas, k, expr):
    t = p1_atlas.overlaps[k].morphism
    got = {e[0]: sp.Rational(str(v)) for e, _, v in t.pullback["c"].terms()}
    want = {m[0]: v for m, v in _series(expr, 4).terms()}
    assert got == want


def test_p1_cocycle(p1_atlas):
    rep = verify_cocycle(p1_atlas, [(0, 1, 2, {"c": 1}), (1, 2, 0, {"c": 1}), (0, 2, 1, {"c": 2})])
    assert rep.passed
    # psi_01 is an involution on its overlap
    assert verify_cocycle(p1_atlas, [(0, 1, 0, {"c": 3})]).passed


def test_gl11_cocycle(gl11_atlas):
    assert verify_cocycle(gl11_atlas, [(0, 1, 0, {"a": 1}), (1, 0, 1, {"a": "3/2"})]).passed


def test_point_outside_chart(p1_atlas):
    with pytest.raises(OverlapError):
        p1_atlas.transition(1, 0, {"c": 0})


# ---------------------------------------------------------------------------
# Induced action on the coset space


def alpha_fixed(atlas, g, i, s, j):
    """``alpha`` restricted to ``{g} x S`` as a morphism of slice charts."""
    G = atlas.group
    a = alpha_at(atlas, i, g, s, j)
    Sc = atlas.charts[i].chart.with_center(atlas.charts[i].chart.point(s))
    prod = Product((G.chart, Sc), ("1", "2"))
    emb = pair([constant(Sc, G.chart, g), identity(Sc)], prod)
    return compose(emb, a)


def test_alpha_identity_and_compatibility(gl11_atlas):
    s = {"a": 2}
    e = gl11_atlas.group.identity_point
    a_e = alpha_fixed(gl11_atlas, e, 0, s, 0)
    assert not morphism_residual(a_e, identity(a_e.source))
    g, h = {"a": 2, "b": 3}, {"a": 3, "b": "1/2"}
    gh = gl11_atlas.group.multiply_points(g, h)
    a_h = alpha_fixed(gl11_atlas, h, 0, s, 0)
    a_g = alpha_fixed(gl11_atlas, g, 0, a_h.reduced_image, 0)
    assert not morphism_residual(compose(a_h, a_g), alpha_fixed(gl11_atlas, gh, 0, s, 0))


def test_alpha_agrees_across_charts(gl11_atlas, p1_atlas):
    rep = coset_action_alpha(gl11_atlas, [(0, {"a": 2, "b": 3}, {"a": 1}, 1), (1, {"a": 2, "b": 1}, {"a": "3/2"}, 0)])
    assert rep.passed
    rep = coset_action_alpha(p1_atlas, [(0, {"a": 2, "d": 1}, {"c": 1}, 1)])
    assert rep.passed


# ---------------------------------------------------------------------------
# Invariant functions and the projection


SLICE_FUNCTIONS = ["a", "beta", "a*beta", "a*a*a", "3*a*a-a*beta"]


@pytest.mark.parametrize("expr", SLICE_FUNCTIONS)
def test_projection_pullbacks_are_invariant(gl11, gl11_H, gl11_atlas, expr):
    proj = gl11_atlas.charts[0].projection
    f_s = eval(expr, {}, coords(proj.target))
    f = sp_substitute(f_s, proj.pullback, gl11_atlas.work)
    assert is_right_invariant(gl11, gl11_H, f)


@pytest.mark.parametrize("expr", ["a", "beta", "a*beta", "a*a", "a*a*a+beta"])
def test_invariant_functions_descend(gl11, gl11_H, gl11_triv, expr):
    """Invariant functions are recovered from the slice part of the decomposition of ``T*f``."""
    f = eval(expr, {}, coords(gl11.chart))
    assert is_right_invariant(gl11, gl11_H, f)
    prod = gl11_triv.product
    pulled = sp_substitute(f, gl11_triv.forward.pullback)
    parts = decompose_product_function(pulled, prod, w=0)
    e_h = prod.factors[1].center_point()
    f_s = sum(
        (h * sp_value_at(g, e_h) for h, g in parts),
        SuperPolynomial.zero(prod.factors[0]),
    )
    assert prod.inject(f_s, 0) == pulled
    back = sp_substitute(f_s, compose(gl11_triv.inverse, projection(prod, 0)).pullback, 4)
    assert back == f.truncate(4)


def test_only_constants_are_invariant_on_h(gl11_H):
    H = gl11_H.group()
    W = whole_group(H)
    x = coords(H.chart)
    for f in (x["b"], x["alpha"], x["b"] * x["alpha"], x["b"] ** 2):
        assert not is_right_invariant(H, W, f)
    assert is_right_invariant(H, W, SuperPolynomial.constant(H.chart, 2))
