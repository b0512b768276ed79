from __future__ import annotations

import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import builder, coords, shifted
from oracles import supermatrix_inverse, taylor, to_grassmann, Grassmann
from supercoset.geometry import compose, morphism_residual
from supercoset.group import (
    DependentGeneratorsError,
    IdealPresentation,
    NotInvariantError,
    NotInvertibleError,
    check_subsupergroup,
    lie_superalgebra,
    product_ideal,
    translation_morphism,
    verify_group_axioms,
)
from supercoset.superalg import Scalar, sp_substitute


@pytest.mark.parametrize("stem,name", [("GL11", "GL11"), ("translation", "C11"), ("affine", "Aff"), ("P1", "GL2")])
def test_corpus_groups_satisfy_axioms(stem, name):
    G = builder(stem).group(name)
    report = verify_group_axioms(G, 4)
    assert report.passed, report.failures()
    assert set(report.residuals) == {"associativity", "left_identity", "right_identity", "inverse", "involution"}


def test_broken_group_reports_associativity(broken):
    report = verify_group_axioms(broken, 4)
    assert report.failures() == ["associativity"]
    x = coords(broken.product(3).signature)
    assert report.residuals["associativity"]["alpha"] == -(x["alpha1"] * x["beta2"] * x["alpha3"])


# ---------------------------------------------------------------------------
# Translations


def test_left_translation_by_diagonal(gl11):
    lg = translation_morphism(gl11, {"a": 2, "b": 1})
    x = coords(gl11.chart)
    assert lg.pullback["a"] == 2 * x["a"]
    assert lg.pullback["alpha"] == 2 * x["alpha"]
    assert lg.pullback["b"] == x["b"]
    assert lg.pullback["beta"] == x["beta"]
    assert lg.target.center_point() == {"a": Scalar(2), "b": Scalar(1)}


points = st.tuples(st.sampled_from([1, 2, 3, -1, "1/2"]), st.sampled_from([1, 2, -2, "3/2"]))


@settings(max_examples=25, deadline=None)
@given(points, points)
def test_translations_compose(g, h):
    G = builder("GL11").group("GL11")
    g = {"a": g[0], "b": g[1]}
    h = {"a": h[0], "b": h[1]}
    r = lambda p: translation_morphism(G, p, "right")
    l = lambda p: translation_morphism(G, p, "left")
    assert not morphism_residual(compose(r(h), r(g)), r(G.multiply_points(h, g)))
    assert not morphism_residual(compose(l(h), l(g)), l(G.multiply_points(g, h)))


def test_reduced_inverse(gl11, gl2):
    assert gl11.reduced_inverse({"a": 2, "b": 3}) == {"a": Scalar.parse("1/2"), "b": Scalar.parse("1/3")}
    w = gl2.reduced_inverse({"a": 0, "b": 1, "c": 1, "d": 0})
    assert w == {n: Scalar(v) for n, v in dict(a=0, b=1, c=1, d=0).items()}
    with pytest.raises(NotInvertibleError):
        gl11.reduced_inverse({"a": 0, "b": 1})


# ---------------------------------------------------------------------------
# Inverse against block inversion


@pytest.mark.parametrize("D", [2, 4])
def test_inverse_matches_block_inversion(gl11, D):
    iota = gl11.inverse(D)
    sig = iota.source
    syms = {n: sp.Symbol(n) for n in sig.even}
    order = ("alpha", "beta")
    gen = lambda n: Grassmann.gen(n, order)
    m = [[Grassmann.scalar(syms["a"], order), gen("alpha")], [gen("beta"), Grassmann.scalar(syms["b"], order)]]
    inv = supermatrix_inverse(m)
    want = {"a": inv[0][0], "alpha": inv[0][1], "beta": inv[1][0], "b": inv[1][1]}
    at = {syms["a"]: 1, syms["b"]: 1}
    for n, w in want.items():
        got = to_grassmann(iota.pullback[n], syms, {"alpha": "alpha", "beta": "beta"}, order)
        assert got == taylor(w, at, D), n


def test_inverse_of_gl2_is_adjugate_over_det(gl2):
    D = 3
    iota = gl2.inverse(D)
    syms = {n: sp.Symbol(n) for n in "abcd"}
    M = sp.Matrix([[syms["a"], syms["b"]], [syms["c"], syms["d"]]]).inv()
    want = {"a": M[0, 0], "b": M[0, 1], "c": M[1, 0], "d": M[1, 1]}
    at = {syms["a"]: 1, syms["b"]: 0, syms["c"]: 0, syms["d"]: 1}
    for n, w in want.items():
        got = to_grassmann(iota.pullback[n], syms, {}, ())
        assert got == taylor(Grassmann.scalar(w, ()), at, D), n


# ---------------------------------------------------------------------------
# Lie superalgebra


def _elementary(i, j):
    m = sp.zeros(2, 2)
    m[i, j] = 1
    return m


def test_gl11_brackets_match_supercommutators(gl11):
    L = lie_superalgebra(gl11)
    assert L.basis == ("a", "b", "alpha", "beta")
    mats = {"a": _elementary(0, 0), "b": _elementary(1, 1), "alpha": _elementary(0, 1), "beta": _elementary(1, 0)}
    for i, x in enumerate(L.basis):
        for j, y in enumerate(L.basis):
            sign = -1 if L.parity[i] and L.parity[j] else 1
            want = mats[x] * mats[y] - sign * mats[y] * mats[x]
            got = sum((int(c.fraction_pair()[0]) * mats[L.basis[k]] for k, c in enumerate(L.constants[i, j])), sp.zeros(2, 2))
            assert got == want, (x, y)
    assert L.antisymmetry_residuals() == []
    assert L.jacobi_residuals() == []
    assert "[E_alpha, E_beta] = 1*E_a + 1*E_b" in L.describe()


def test_abelian_and_affine_algebras(c11, aff):
    assert lie_superalgebra(c11).describe() == []
    L = lie_superalgebra(aff)
    assert L.jacobi_residuals() == [] and L.antisymmetry_residuals() == []
    assert set(L.describe()) == {"[E_a, E_x] = 1*E_x", "[E_a, E_xi] = 1*E_xi"}


# ---------------------------------------------------------------------------
# Ideals and subsupergroups


def ideal(G, *gens):
    return IdealPresentation(G.chart, gens)


def test_named_subgroups(gl11_model, gl11):
    H = gl11_model.subgroup("H", 4)
    assert (H.chart.even, H.chart.odd) == (("b",), ("alpha",))
    assert H.pivot_names == ("a", "beta")
    u = shifted(gl11.chart)
    D = check_subsupergroup(gl11, ideal(gl11, u["alpha"], u["beta"]))
    assert (D.chart.even, D.chart.odd) == (("a", "b"), ())
    for sub in (H, D):
        assert sub.passed
        assert verify_group_axioms(sub.group(), 4).passed


def test_trivial_and_upper_triangular(gl11):
    u = shifted(gl11.chart)
    triv = check_subsupergroup(gl11, ideal(gl11, u["a"], u["b"], u["alpha"], u["beta"]))
    assert triv.dim == (0, 0)
    upper = check_subsupergroup(gl11, ideal(gl11, u["beta"]))
    assert upper.dim == (2, 1)


def test_mul_pullback_reduces_modulo_product_ideal(gl11):
    u = shifted(gl11.chart)
    I = ideal(gl11, u["a"], u["beta"])
    J = product_ideal(I, gl11.product(2), (0, 1))
    assert J.contains(sp_substitute(u["a"], gl11.mul.pullback))
    # with a-1 alone the remainder is alpha1 beta2
    J1 = product_ideal(ideal(gl11, u["a"]), gl11.product(2), (0, 1))
    x = coords(gl11.product(2).signature)
    assert J1.reduce(sp_substitute(u["a"], gl11.mul.pullback)) == x["alpha1"] * x["beta2"]


def test_non_subgroups_rejected(gl11):
    u = shifted(gl11.chart)
    with pytest.raises(NotInvariantError) as info:
        check_subsupergroup(gl11, ideal(gl11, u["a"]))
    assert info.value.witness
    with pytest.raises(NotInvariantError):
        check_subsupergroup(gl11, ideal(gl11, u["a"] - u["b"]))
    with pytest.raises(NotInvariantError):
        check_subsupergroup(gl11, ideal(gl11, coords(gl11.chart)["a"]))


def test_dependent_generators_rejected(gl11):
    u = shifted(gl11.chart)
    with pytest.raises(DependentGeneratorsError):
        check_subsupergroup(gl11, ideal(gl11, u["a"] + u["b"] ** 2, u["a"]))


def test_redundant_generator_is_accepted(gl11):
    u = shifted(gl11.chart)
    H = check_subsupergroup(gl11, ideal(gl11, u["a"], u["beta"], u["a"] ** 2, u["beta"] * u["alpha"]))
    assert H.dim == (1, 1)


def test_reduce_normal_form(gl11):
    u = shifted(gl11.chart)
    x = coords(gl11.chart)
    I = ideal(gl11, u["a"] - u["b"] ** 2, u["beta"] - u["b"] * u["alpha"])
    f = x["a"] * x["beta"]
    assert I.reduce(f) == (1 + u["b"] ** 2) * u["b"] * u["alpha"]
    assert I.contains(f - I.reduce(f))
