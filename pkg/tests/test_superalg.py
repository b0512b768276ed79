from __future__ import annotations

import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import to_grassmann
from supercoset.superalg import (
    ChartSignature,
    ParityError,
    Scalar,
    SignatureError,
    SuperPolynomial,
    jet_truncate,
    sp_mul,
    sp_recenter,
    sp_substitute,
    sp_value_at,
)

SIG = ChartSignature(("x", "y"), ("p", "q", "r"))
SYM = {"x": sp.Symbol("x"), "y": sp.Symbol("y")}
GEN = {"p": "p", "q": "q", "r": "r"}


def c(sig, n):
    return SuperPolynomial.coordinate(sig, n)


# ---------------------------------------------------------------------------
# Scalars


def test_scalar_canonical_form():
    s = Scalar.parse("6/4")
    assert s.fraction_pair() == (sp.Rational(3, 2), 0)
    assert Scalar(0) == Scalar.parse("0/5")
    assert Scalar.parse("1/2-3/4i") * Scalar.parse("2") == Scalar.parse("1-3/2i")
    assert Scalar.parse("i") * Scalar.parse("i") == Scalar(-1)


def test_scalar_inverse():
    z = Scalar.parse("1+2i")
    assert z * z.inverse() == Scalar(1)
    with pytest.raises(ZeroDivisionError):
        Scalar(0).inverse()


# ---------------------------------------------------------------------------
# Products


def test_anticommutation():
    sig = ChartSignature((), ("xi1", "xi2"))
    x1, x2 = c(sig, "xi1"), c(sig, "xi2")
    assert x2 * x1 == -(x1 * x2)
    assert x1 * x1 == SuperPolynomial.zero(sig)


def test_linear_in_one_odd():
    sig = ChartSignature(("f0", "f1", "g0", "g1"), ("xi",))
    f = c(sig, "f0") + c(sig, "f1") * c(sig, "xi")
    g = c(sig, "g0") + c(sig, "g1") * c(sig, "xi")
    want = c(sig, "f0") * c(sig, "g0") + (c(sig, "f0") * c(sig, "g1") + c(sig, "f1") * c(sig, "g0")) * c(sig, "xi")
    assert f * g == want


def test_square_with_nilpotent():
    sig = ChartSignature(("x",), ("xi1", "xi2"))
    x, a, b = c(sig, "x"), c(sig, "xi1"), c(sig, "xi2")
    assert (x + a * b) ** 2 == x * x + 2 * x * a * b


def test_signature_mismatch():
    with pytest.raises(SignatureError):
        sp_mul(c(SIG, "x"), c(ChartSignature(("x",)), "x"))


# ---------------------------------------------------------------------------
# Evaluation, substitution, recentering, truncation


def test_value_at_discards_nilpotents():
    sig = ChartSignature(("x",), ("xi1", "xi2"))
    x = c(sig, "x")
    f = 1 + x + x * c(sig, "xi1") * c(sig, "xi2")
    assert sp_value_at(f, {"x": 2}) == Scalar(3)
    assert sp_value_at(c(sig, "xi1"), {"x": 5}) == Scalar(0)
    assert sp_value_at(SuperPolynomial.constant(sig, 7), {"x": 0}) == Scalar(7)
    with pytest.raises(SignatureError):
        sp_value_at(f, {})


def test_substitute_example():
    src = ChartSignature(("y",), ("eta", "xi2"))
    tgt = ChartSignature(("x",), ("xi1", "xi2"))
    f = c(src, "y") + c(src, "eta") * c(src, "xi2")
    x = c(tgt, "x")
    out = sp_substitute(f, {"y": x * x, "eta": x * c(tgt, "xi1"), "xi2": c(tgt, "xi2")})
    assert out == x * x + x * c(tgt, "xi1") * c(tgt, "xi2")


def test_substitute_identity_and_parity():
    f = c(SIG, "x") * c(SIG, "p") + c(SIG, "y") ** 3
    ident = {n: c(SIG, n) for n in SIG.names}
    assert sp_substitute(f, ident) == f
    bad = dict(ident, p=c(SIG, "x"))
    with pytest.raises(ParityError):
        sp_substitute(f, bad)


def test_recenter():
    sig = ChartSignature(("x",))
    f = c(sig, "x") ** 2
    g = sp_recenter(f, {"x": 1})
    u = SuperPolynomial.shifted(g.signature, "x")
    assert g == 1 + 2 * u + u * u
    assert sp_recenter(f, {"x": 0}) == f
    assert sp_recenter(g, {"x": 0}) == f


def test_truncate_examples():
    sig = ChartSignature(("x",), ("xi1", "xi2"))
    x, a, b = c(sig, "x"), c(sig, "xi1"), c(sig, "xi2")
    assert jet_truncate(x**3 + x + a, 2).body == x + a
    f = x * x * a * b
    assert jet_truncate(f, 2).body == f
    assert jet_truncate(x**2 + 1, 5).body == x**2 + 1
    with pytest.raises(ValueError):
        jet_truncate(x, -1)


# ---------------------------------------------------------------------------
# Properties

coeff = st.integers(-3, 3)


@st.composite
def superpolys(draw, sig=SIG, max_terms=5, max_deg=2):
    terms = []
    for _ in range(draw(st.integers(0, max_terms))):
        exps = [draw(st.integers(0, max_deg)) for _ in sig.even]
        odd = draw(st.lists(st.integers(0, len(sig.odd) - 1), unique=True, max_size=len(sig.odd)))
        terms.append((exps, odd, draw(coeff)))
    return SuperPolynomial.from_terms(sig, terms)


@st.composite
def homogeneous(draw, parity):
    f = draw(superpolys())
    keep = [(e, o, v) for e, o, v in f.terms() if len(o) % 2 == parity]
    return SuperPolynomial.from_terms(SIG, keep)


@settings(max_examples=60, deadline=None)
@given(superpolys(), superpolys(), superpolys())
def test_ring_axioms(f, g, h):
    assert (f * g) * h == f * (g * h)
    assert f * (g + h) == f * g + f * h
    assert (f + g) * h == f * h + g * h


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 1), st.integers(0, 1), st.data())
def test_supercommutativity(pf, pg, data):
    f = data.draw(homogeneous(pf))
    g = data.draw(homogeneous(pg))
    sign = -1 if pf and pg else 1
    assert f * g == sign * (g * f)


@settings(max_examples=40, deadline=None)
@given(superpolys(), superpolys(), st.data())
def test_substitution_is_homomorphism(f, g, data):
    tgt = ChartSignature(("u",), ("s", "t"))
    sub = {}
    for n in SIG.even:
        sub[n] = SuperPolynomial.from_terms(
            tgt, [([data.draw(st.integers(0, 2))], o, data.draw(coeff)) for o in ([], [0, 1])]
        )
    for n in SIG.odd:
        sub[n] = SuperPolynomial.from_terms(tgt, [([data.draw(st.integers(0, 2))], [data.draw(st.integers(0, 1))], data.draw(coeff))])
    assert sp_substitute(f * g, sub) == sp_substitute(f, sub) * sp_substitute(g, sub)
    assert sp_substitute(f + g, sub) == sp_substitute(f, sub) + sp_substitute(g, sub)


@settings(max_examples=60, deadline=None)
@given(superpolys(max_deg=3), superpolys(max_deg=3), st.integers(0, 4))
def test_truncation_is_congruence(f, g, D):
    lhs = jet_truncate(f * g, D)
    rhs = jet_truncate(jet_truncate(f, D).body * jet_truncate(g, D).body, D)
    assert lhs == rhs


@settings(max_examples=60, deadline=None)
@given(superpolys(), st.integers(-3, 3), st.integers(-3, 3))
def test_value_at_matches_constant_substitution(f, x, y):
    tgt = ChartSignature((), ())
    sub = {"x": SuperPolynomial.constant(tgt, x), "y": SuperPolynomial.constant(tgt, y)}
    sub |= {n: SuperPolynomial.zero(tgt) for n in SIG.odd}
    assert sp_value_at(f, {"x": x, "y": y}) == sp_substitute(f, sub).constant_term()


@settings(max_examples=40, deadline=None)
@given(superpolys(), st.integers(-2, 2), st.integers(-2, 2))
def test_recenter_round_trip(f, x, y):
    g = sp_recenter(f, {"x": x, "y": y})
    assert sp_recenter(g, {"x": 0, "y": 0}) == f
    assert sp_value_at(g, {"x": 1, "y": -1}) == sp_value_at(f, {"x": 1, "y": -1})


@settings(max_examples=40, deadline=None)
@given(superpolys(), superpolys())
def test_product_matches_grassmann_oracle(f, g):
    order = ("p", "q", "r")
    lhs = to_grassmann(f * g, SYM, GEN, order)
    rhs = to_grassmann(f, SYM, GEN, order) * to_grassmann(g, SYM, GEN, order)
    assert lhs == rhs
