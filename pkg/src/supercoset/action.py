"""Actions on superdomains: orbit maps, fundamental fields, stabilizers and the equivariant isomorphism."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

from . import linalg
from .coset import CosetAtlas, alpha_at
from .geometry import (
    DEFAULT_ORDER,
    AdaptedChart,
    Morphism,
    adapted_coordinates,
    compose,
    constant,
    differential_at,
    guard,
    identity,
    morphism_residual,
    pair,
    projection,
    rank_profile,
)
from .group import (
    IdealPresentation,
    LieSupergroup,
    NotInvariantError,
    Subsupergroup,
    product_ideal,
    subgroup_chart,
    translation_morphism,
)
from .superalg import (
    ChartSignature,
    Product,
    Scalar,
    SignatureError,
    SuperPolynomial,
    sp_derivative,
    sp_substitute,
    sp_value_at,
)


class NotTransitiveError(ValueError):
    """The orbit map is not a submersion at the identity."""


# ---------------------------------------------------------------------------
# Actions


@dataclass(frozen=True, eq=False)
class Action:
    """A left action ``mu: G x M -> M`` on a single chart.

    The product uses the bare coordinate names of both factors, so group and
    space names must be disjoint.
    """

    name: str
    group: LieSupergroup
    space: ChartSignature
    mu: Morphism

    def __post_init__(self):
        if not self.mu.is_exact:
            raise ValueError("action law must be an exact polynomial morphism")
        prod = self.product()
        if not self.mu.source.same_coordinates(prod.signature) or not self.mu.target.same_coordinates(self.space):
            raise SignatureError("action law must map group x space to space")
        object.__setattr__(self, "mu", self.mu.with_target(self.space))

    def product(self, x: Mapping[str, object] | None = None) -> Product:
        space = self.space if x is None else self.space.with_center(self.space.point(x))
        return Product((self.group.chart, space), ("", ""))

    def act(self, g: Mapping[str, object], x: Mapping[str, object]) -> dict[str, Scalar]:
        """Reduced point ``g x``."""
        pt = self.group.chart.point(g) | self.space.point(x)
        return {n: sp_value_at(self.mu.pullback[n], pt) for n in self.space.even}

    def left(self, g: Mapping[str, object], x: Mapping[str, object] | None = None) -> Morphism:
        """``y -> g y`` on the space, expanded at ``x`` (default: the chart center)."""
        x = self.space.point(x)
        sig = self.space.with_center(x)
        const = constant(sig, self.group.chart, self.group.chart.point(g))
        return compose(pair([const, identity(sig)], self.product(x)), self.mu).with_target_center()


@dataclass(frozen=True)
class Report:
    residuals: dict[str, dict[str, SuperPolynomial]]

    @property
    def passed(self) -> bool:
        return not any(self.residuals.values())

    def failures(self) -> list[str]:
        return [k for k, v in self.residuals.items() if v]


def verify_action_axioms(A: Action, order: int = DEFAULT_ORDER) -> Report:
    """Residuals of ``mu o (nu x id) = mu o (id x mu)`` and ``mu o (e x id) = id``."""
    G, M = A.group, A.space
    p3 = Product((G.chart, G.chart, M), ("1", "2", ""))
    p2g = G.product(2)
    s3 = p3.signature
    # nu x id and id x mu as maps G x G x M -> G x M
    inj = {n: p3.coordinate(0, n) for n in G.chart.names}
    inj2 = {p2g.name(0, n): p3.coordinate(0, n) for n in G.chart.names}
    inj2 |= {p2g.name(1, n): p3.coordinate(1, n) for n in G.chart.names}
    lhs_pb = {n: sp_substitute(G.mul.pullback[n], inj2) for n in G.chart.names}
    lhs_pb |= {n: p3.coordinate(2, n) for n in M.names}
    mu_in = {n: p3.coordinate(1, n) for n in G.chart.names} | {n: p3.coordinate(2, n) for n in M.names}
    mu_pb = A.mu.recentered(A.product().signature.center_point()).pullback
    rhs_pb = dict(inj) | {n: sp_substitute(mu_pb[n], mu_in) for n in M.names}
    tgt = A.product().signature
    lhs = compose(Morphism(s3, tgt.with_center(tgt.center), lhs_pb), A.mu)
    rhs = compose(Morphism(s3, tgt, rhs_pb), A.mu)
    res = {"compatibility": morphism_residual(lhs, rhs)}
    eps = constant(M, G.chart, G.identity_point)
    res["identity"] = morphism_residual(compose(pair([eps, identity(M)], A.product()), A.mu), identity(M))
    return Report(res)


# ---------------------------------------------------------------------------
# Orbit maps


@dataclass(frozen=True, eq=False)
class OrbitMorphism:
    base_point: dict[str, Scalar]
    morphism: Morphism


def orbit_map(A: Action, x: Mapping[str, object]) -> OrbitMorphism:
    """``mu_x: g -> g x`` as an exact morphism from the group chart at ``e``."""
    x = A.space.point(x)
    G = A.group
    const = constant(G.chart, A.space, x)
    mux = compose(pair([identity(G.chart), const], A.product(x)), A.mu).with_target_center()
    return OrbitMorphism(x, mux)


def translation_identities(A: Action, x: Mapping[str, object], g: Mapping[str, object]) -> dict[str, dict[str, SuperPolynomial]]:
    """Residuals of ``mu_x o r_g = mu_{gx}`` and ``mu_x o l_g = lbar_g o mu_x``."""
    G = A.group
    x = A.space.point(x)
    g = G.chart.point(g)
    mux = orbit_map(A, x).morphism
    gx = A.act(g, x)
    right = compose(translation_morphism(G, g, "right"), mux)
    left = compose(translation_morphism(G, g, "left"), mux)
    bar = compose(mux, A.left(g, x))
    return {
        "right": morphism_residual(right, orbit_map(A, gx).morphism),
        "left": morphism_residual(left, bar),
    }


# ---------------------------------------------------------------------------
# Fundamental fields and transitivity


@dataclass(frozen=True)
class FundamentalField:
    """Coefficients of the vector field induced by a basis element, as jets at ``x``."""

    generator: str
    parity: int
    point: dict[str, Scalar]
    coefficients: dict[str, SuperPolynomial]

    def value_at_point(self) -> tuple[Scalar, ...]:
        """Tangent vector at ``x``: values of the coefficients of matching parity."""
        sig = next(iter(self.coefficients.values())).signature
        names = sig.odd if self.parity else sig.even
        return tuple(self.coefficients[n].constant_term() for n in names)


def fundamental_field(A: Action, generator: str, x: Mapping[str, object], order: int = DEFAULT_ORDER) -> FundamentalField:
    """``X`` applied to ``mu*`` in the group variables, then restricted to ``e``."""
    G, M = A.group, A.space
    x = M.point(x)
    par = G.chart.parity_of(generator)
    msig = M.with_center(x)
    prod = A.product(x)
    mu = A.mu.recentered(prod.signature.center_point())
    at_e = {n: SuperPolynomial.constant(msig, v) for n, v in G.identity_point.items()}
    at_e |= {n: SuperPolynomial.zero(msig) for n in G.chart.odd}
    at_e |= {n: SuperPolynomial.coordinate(msig, n) for n in M.names}
    coeffs = {}
    for n in M.names:
        d = sp_derivative(mu.pullback[n], generator)
        coeffs[n] = sp_substitute(d, at_e, order)
    return FundamentalField(generator, par, x, coeffs)


@dataclass(frozen=True)
class TransitivityReport:
    submersion: bool
    fields_span: bool
    field_residuals: dict[str, tuple[Scalar, ...]]

    @property
    def agree(self) -> bool:
        return self.submersion == self.fields_span

    def __bool__(self):
        return self.submersion


def transitivity_criteria(A: Action, x: Mapping[str, object], order: int = DEFAULT_ORDER) -> TransitivityReport:
    """Both transitivity tests at ``x`` plus the column-by-column comparison between them."""
    G, M = A.group, A.space
    mux = orbit_map(A, x).morphism
    sub = rank_profile(mux).is_submersion
    d = differential_at(mux)
    cols_e, cols_o = [], []
    resid = {}
    for i, n in enumerate(G.chart.names):
        X = fundamental_field(A, n, x, order)
        v = X.value_at_point()
        if X.parity:
            j = G.chart.odd.index(n)
            want = tuple(row[j] for row in d.odd)
            cols_o.append(v)
        else:
            j = G.chart.even.index(n)
            want = tuple(row[j] for row in d.even)
            cols_e.append(v)
        diff = tuple(a - b for a, b in zip(v, want))
        if any(diff):
            resid[n] = diff
    ne, no = M.dim
    rank_e = linalg.rank([list(r) for r in zip(*cols_e)]) if ne and cols_e else 0
    rank_o = linalg.rank([list(r) for r in zip(*cols_o)]) if no and cols_o else 0
    return TransitivityReport(sub, rank_e == ne and rank_o == no, resid)


def is_transitive_at(A: Action, x: Mapping[str, object]) -> bool:
    """Submersion test for ``mu_x`` at ``e``, cross-checked against the fundamental fields."""
    rep = transitivity_criteria(A, x, 1)
    if not rep.agree:
        raise AssertionError("transitivity criteria disagree")
    return rep.submersion


# ---------------------------------------------------------------------------
# Stabilizers


@dataclass(frozen=True, eq=False)
class Stabilizer:
    """Stabilizer subsupergroup of ``x`` with the data of its construction."""

    subgroup: Subsupergroup
    generators: tuple[SuperPolynomial, ...]
    adapted: AdaptedChart
    residuals: dict[str, dict[int, SuperPolynomial]]

    @property
    def passed(self) -> bool:
        return not any(self.residuals.values())


def stabilizer_subgroup(A: Action, x: Mapping[str, object], order: int = DEFAULT_ORDER) -> Stabilizer:
    """Subsupergroup cut out by the ``mu_x``-pullbacks of the space coordinates centered at ``x``.

    Invariance under ``nu`` is checked by reduction modulo both product
    copies of the ideal.  Invariance under ``iota`` is checked in two steps:
    the ideal lies in its ``iota``-pullback, and ``iota^2 = id``.
    """
    G, M = A.group, A.space
    x = M.point(x)
    if not is_transitive_at(A, x):
        raise NotTransitiveError(f"action is not transitive at {x}")
    mux = orbit_map(A, x).morphism
    gens = []
    for n in M.even:
        gens.append(mux.pullback[n] - x[n])
    for n in M.odd:
        gens.append(mux.pullback[n])
    ideal = IdealPresentation(G.chart, tuple(gens))
    adapted = adapted_coordinates(mux, order=order)
    chart, embed = subgroup_chart(ideal, order)

    work = order + guard(G.chart)
    iota = G.inverse(work)
    J = product_ideal(ideal, G.product(2), (0, 1))
    pulled = IdealPresentation(G.chart, tuple(sp_substitute(g, iota.pullback, work) for g in gens))
    res: dict[str, dict[int, SuperPolynomial]] = {"mul": {}, "ideal_in_iota_pullback": {}, "involution": {}}
    for k, g in enumerate(gens):
        r = J.reduce(sp_substitute(g, G.mul.pullback), order)
        if r:
            res["mul"][k] = r
        r = pulled.reduce(g, order)
        if r:
            res["ideal_in_iota_pullback"][k] = r
    inv2 = morphism_residual(compose(iota, iota.with_target_center()), identity(G.chart), order)
    for k, n in enumerate(G.chart.names):
        if n in inv2:
            res["involution"][k] = inv2[n]
    H = Subsupergroup(G, ideal, chart, embed, res, order)
    for kind, found in res.items():
        for k, r in found.items():
            raise NotInvariantError(f"{kind} check fails at index {k} (remainder {r})", None, r)
    return Stabilizer(H, tuple(gens), adapted, res)


# ---------------------------------------------------------------------------
# Equivariant isomorphism


@dataclass(frozen=True, eq=False)
class EquivariantIso:
    """Chartwise ``beta = mu_x o i_g`` and the residuals certifying it."""

    charts: list[Morphism]
    residuals: dict[str, dict[str, SuperPolynomial]]
    invertible: list[bool]

    @property
    def passed(self) -> bool:
        return all(self.invertible) and not any(self.residuals.values())


def equivariant_iso(
    A: Action,
    x: Mapping[str, object],
    atlas: CosetAtlas,
    samples: Sequence[tuple[int, Mapping[str, object], Mapping[str, object], int]] = (),
    order: int | None = None,
) -> EquivariantIso:
    """Build ``beta`` on each chart of ``atlas`` (for ``H = G_x``) and check the diagrams.

    ``samples`` are ``(i, g, s, j)``: group point ``g`` acting on slice point
    ``s`` of chart ``i`` with the image read in chart ``j``.
    """
    order = atlas.order if order is None else order
    G = A.group
    mux = orbit_map(A, x).morphism
    res: dict[str, dict[str, SuperPolynomial]] = {}
    betas, inv = [], []
    for i, c in enumerate(atlas.charts):
        beta = compose(c.section, mux)
        betas.append(beta)
        inv.append(differential_at(beta).is_invertible())
        # beta o p = mu_x around the representative
        res[f"beta_p[{i}]"] = morphism_residual(compose(c.projection, beta), mux, order)
    T = atlas.trivialization
    prod = T.product
    flat = compose(compose(projection(prod, 0), atlas.slice.embed), mux)
    res["mu_x_trivialization"] = morphism_residual(compose(T.forward, mux), flat)
    for n, (i, g, s, j) in enumerate(samples):
        g = G.chart.point(g)
        ci = atlas.charts[i]
        s = ci.chart.point(s)
        a = alpha_at(atlas, i, g, s, j)
        src = Product((G.chart.with_center(g), ci.chart.with_center(s)), ("1", "2"))
        beta_i = betas[i].recentered(s)
        tgt = A.product(beta_i.reduced_image)
        mu_pb = A.mu
        # id x beta into the action's product, whose names are bare
        pb = {m: src.coordinate(0, m) for m in G.chart.names}
        pb |= {m: src.inject(beta_i.pullback[m], 1) for m in A.space.names}
        lhs = compose(Morphism(src.signature, tgt.signature, pb), mu_pb)
        rhs = compose(a, betas[j].recentered(a.reduced_image))
        res[f"equivariance[{n}]"] = morphism_residual(lhs, rhs, order)
    return EquivariantIso(betas, res, inv)
