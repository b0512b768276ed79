"""Coset supermanifolds: slice, trivialization, right-invariant functions, atlas and action."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .geometry import (
    DEFAULT_ORDER,
    Morphism,
    TangentMap,
    compose,
    differential_at,
    guard,
    identity,
    invert_local,
    morphism_residual,
    pair,
    product_map,
    projection,
    solve_reduced,
)
from .group import IdealPresentation, LieSupergroup, Subsupergroup, check_subsupergroup, product_ideal, translation_morphism
from .superalg import (
    ONE,
    ChartSignature,
    Product,
    Scalar,
    SignatureError,
    SuperPolynomial,
    sp_substitute,
    sp_value_at,
)


class TransversalityError(ValueError):
    """Slice and subgroup tangent spaces do not span the group's tangent space."""


class OverlapError(ValueError):
    """A sample point does not lie in both charts of an overlap."""


class ConsistencyError(ValueError):
    """Chartwise data disagree on an overlap."""

    def __init__(self, message: str, witness: Mapping[str, SuperPolynomial] | None = None):
        super().__init__(message)
        self.witness = dict(witness or {})


# ---------------------------------------------------------------------------
# Slice and trivialization


@dataclass(frozen=True, eq=False)
class Slice:
    """Coordinate slice through ``e`` complementary to a subgroup."""

    chart: ChartSignature
    embed: Morphism
    witness: TangentMap


def _stacked(*maps: TangentMap) -> TangentMap:
    even = [sum((list(m.even[i]) for m in maps), []) for i in range(maps[0].shape[0][0])]
    odd = [sum((list(m.odd[i]) for m in maps), []) for i in range(maps[0].shape[1][0])]
    shape = (
        (maps[0].shape[0][0], sum(m.shape[0][1] for m in maps)),
        (maps[0].shape[1][0], sum(m.shape[1][1] for m in maps)),
    )
    return TangentMap(even, odd, shape)


def transversal_slice(G: LieSupergroup, H: Subsupergroup) -> Slice:
    """The slice on the pivot coordinates of ``H``'s ideal; the others sit at ``e``."""
    gc = G.chart
    piv = set(H.pivot_names)
    even = tuple(n for n in gc.even if n in piv)
    odd = tuple(n for n in gc.odd if n in piv)
    e = G.identity_point
    chart = ChartSignature(even, odd, tuple(e[n] for n in even))
    pb = {}
    for n in gc.names:
        if n in piv:
            pb[n] = SuperPolynomial.coordinate(chart, n)
        elif gc.parity_of(n):
            pb[n] = SuperPolynomial.zero(chart)
        else:
            pb[n] = SuperPolynomial.constant(chart, e[n])
    embed = Morphism(chart, gc, pb)
    witness = _stacked(differential_at(embed), differential_at(H.embed))
    if not witness.is_invertible():
        raise TransversalityError("slice and subgroup are not transversal at e; re-pivot the ideal")
    return Slice(chart, embed, witness)


@dataclass(frozen=True, eq=False)
class Trivialization:
    """``nu`` restricted to ``S x H`` and jets of its local inverse at ``(e, e)``."""

    group: LieSupergroup
    subgroup: Subsupergroup
    slice: Slice
    product: Product
    forward: Morphism
    inverse: Morphism
    order: int

    def round_trip_residuals(self, order: int | None = None) -> dict[str, dict[str, SuperPolynomial]]:
        order = self.order if order is None else order
        return {
            "forward_inverse": morphism_residual(compose(self.inverse, self.forward), identity(self.forward.target), order),
            "inverse_forward": morphism_residual(compose(self.forward, self.inverse), identity(self.forward.source), order),
        }

    def differential_blocks(self) -> tuple[TangentMap, TangentMap]:
        """Differential of ``forward`` at ``(e, e)`` and the ``v_s + v_h`` block form it should equal."""
        return differential_at(self.forward), self.slice.witness


def build_trivialization(G: LieSupergroup, H: Subsupergroup, S: Slice, order: int = DEFAULT_ORDER) -> Trivialization:
    """``S x H -> G``, ``(s, h) -> s h``, with its inverse jets at ``(e, e)``."""
    prod = Product((S.chart, H.chart), ("_s", "_h"))
    s_part = compose(projection(prod, 0), S.embed)
    h_part = compose(projection(prod, 1), H.embed)
    forward = compose(pair([s_part, h_part], G.product(2)), G.mul).with_target(G.chart)
    work = order + guard(G.chart, prod.signature)
    inverse = invert_local(forward, order=work)
    return Trivialization(G, H, S, prod, forward, inverse, order)


# ---------------------------------------------------------------------------
# Product functions and right invariance


def decompose_product_function(
    f: SuperPolynomial, prod: Product, w: int = 0, order: int | None = None
) -> list[tuple[SuperPolynomial, SuperPolynomial]]:
    """Split ``f`` on ``W x F`` as ``sum h_j g_j`` with distinct monomials ``h_j`` in the ``W`` variables.

    ``w`` is the index of the factor ``W``.  Monomials are in the shifted
    variables of ``W`` and come out in graded-lex order.
    """
    if len(prod.factors) != 2 or f.signature != prod.signature:
        raise SignatureError("function must live on the given two-factor product")
    if order is not None:
        f = f.truncate(order)
    sig = prod.signature
    W, F = prod.factors[w], prod.factors[1 - w]
    e_w = {sig.locate(prod.name(w, n))[1]: i for i, n in enumerate(W.even)}
    e_f = {sig.locate(prod.name(1 - w, n))[1]: i for i, n in enumerate(F.even)}
    o_w = {sig.locate(prod.name(w, n))[1]: i for i, n in enumerate(W.odd)}
    o_f = {sig.locate(prod.name(1 - w, n))[1]: i for i, n in enumerate(F.odd)}
    groups: dict[tuple, list] = {}
    for exps, odd, c in f.terms():
        ew = [0] * len(W.even)
        ef = [0] * len(F.even)
        for j, k in enumerate(exps):
            if j in e_w:
                ew[e_w[j]] = k
            else:
                ef[e_f[j]] = k
        ow = [o_w[j] for j in odd if j in o_w]
        of = [o_f[j] for j in odd if j in o_f]
        # the product lists factor 0 first; put W's odd factors in front
        if w == 1 and len(ow) % 2 and len(of) % 2:
            c = -c
        groups.setdefault((tuple(ew), tuple(ow)), []).append((tuple(ef), tuple(of), c))
    out = []
    for (ew, ow), items in groups.items():
        h = SuperPolynomial.from_terms(W, [(ew, ow, ONE)])
        g = SuperPolynomial.from_terms(F, items)
        if g:
            out.append((h, g))
    key = lambda hg: next(iter(hg[0].terms()))[:2]
    return sorted(out, key=lambda hg: (sum(key(hg)[0]), len(key(hg)[1]), [-x for x in key(hg)[0]], key(hg)[1]))


def reassemble(parts: Sequence[tuple[SuperPolynomial, SuperPolynomial]], prod: Product, w: int = 0) -> SuperPolynomial:
    total = SuperPolynomial.zero(prod.signature)
    for h, g in parts:
        total = total + prod.inject(h, w) * prod.inject(g, 1 - w)
    return total


@dataclass(frozen=True)
class InvarianceResult:
    invariant: bool
    residual: SuperPolynomial

    def __bool__(self):
        return self.invariant


def is_right_invariant(
    G: LieSupergroup, H: Subsupergroup, f: SuperPolynomial, order: int = DEFAULT_ORDER
) -> InvarianceResult:
    """Whether ``nu*(f) - pr_1*(f)`` vanishes modulo ``H``'s ideal on the second factor.

    ``f`` lives on the group chart, centered at any reduced point ``g``; the
    product is expanded at ``(g, e)``.
    """
    if not f.signature.same_coordinates(G.chart):
        raise SignatureError("function must live on the group chart")
    prod = Product((f.signature, G.chart), ("1", "2"))
    nu = G.mul.recentered(prod.signature.center_point())
    lhs = sp_substitute(f, nu.pullback, order + guard(prod.signature))
    diff = lhs - prod.inject(f, 0)
    J = product_ideal(H.ideal, prod, (1,))
    r = J.reduce(diff, order)
    return InvarianceResult(not r, r)


def whole_group(G: LieSupergroup, order: int = DEFAULT_ORDER) -> Subsupergroup:
    """``G`` as a subsupergroup of itself (empty ideal)."""
    return check_subsupergroup(G, IdealPresentation(G.chart, ()), order)


# ---------------------------------------------------------------------------
# Atlas


@dataclass(frozen=True, eq=False)
class CosetChart:
    """Chart around ``gH``: slice coordinates, section ``i_g`` and projection ``p_gU`` at ``g``."""

    representative: dict[str, Scalar]
    chart: ChartSignature
    section: Morphism
    projection: Morphism


@dataclass(frozen=True, eq=False)
class Transition:
    source_chart: int
    target_chart: int
    morphism: Morphism

    @property
    def sample(self) -> dict[str, Scalar]:
        return self.morphism.source.center_point()


@dataclass(eq=False)
class CosetAtlas:
    """Finitely many coset charts with transitions at recorded sample points.

    ``work`` is the jet order used internally; results are compared at
    ``order``.
    """

    group: LieSupergroup
    subgroup: Subsupergroup
    slice: Slice
    trivialization: Trivialization
    charts: list[CosetChart]
    overlaps: list[Transition]
    order: int
    work: int
    _inverse_cache: dict = field(default_factory=dict, repr=False)

    @property
    def dim(self) -> tuple[int, int]:
        return self.slice.chart.dim

    def group_point_of(self, i: int, s: Mapping[str, object]) -> dict[str, Scalar]:
        """Reduced point ``g_i s`` of the group for slice coordinates ``s`` in chart ``i``."""
        c = self.charts[i]
        return {n: sp_value_at(c.section.pullback[n], c.chart.point(s)) for n in self.group.chart.even}

    def locate(self, i: int, q: Mapping[str, object]) -> tuple[dict[str, Scalar], dict[str, Scalar]]:
        """Slice and subgroup coordinates ``(s, h)`` with ``q = g_i s h`` (reduced)."""
        G = self.group
        q = G.chart.point(q)
        ginv = G.reduced_inverse(self.charts[i].representative)
        r = G.multiply_points(ginv, q)
        T = self.trivialization.forward
        try:
            sol = solve_reduced(T, r, guess=T.source.center_point())
        except ValueError as exc:
            raise OverlapError(f"{dict(q)} is not in chart {i}: {exc}") from None
        prod = self.trivialization.product
        s = {n: sol[prod.name(0, n)] for n in prod.factors[0].even}
        h = {n: sol[prod.name(1, n)] for n in prod.factors[1].even}
        return s, h

    def projection_at(self, i: int, q: Mapping[str, object]) -> Morphism:
        """``p_{g_i U}`` expanded at the reduced group point ``q``."""
        G = self.group
        q = G.chart.point(q)
        s, h = self.locate(i, q)
        key = (tuple(s.values()), tuple(h.values()))
        prod = self.trivialization.product
        tinv = self._inverse_cache.get(key)
        if tinv is None:
            pt = {prod.name(0, n): v for n, v in s.items()} | {prod.name(1, n): v for n, v in h.items()}
            tinv = invert_local(self.trivialization.forward, pt, self.work)
            self._inverse_cache[key] = tinv
        ginv = G.reduced_inverse(self.charts[i].representative)
        left = translation_morphism(G, ginv, "left").recentered(q)
        pr = projection(prod, 0).recentered(tinv.reduced_image)
        return compose(compose(left, tinv), pr).with_target(self.charts[i].chart.with_center(s))

    def transition(self, i: int, j: int, s: Mapping[str, object]) -> Morphism:
        """``p_{g_j U} o i_{g_i}`` expanded at slice point ``s`` of chart ``i``."""
        ci = self.charts[i]
        s = ci.chart.point(s)
        section = ci.section.recentered(s)
        q = section.reduced_image
        return compose(section, self.projection_at(j, q))

    def transition_residual(self, t: Transition) -> dict[str, SuperPolynomial]:
        """Zero iff the stored transition is invertible and matches a fresh computation."""
        fresh = self.transition(t.source_chart, t.target_chart, t.sample)
        return morphism_residual(fresh, t.morphism, self.order)

    def section_projection_residual(self, i: int) -> dict[str, SuperPolynomial]:
        """``p o i_g - id`` on chart ``i``."""
        c = self.charts[i]
        return morphism_residual(compose(c.section, c.projection), identity(c.chart), self.order)


def coset_atlas(
    G: LieSupergroup,
    H: Subsupergroup,
    representatives: Sequence[Mapping[str, object]],
    overlap_samples: Sequence[tuple[int, int, Mapping[str, object]]] = (),
    order: int = DEFAULT_ORDER,
    slice_: Slice | None = None,
) -> CosetAtlas:
    """Charts ``g V`` for each representative and transitions at the given samples.

    Each sample ``(i, j, s)`` gives slice coordinates ``s`` in chart ``i``
    of a point that must also lie in chart ``j``.
    """
    S = slice_ or transversal_slice(G, H)
    # two nested compositions may each lose a guard's worth of degrees
    work = order + 2 * guard(G.chart, Product((G.chart, G.chart, S.chart), ("1", "2", "3")).signature)
    triv = build_trivialization(G, H, S, work)
    atlas = CosetAtlas(G, H, S, triv, [], [], order, work)
    for g in representatives:
        g = G.chart.point(g)
        G.reduced_inverse(g)
        section = compose(S.embed, translation_morphism(G, g, "left")).with_target_center()
        atlas.charts.append(CosetChart(g, S.chart, section, None))
        atlas.charts[-1] = CosetChart(g, S.chart, section, atlas.projection_at(len(atlas.charts) - 1, g))
    for i, j, s in overlap_samples:
        t = atlas.transition(i, j, s)
        if not t.source.dim == t.target.dim or not _invertible(t):
            raise ConsistencyError(f"transition {i}->{j} at {dict(s)} is not invertible")
        atlas.overlaps.append(Transition(i, j, t))
    return atlas


def _invertible(phi: Morphism) -> bool:
    d = differential_at(phi)
    return d.is_invertible()


@dataclass(frozen=True)
class CocycleReport:
    residuals: list[tuple[tuple[int, int, int], dict[str, Scalar], dict[str, SuperPolynomial]]]

    @property
    def passed(self) -> bool:
        return not any(r for _, _, r in self.residuals)


def verify_cocycle(
    atlas: CosetAtlas, triples: Sequence[tuple[int, int, int, Mapping[str, object]]], order: int | None = None
) -> CocycleReport:
    """``Psi_ik - Psi_jk o Psi_ij`` at slice point ``s`` of chart ``i``."""
    order = atlas.order if order is None else order
    out = []
    for i, j, k, s in triples:
        s = atlas.charts[i].chart.point(s)
        t_ij = atlas.transition(i, j, s)
        t_jk = atlas.transition(j, k, t_ij.reduced_image)
        t_ik = atlas.transition(i, k, s)
        out.append(((i, j, k), s, morphism_residual(t_ik, compose(t_ij, t_jk), order)))
    return CocycleReport(out)


# ---------------------------------------------------------------------------
# Action of G on G/H


def alpha_at(atlas: CosetAtlas, i: int, x: Mapping[str, object], s: Mapping[str, object], j: int) -> Morphism:
    """``p_j o nu o (id x i_{g_i})`` expanded at group point ``x`` and slice point ``s`` of chart ``i``."""
    G = atlas.group
    ci = atlas.charts[i]
    x = G.chart.point(x)
    s = ci.chart.point(s)
    prod = Product((G.chart.with_center(x), ci.chart.with_center(s)), ("1", "2"))
    inner = product_map([identity(prod.factors[0]), ci.section.recentered(s)], prod, G.product(2))
    moved = compose(inner, G.mul)
    proj = atlas.projection_at(j, moved.reduced_image)
    return compose(moved.with_target_center(), proj)


@dataclass(frozen=True)
class AlphaReport:
    """Identity, compatibility and chart-agreement residuals of the coset action."""

    residuals: dict[str, dict[str, SuperPolynomial]]

    @property
    def passed(self) -> bool:
        return not any(self.residuals.values())


def coset_action_alpha(
    atlas: CosetAtlas,
    samples: Sequence[tuple[int, Mapping[str, object], Mapping[str, object], int]],
    order: int | None = None,
) -> AlphaReport:
    """Check that the chartwise ``alpha`` agree on overlaps.

    Each sample ``(i, x, s, j)``: ``alpha`` from chart ``i`` at ``(x, s)``
    versus ``alpha`` from chart ``j`` at ``(x, Psi_ij(s))`` after ``id x Psi_ij``,
    both read in chart ``i``'s target chart choice ``j``.
    """
    order = atlas.order if order is None else order
    res = {}
    for n, (i, x, s, j) in enumerate(samples):
        a_i = alpha_at(atlas, i, x, s, j)
        psi = atlas.transition(i, j, s)
        G = atlas.group
        xs = G.chart.point(x)
        src = Product((G.chart.with_center(xs), psi.source), ("1", "2"))
        tgt = Product((G.chart.with_center(xs), psi.target), ("1", "2"))
        moved = product_map([identity(src.factors[0]), psi], src, tgt)
        a_j = alpha_at(atlas, j, xs, psi.reduced_image, j)
        res[f"agree[{n}]"] = morphism_residual(a_i, compose(moved, a_j), order)
    return AlphaReport(res)
