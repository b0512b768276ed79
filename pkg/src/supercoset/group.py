"""Lie supergroups given by polynomial multiplication laws on a single chart."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Mapping, Sequence

from .geometry import (
    DEFAULT_ORDER,
    Morphism,
    ReducedSolveError,
    compose,
    constant,
    guard,
    identity,
    morphism_residual,
    pair,
    rank_profile,
    solve_implicit,
    solve_reduced,
)
from .superalg import (
    ONE,
    ZERO,
    ChartSignature,
    Product,
    Scalar,
    SignatureError,
    SuperPolynomial,
    sp_recenter,
    sp_rename,
    sp_substitute,
)


class NotInvariantError(ValueError):
    """A defining ideal is not carried into itself by a group morphism."""

    def __init__(self, message: str, generator: SuperPolynomial | None = None, witness: SuperPolynomial | None = None):
        super().__init__(message)
        self.generator = generator
        self.witness = witness


class DependentGeneratorsError(ValueError):
    """Ideal generators are not independent at the expansion point."""


class NotInvertibleError(ValueError):
    """A reduced group point has no inverse in the chart."""


# ---------------------------------------------------------------------------
# Groups


@dataclass(frozen=True, eq=False)
class LieSupergroup:
    """A supergroup chart centered at the identity with an exact multiplication ``nu``.

    ``mul`` is a morphism from ``chart x chart`` (suffixes ``1`` and ``2``)
    to ``chart``; the inverse is derived on demand and cached per jet order.
    """

    name: str
    chart: ChartSignature
    mul: Morphism
    _inverse: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if not self.mul.is_exact:
            raise ValueError("multiplication must be an exact polynomial morphism")
        want = self.product(2).signature
        mul = self.mul
        if not mul.source.same_coordinates(want) or not mul.target.same_coordinates(self.chart):
            raise SignatureError("multiplication must map chart x chart to chart")
        if mul.source != want:
            mul = mul.recentered(want.center_point())
        object.__setattr__(self, "mul", mul.with_target(self.chart))

    @classmethod
    def from_laws(
        cls,
        name: str,
        even: Sequence[str],
        odd: Sequence[str],
        identity_point: Mapping[str, object],
        laws: Mapping[str, SuperPolynomial],
    ) -> "LieSupergroup":
        """Build from pullbacks written on ``chart x chart`` (any center)."""
        chart = ChartSignature(tuple(even), tuple(odd))
        chart = chart.with_center(chart.point(identity_point))
        prod = Product((chart, chart), ("1", "2"))
        pb = {}
        for n in chart.names:
            f = laws[n]
            if not f.signature.same_coordinates(prod.signature):
                raise SignatureError(f"law for {n} is not written on the product chart")
            pb[n] = sp_recenter(f, prod.signature.center_point())
        return cls(name, chart, Morphism(prod.signature, chart, pb))

    @property
    def identity_point(self) -> dict[str, Scalar]:
        return self.chart.center_point()

    @property
    def dim(self) -> tuple[int, int]:
        return self.chart.dim

    def product(self, k: int) -> Product:
        return Product((self.chart,) * k, tuple(str(i + 1) for i in range(k)))

    def inverse(self, order: int = DEFAULT_ORDER) -> Morphism:
        """Jets of ``iota`` at ``e`` (cached)."""
        got = self._inverse.get(order)
        if got is None:
            got = derive_inverse(self, order)
            self._inverse[order] = got
        return got

    def multiply_points(self, g: Mapping[str, object], h: Mapping[str, object]) -> dict[str, Scalar]:
        """Reduced product ``g h`` of two reduced points."""
        prod = self.product(2)
        pt = {prod.name(0, n): v for n, v in self.chart.point(g).items()}
        pt |= {prod.name(1, n): v for n, v in self.chart.point(h).items()}
        from .superalg import sp_value_at

        return {n: sp_value_at(self.mul.pullback[n], pt) for n in self.chart.even}

    def reduced_inverse(self, g: Mapping[str, object]) -> dict[str, Scalar]:
        """Reduced ``g^-1``, solved exactly (raises if ``g`` is not invertible)."""
        g = self.chart.point(g)
        rg = translation_morphism(self, g, "right")
        try:
            inv = solve_reduced(rg, self.identity_point, guess=self.identity_point)
        except ReducedSolveError as exc:
            raise NotInvertibleError(f"{g} has no exact inverse: {exc}") from None
        if self.multiply_points(g, inv) != self.identity_point:
            raise NotInvertibleError(f"{g} has a left but no right inverse")
        return inv


def derive_inverse(G: LieSupergroup, order: int = DEFAULT_ORDER) -> Morphism:
    """Jets of ``iota`` around ``e``, solving ``nu(iota(g), g) = e`` for ``iota(g)``.

    This is the local inverse of the shear ``(h, g) -> (nu(h, g), g)``
    restricted to the slice where the first output equals ``e``.
    """
    return solve_implicit(G.mul, G.product(2), unknown=0, order=order)


@dataclass(frozen=True)
class AxiomReport:
    """Per-axiom residuals; an empty residual map means the axiom holds."""

    order: int
    residuals: dict[str, dict[str, SuperPolynomial]]

    @property
    def passed(self) -> bool:
        return not any(self.residuals.values())

    def failures(self) -> list[str]:
        return [k for k, v in self.residuals.items() if v]


def _triple_laws(G: LieSupergroup):
    """``nu x id`` and ``id x nu`` as morphisms ``G^3 -> G^2``."""
    p2, p3 = G.product(2), G.product(3)
    s3 = p3.signature
    left, right = {}, {}
    for n in G.chart.names:
        f = G.mul.pullback[n]
        left[p2.name(0, n)] = sp_rename(f, s3, {p2.name(0, m): p3.name(0, m) for m in G.chart.names} | {p2.name(1, m): p3.name(1, m) for m in G.chart.names})
        left[p2.name(1, n)] = p3.coordinate(2, n)
        right[p2.name(0, n)] = p3.coordinate(0, n)
        right[p2.name(1, n)] = sp_rename(f, s3, {p2.name(0, m): p3.name(1, m) for m in G.chart.names} | {p2.name(1, m): p3.name(2, m) for m in G.chart.names})
    return Morphism(s3, p2.signature, left), Morphism(s3, p2.signature, right)


def verify_group_axioms(G: LieSupergroup, order: int = DEFAULT_ORDER) -> AxiomReport:
    """Residuals of associativity, both identity laws, the inverse law and ``iota^2 = id``."""
    chart, nu = G.chart, G.mul
    p2 = G.product(2)
    e = G.identity_point
    work = order + guard(chart)
    iota = G.inverse(work)
    ident = identity(chart)
    eps = constant(chart, chart, e)

    lhs, rhs = _triple_laws(G)
    res = {"associativity": morphism_residual(compose(lhs, nu), compose(rhs, nu))}
    res["left_identity"] = morphism_residual(compose(pair([eps, ident], p2), nu), ident)
    res["right_identity"] = morphism_residual(compose(pair([ident, eps], p2), nu), ident)
    res["inverse"] = morphism_residual(compose(pair([iota, ident], p2), nu), eps.truncate(order), order)
    res["involution"] = morphism_residual(compose(iota, iota.with_target_center()), ident, order)
    return AxiomReport(order, res)


def translation_morphism(G: LieSupergroup, g: Mapping[str, object], side: str = "left") -> Morphism:
    """``l_g`` (``h -> g h``) or ``r_g`` (``h -> h g``) as an exact morphism at ``e``."""
    chart = G.chart
    g = chart.point(g)
    const = constant(chart, chart, g)
    if side == "left":
        maps = [const, identity(chart)]
    elif side == "right":
        maps = [identity(chart), const]
    else:
        raise ValueError("side must be 'left' or 'right'")
    return compose(pair(maps, G.product(2)), G.mul).with_target_center()


# ---------------------------------------------------------------------------
# Lie superalgebra


@dataclass(frozen=True)
class LieSuperalgebra:
    """Structure constants on the coordinate basis at ``e``.

    ``constants[i, j][k]`` is the ``k``-th component of ``[X_i, X_j]``.
    """

    basis: tuple[str, ...]
    parity: tuple[int, ...]
    constants: dict[tuple[int, int], tuple[Scalar, ...]]

    @property
    def dim(self) -> int:
        return len(self.basis)

    def index(self, name: str) -> int:
        return self.basis.index(name)

    def bracket(self, x: Sequence[object], y: Sequence[object]) -> tuple[Scalar, ...]:
        """Bilinear bracket of coefficient vectors."""
        out = [ZERO] * self.dim
        for i, xi in enumerate(x):
            xi = Scalar.of(xi)
            if not xi:
                continue
            for j, yj in enumerate(y):
                yj = Scalar.of(yj)
                if not yj:
                    continue
                c = xi * yj
                for k, v in enumerate(self.constants[i, j]):
                    if v:
                        out[k] = out[k] + c * v
        return tuple(out)

    def unit(self, i: int) -> tuple[Scalar, ...]:
        return tuple(ONE if k == i else ZERO for k in range(self.dim))

    def antisymmetry_residuals(self) -> list[tuple[int, int]]:
        bad = []
        for (i, j), v in self.constants.items():
            s = -1 if self.parity[i] and self.parity[j] else 1
            w = self.constants[j, i]
            if any(a + b * s for a, b in zip(v, w)):
                bad.append((i, j))
        return bad

    def jacobi_residuals(self) -> list[tuple[int, int, int]]:
        bad = []
        p = self.parity
        n = self.dim
        for i in range(n):
            for j in range(n):
                for k in range(n):
                    x, y, z = self.unit(i), self.unit(j), self.unit(k)
                    total = [ZERO] * n
                    for sgn, (u, v, w) in (
                        (p[i] * p[k], (x, y, z)),
                        (p[j] * p[i], (y, z, x)),
                        (p[k] * p[j], (z, x, y)),
                    ):
                        term = self.bracket(u, self.bracket(v, w))
                        total = [t - c if sgn else t + c for t, c in zip(total, term)]
                    if any(total):
                        bad.append((i, j, k))
        return bad

    def describe(self) -> list[str]:
        """Nonzero brackets ``[X_i, X_j]`` for ``i <= j``, as text."""
        lines = []
        for i in range(self.dim):
            for j in range(i, self.dim):
                v = self.constants[i, j]
                if any(v):
                    rhs = " + ".join(f"{c}*E_{self.basis[k]}" for k, c in enumerate(v) if c)
                    lines.append(f"[E_{self.basis[i]}, E_{self.basis[j]}] = {rhs}")
        return lines


def lie_superalgebra(G: LieSupergroup) -> LieSuperalgebra:
    """Brackets from the bilinear part of ``nu`` at ``(e, e)``.

    With ``B^k_ij`` the coefficient of ``w1_i w2_j`` in ``nu*(x_k)``,
    ``[X_i, X_j]^k = B^k_ij - (-1)^{|i||j|} B^k_ji``.
    """
    chart = G.chart
    p2 = G.product(2)
    sig = p2.signature
    ne, no = chart.dim
    names = chart.names
    parity = tuple(chart.parity_of(n) for n in names)

    def slot(factor, name):
        par, idx = sig.locate(p2.name(factor, name))
        return par, idx

    def coeff(f, first, second):
        exps = [0] * sig.dim[0]
        odd = []
        for factor, name in ((0, first), (1, second)):
            par, idx = slot(factor, name)
            if par:
                odd.append(idx)
            else:
                exps[idx] += 1
        return f.coefficient(tuple(exps), tuple(odd))

    B = {}
    for i, a in enumerate(names):
        for j, b in enumerate(names):
            B[i, j] = tuple(coeff(G.mul.pullback[k], a, b) for k in names)
    consts = {}
    for i in range(len(names)):
        for j in range(len(names)):
            s = -1 if parity[i] and parity[j] else 1
            consts[i, j] = tuple(x - y * s for x, y in zip(B[i, j], B[j, i]))
    return LieSuperalgebra(names, parity, consts)


# ---------------------------------------------------------------------------
# Ideals


@dataclass(frozen=True, eq=False)
class IdealPresentation:
    """A finitely generated ideal of superfunctions on a chart.

    Membership is decided by local reduction: the generators are brought to
    a form ``x_p - h_p`` solved for pivot coordinates and substituted until
    no pivot coordinate is left.
    """

    chart: ChartSignature
    generators: tuple[SuperPolynomial, ...]

    def __post_init__(self):
        object.__setattr__(self, "generators", tuple(self.generators))
        for g in self.generators:
            if g.signature != self.chart:
                raise SignatureError("generator does not live on the ideal's chart")
            if g.parity() is None:
                raise ValueError(f"generator {g} is not parity-homogeneous")

    @cached_property
    def is_unit(self) -> bool:
        return any(g.constant_term() for g in self.generators)

    @cached_property
    def pivots(self) -> tuple[tuple[str, SuperPolynomial], ...]:
        """``(pivot coordinate, h)`` with ``h`` a combination of generators.

        Each ``h`` has linear part equal to its pivot coordinate plus free
        coordinates only.
        """
        if self.is_unit:
            return ()
        sig = self.chart
        out = []
        dropped = []
        for par in (0, 1):
            gens = [g for g in self.generators if g.parity() == par or (not g and par == 0)]
            gens = [g for g in gens if g]
            cols = sig.odd if par else sig.even
            rows = [[_linear_coeff(g, sig, n) for n in cols] for g in gens]
            polys = list(gens)
            # reduced row echelon form, carrying the polynomials along
            piv_cols = []
            r = 0
            for c in range(len(cols)):
                p = next((i for i in range(r, len(rows)) if rows[i][c]), None)
                if p is None:
                    continue
                rows[r], rows[p] = rows[p], rows[r]
                polys[r], polys[p] = polys[p], polys[r]
                inv = rows[r][c].inverse()
                rows[r] = [x * inv for x in rows[r]]
                polys[r] = polys[r] * inv
                for i in range(len(rows)):
                    if i != r and rows[i][c]:
                        f = rows[i][c]
                        rows[i] = [x - f * y for x, y in zip(rows[i], rows[r])]
                        polys[i] = polys[i] - polys[r] * f
                piv_cols.append(c)
                r += 1
            out += [(cols[c], polys[i]) for i, c in enumerate(piv_cols)]
            dropped += polys[r:]
        object.__setattr__(self, "_dropped", tuple(dropped))
        return tuple(out)

    def pivot_names(self) -> tuple[str, ...]:
        return tuple(n for n, _ in self.pivots)

    def free_names(self) -> tuple[tuple[str, ...], tuple[str, ...]]:
        piv = set(self.pivot_names())
        return tuple(n for n in self.chart.even if n not in piv), tuple(n for n in self.chart.odd if n not in piv)

    def check_independent(self, order: int = DEFAULT_ORDER) -> None:
        """Raise unless every generator without own pivot lies in the ideal of the rest."""
        self.pivots
        for g in self._dropped:
            r = self.reduce(g, order)
            if r:
                raise DependentGeneratorsError(f"generators are not independent at the center (leftover {r})")

    def reduce(self, f: SuperPolynomial, order: int = DEFAULT_ORDER) -> SuperPolynomial:
        """Normal form of ``f`` modulo the ideal, as a function of the free coordinates."""
        if f.signature != self.chart:
            if f.signature.same_coordinates(self.chart):
                f = sp_recenter(f, self.chart.center_point())
            else:
                raise SignatureError("function does not live on the ideal's chart")
        if self.is_unit:
            return SuperPolynomial.zero(self.chart)
        work = order + guard(self.chart)
        sig = self.chart
        assign = {n: SuperPolynomial.coordinate(sig, n) for n in sig.names}
        for n, h in self.pivots:
            assign[n] = (assign[n] - h).truncate(work)
        r = f.truncate(work)
        for _ in range(work + sig.n_odd + 3):
            if not any(r.uses(n) for n, _ in self.pivots):
                return r.truncate(order)
            r = sp_substitute(r, assign, work)
        raise RuntimeError("reduction did not terminate")

    def contains(self, f: SuperPolynomial, order: int = DEFAULT_ORDER) -> bool:
        return not self.reduce(f, order)

    def pulled_back(self, phi: Morphism) -> "IdealPresentation":
        """Ideal generated by ``phi*`` of the generators (``phi`` into this chart)."""
        return IdealPresentation(phi.source, tuple(sp_substitute(g, phi.pullback, phi.order) for g in self.generators))

    def __str__(self):
        return "(" + ", ".join(str(g) for g in self.generators) + ")"


def _linear_coeff(g: SuperPolynomial, sig: ChartSignature, name: str) -> Scalar:
    par, idx = sig.locate(name)
    if par:
        return g.coefficient((0,) * len(sig.even), (idx,))
    e = [0] * len(sig.even)
    e[idx] = 1
    return g.coefficient(tuple(e))


def product_ideal(ideal: IdealPresentation, prod: Product, factors: Sequence[int]) -> IdealPresentation:
    """Sum of the pullbacks of ``ideal`` along the projections onto ``factors``."""
    gens = []
    for i in factors:
        gens += [prod.inject(g, i) for g in ideal.generators]
    return IdealPresentation(prod.signature, tuple(gens))


# ---------------------------------------------------------------------------
# Subsupergroups


@dataclass(frozen=True, eq=False)
class Subsupergroup:
    """A subsupergroup cut out by an ideal, with its own chart on the free coordinates."""

    parent: LieSupergroup
    ideal: IdealPresentation
    chart: ChartSignature
    embed: Morphism
    residuals: dict[str, dict[int, SuperPolynomial]]
    order: int

    @property
    def dim(self) -> tuple[int, int]:
        return self.chart.dim

    @property
    def passed(self) -> bool:
        return not any(self.residuals.values())

    @property
    def pivot_names(self) -> tuple[str, ...]:
        return self.ideal.pivot_names()

    def group(self) -> LieSupergroup | None:
        """``H`` as a supergroup in its own chart, when its law is polynomial."""
        if not self.embed.is_exact:
            return None
        prod = Product((self.chart, self.chart), ("1", "2"))
        pg = self.parent.product(2)
        inj = {}
        for i in (0, 1):
            for n in self.parent.chart.names:
                inj[pg.name(i, n)] = prod.inject(self.embed.pullback[n], i)
        pb = {n: sp_substitute(self.parent.mul.pullback[n], inj) for n in self.chart.names}
        return LieSupergroup(f"{self.parent.name}_sub", self.chart, Morphism(prod.signature, self.chart, pb))


def subgroup_chart(ideal: IdealPresentation, order: int = DEFAULT_ORDER) -> tuple[ChartSignature, Morphism]:
    """Chart on the free coordinates of ``ideal`` and the embedding into the ambient chart.

    The embedding solves the generators for the pivot coordinates; it is
    exact when every normalised generator is a shifted pivot coordinate.
    """
    sig = ideal.chart
    if ideal.is_unit:
        raise ValueError("unit ideal cuts out the empty set")
    ideal.check_independent(order)
    fe, fo = ideal.free_names()
    center = [sig.center_point()[n] for n in fe]
    chart = ChartSignature(fe, fo, tuple(center))
    free = set(fe) | set(fo)
    aligned = all(h == SuperPolynomial.shifted(sig, n) for n, h in ideal.pivots)
    if aligned:
        pb = {}
        for n in sig.names:
            if n in free:
                pb[n] = SuperPolynomial.coordinate(chart, n)
            elif sig.parity_of(n):
                pb[n] = SuperPolynomial.zero(chart)
            else:
                pb[n] = SuperPolynomial.constant(chart, sig.center_point()[n])
        return chart, Morphism(chart, sig, pb)
    # pivot = pivot - h_p, iterated on the free coordinates
    work = order + guard(sig)
    assign = {n: SuperPolynomial.coordinate(chart, n) for n in sig.names if n in free}
    for n, _ in ideal.pivots:
        assign[n] = SuperPolynomial.zero(chart) + (0 if sig.parity_of(n) else sig.center_point()[n])
    for _ in range(work + sig.n_odd + 3):
        new = dict(assign)
        for n, h in ideal.pivots:
            x = SuperPolynomial.coordinate(sig, n)
            new[n] = sp_substitute(x - h, assign, work)
        if new == assign:
            return chart, Morphism(chart, sig, assign, work).truncate(order)
        assign = new
    raise RuntimeError("subgroup embedding did not stabilise")


def check_subsupergroup(G: LieSupergroup, ideal: IdealPresentation, order: int = DEFAULT_ORDER) -> Subsupergroup:
    """Verify that ``ideal`` defines a subsupergroup and build its chart.

    Checks that ``nu*`` of each generator lies in the ideal generated by both
    product-factor copies, and ``iota*`` of each generator lies in the ideal.
    """
    if ideal.chart != G.chart:
        if ideal.chart.same_coordinates(G.chart):
            ideal = IdealPresentation(G.chart, tuple(sp_recenter(g, G.identity_point) for g in ideal.generators))
        else:
            raise SignatureError("ideal is not written on the group chart")
    for g in ideal.generators:
        if g.constant_term():
            raise NotInvariantError(f"generator {g} does not vanish at the identity", g)
    chart, embed = subgroup_chart(ideal, order)
    work = order + guard(G.chart)
    p2 = G.product(2)
    J = product_ideal(ideal, p2, (0, 1))
    iota = G.inverse(work)
    res: dict[str, dict[int, SuperPolynomial]] = {"mul": {}, "inverse": {}}
    for k, g in enumerate(ideal.generators):
        r = J.reduce(sp_substitute(g, G.mul.pullback), order)
        if r:
            res["mul"][k] = r
        r = ideal.reduce(sp_substitute(g, iota.pullback, work), order)
        if r:
            res["inverse"][k] = r
    H = Subsupergroup(G, ideal, chart, embed, res, order)
    for kind, found in res.items():
        for k, r in found.items():
            raise NotInvariantError(
                f"{kind}-pullback of generator {ideal.generators[k]} leaves the ideal (remainder {r})",
                ideal.generators[k],
                r,
            )
    if chart.dim != (0, 0):
        prof = rank_profile(embed)
        if not prof.is_immersion:
            raise DependentGeneratorsError("embedding is not an immersion at the identity")
    return H

