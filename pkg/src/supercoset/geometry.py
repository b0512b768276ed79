"""Morphisms of superdomains, their differentials, normal forms and local inverses."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, NamedTuple, Sequence

import numpy as np

from . import linalg
from .superalg import (
    ChartSignature,
    ParityError,
    Product,
    Scalar,
    SignatureError,
    SuperPolynomial,
    Jet,
    sp_derivative,
    sp_recenter,
    sp_substitute,
    sp_value_at,
)

DEFAULT_ORDER = 4


class CenterMismatchError(ValueError):
    """A jet was asked to act away from the point it is expanded at."""


class SingularDifferentialError(ValueError):
    """The differential is not invertible (resp. not surjective) where required."""


class PrecisionError(ValueError):
    """A jet is not known to the order a comparison needs."""


class ReducedSolveError(ValueError):
    """No exact reduced point could be found."""


def guard(*signatures: ChartSignature) -> int:
    """Extra jet order lost when jets are composed with maps carrying nilpotent shifts.

    A monomial of even degree ``D+1`` can drop to degree ``D+1-k`` after
    substitution only through ``k`` nilpotent factors, each using two odd
    generators of the final chart.
    """
    return max((s.n_odd for s in signatures), default=0) // 2


@dataclass(frozen=True, eq=False)
class Morphism:
    """Pullback description of a map ``source -> target`` between charts.

    ``pullback[y]`` is the superfunction on ``source`` that the target
    coordinate ``y`` pulls back to.  ``order`` is None for exact polynomial
    maps and the jet order otherwise.
    """

    source: ChartSignature
    target: ChartSignature
    pullback: Mapping[str, SuperPolynomial]
    order: int | None = None
    reduced_image: dict = field(init=False, repr=False)

    def __post_init__(self):
        pb = dict(self.pullback)
        missing = [n for n in self.target.names if n not in pb]
        extra = [n for n in pb if n not in self.target.names]
        if missing or extra:
            raise SignatureError(f"pullback must cover exactly the target coordinates (missing {missing}, extra {extra})")
        out = {}
        for n in self.target.names:
            f = pb[n]
            if f.signature != self.source:
                raise SignatureError(f"pullback of {n} is not a function on the source chart")
            par = self.target.parity_of(n)
            if not f.has_parity(par):
                raise ParityError(f"pullback of {'odd' if par else 'even'} coordinate {n} has wrong parity: {f}")
            out[n] = f.truncate(self.order)
        object.__setattr__(self, "pullback", out)
        object.__setattr__(self, "reduced_image", {n: out[n].constant_term() for n in self.target.even})

    @property
    def is_exact(self) -> bool:
        return self.order is None

    def jet(self, name: str, order: int | None = None) -> Jet:
        o = order if order is not None else self.order
        if o is None:
            raise ValueError("exact morphism: give an order")
        return Jet(self.pullback[name], o)

    def truncate(self, order: int | None) -> "Morphism":
        if order is None:
            return self
        if self.order is not None and self.order < order:
            raise PrecisionError(f"jet of order {self.order} cannot be read at order {order}")
        return Morphism(self.source, self.target, self.pullback, order)

    def recentered(self, point: Mapping[str, object]) -> "Morphism":
        """Same map expanded at another source point (exact morphisms only)."""
        new = self.source.with_center(self.source.point(point))
        if new == self.source:
            return self
        if not self.is_exact:
            raise CenterMismatchError(f"jet at {self.source.center_point()} cannot be re-expanded at {dict(point)}")
        return Morphism(new, self.target, {n: sp_recenter(f, new.center_point()) for n, f in self.pullback.items()})

    def with_target_center(self, center: Mapping[str, object] | None = None) -> "Morphism":
        """Relabel the target chart center (default: the reduced image)."""
        c = self.reduced_image if center is None else center
        return Morphism(self.source, self.target.with_center(c), self.pullback, self.order)

    def with_target(self, target: ChartSignature) -> "Morphism":
        if not target.same_coordinates(self.target):
            raise SignatureError("retargeting must keep coordinate names")
        return Morphism(self.source, target, self.pullback, self.order)

    def nilpotent_shift(self) -> bool:
        return any(self.pullback[n].has_nilpotent_shift() for n in self.target.even)

    def __eq__(self, other):
        if not isinstance(other, Morphism):
            return NotImplemented
        return (
            self.source == other.source
            and self.target.same_coordinates(other.target)
            and self.order == other.order
            and all(self.pullback[n] == other.pullback[n] for n in self.target.names)
        )

    __hash__ = None

    def __str__(self):
        body = "; ".join(f"{n} <- {self.pullback[n]}" for n in self.target.names)
        tail = "" if self.order is None else f"  [order {self.order}]"
        return f"{self.source} -> {self.target}: {body}{tail}"


@dataclass(frozen=True)
class TangentMap:
    """Differential at a reduced point: the even and odd diagonal blocks."""

    even: tuple[tuple[Scalar, ...], ...]
    odd: tuple[tuple[Scalar, ...], ...]
    shape: tuple[tuple[int, int], tuple[int, int]] = field(default=((0, 0), (0, 0)))

    def __post_init__(self):
        object.__setattr__(self, "even", tuple(tuple(r) for r in self.even))
        object.__setattr__(self, "odd", tuple(tuple(r) for r in self.odd))

    def then(self, after: "TangentMap") -> "TangentMap":
        """Differential of the composite: apply ``self`` first, then ``after``."""
        return TangentMap(
            linalg.matmul(after.even, self.even) if after.even else (),
            linalg.matmul(after.odd, self.odd) if after.odd else (),
            (
                (after.shape[0][0], self.shape[0][1]),
                (after.shape[1][0], self.shape[1][1]),
            ),
        )

    def is_invertible(self) -> bool:
        return (
            self.shape[0][0] == self.shape[0][1]
            and self.shape[1][0] == self.shape[1][1]
            and linalg.rank(self.even) == self.shape[0][0]
            and linalg.rank(self.odd) == self.shape[1][0]
        )


class RankProfile(NamedTuple):
    even_rank: int
    odd_rank: int
    is_submersion: bool
    is_immersion: bool


# ---------------------------------------------------------------------------
# Standard morphisms


def identity(sig: ChartSignature) -> Morphism:
    return Morphism(sig, sig, {n: SuperPolynomial.coordinate(sig, n) for n in sig.names})


def constant(source: ChartSignature, target: ChartSignature, point: Mapping[str, object]) -> Morphism:
    """The map collapsing ``source`` onto a reduced point of ``target``."""
    pt = target.point(point)
    pb = {n: SuperPolynomial.constant(source, pt[n]) for n in target.even}
    pb.update({n: SuperPolynomial.zero(source) for n in target.odd})
    return Morphism(source, target, pb)


def projection(prod: Product, i: int) -> Morphism:
    sig = prod.signature
    factor = prod.factors[i]
    return Morphism(sig, factor, {n: SuperPolynomial.coordinate(sig, prod.name(i, n)) for n in factor.names})


def pair(maps: Sequence[Morphism], prod: Product) -> Morphism:
    """``(phi_1, ..., phi_k)``: common source into a product of their targets."""
    source = maps[0].source
    pb = {}
    center = []
    for i, phi in enumerate(maps):
        if phi.source != source:
            raise SignatureError("paired maps must share their source chart")
        if not phi.target.same_coordinates(prod.factors[i]):
            raise SignatureError("paired map does not land in its product factor")
        for n in phi.target.names:
            pb[prod.name(i, n)] = phi.pullback[n]
        center += [phi.reduced_image[n] for n in phi.target.even]
    return Morphism(source, prod.signature.with_center(center), pb, _min_order([m.order for m in maps]))


def product_map(maps: Sequence[Morphism], source: Product, target: Product) -> Morphism:
    """``phi_1 x ... x phi_k`` between products, factor by factor.

    The source product is re-centered at the maps' own source centers.
    """
    if len(maps) != len(source.factors) or len(maps) != len(target.factors):
        raise SignatureError("one map per factor")
    for i, phi in enumerate(maps):
        if not phi.source.same_coordinates(source.factors[i]) or not phi.target.same_coordinates(target.factors[i]):
            raise SignatureError(f"factor {i} does not match")
    src = Product(tuple(m.source for m in maps), source.suffixes)
    pb = {}
    center = []
    for i, phi in enumerate(maps):
        for n in phi.target.names:
            pb[target.name(i, n)] = src.inject(phi.pullback[n], i)
        center += [phi.reduced_image[n] for n in phi.target.even]
    return Morphism(src.signature, target.signature.with_center(center), pb, _min_order([m.order for m in maps]))


def _min_order(orders):
    vals = [o for o in orders if o is not None]
    return min(vals) if vals else None


# ---------------------------------------------------------------------------
# Composition


def compose(phi: Morphism, psi: Morphism) -> Morphism:
    """The composite ``psi o phi`` (``phi`` acts first).

    Its pullbacks are those of ``psi`` with the coordinates of ``psi``'s source
    replaced by the pullbacks of ``phi``.
    """
    if not phi.target.same_coordinates(psi.source):
        raise SignatureError(f"cannot compose: {phi.target} is not {psi.source}")
    img = phi.reduced_image
    if psi.source.center_point() != img:
        if psi.is_exact:
            psi = psi.recentered(img)
        else:
            raise CenterMismatchError(
                f"jet expanded at {psi.source.center_point()} but the first map lands at {img}"
            )
    order = _min_order([phi.order, psi.order])
    pb = {n: sp_substitute(psi.pullback[n], phi.pullback, order, target=phi.source) for n in psi.target.names}
    return Morphism(phi.source, psi.target, pb, order)


def morphism_residual(phi: Morphism, psi: Morphism, order: int | None = None) -> dict[str, SuperPolynomial]:
    """Nonzero coordinatewise differences ``phi* - psi*`` truncated at ``order``."""
    if not phi.target.same_coordinates(psi.target) or not phi.source.same_coordinates(psi.source):
        raise SignatureError("residual needs morphisms between the same charts")
    if phi.source != psi.source:
        if psi.is_exact:
            psi = psi.recentered(phi.source.center_point())
        elif phi.is_exact:
            phi = phi.recentered(psi.source.center_point())
        else:
            raise CenterMismatchError("jets expanded at different points")
    for m in (phi, psi):
        if order is not None and m.order is not None and m.order < order:
            raise PrecisionError(f"jet of order {m.order} compared at order {order}")
    if order is None:
        order = _min_order([phi.order, psi.order])
    out = {}
    for n in phi.target.names:
        d = (phi.pullback[n] - psi.pullback[n]).truncate(order)
        if d:
            out[n] = d
    return out


# ---------------------------------------------------------------------------
# Differentials


def differential_at(phi: Morphism, point: Mapping[str, object] | None = None) -> TangentMap:
    """Even and odd blocks of the differential at a reduced source point."""
    if point is not None:
        phi = phi.recentered(point)
    src, tgt = phi.source, phi.target
    ne, no = src.dim
    even = []
    for y in tgt.even:
        f = phi.pullback[y]
        even.append([f.coefficient(_unit(ne, j)) for j in range(ne)])
    odd = []
    for eta in tgt.odd:
        f = phi.pullback[eta]
        odd.append([f.coefficient((0,) * ne, (b,)) for b in range(no)])
    return TangentMap(even, odd, ((len(tgt.even), ne), (len(tgt.odd), no)))


def _unit(n, j):
    e = [0] * n
    e[j] = 1
    return tuple(e)


def rank_profile(phi: Morphism, point: Mapping[str, object] | None = None) -> RankProfile:
    d = differential_at(phi, point)
    (k, n), (l, m) = d.shape
    re = linalg.rank(d.even) if k and n else 0
    ro = linalg.rank(d.odd) if l and m else 0
    return RankProfile(re, ro, re == k and ro == l, re == n and ro == m)


# ---------------------------------------------------------------------------
# Local inverse


def invert_local(phi: Morphism, point: Mapping[str, object] | None = None, order: int = DEFAULT_ORDER) -> Morphism:
    """Jets of the local inverse of ``phi`` around ``point`` (default: the source center).

    Solves ``phi(x) = y`` degree by degree: with ``phi = c + L(x-p) + N(x-p)``
    the inverse is the fixed point of ``x = p + L^-1 (y - c - N(x-p))``.
    """
    if point is not None:
        phi = phi.recentered(point)
    src, tgt = phi.source, phi.target
    if src.dim != tgt.dim:
        raise SignatureError(f"dimension mismatch {src.dim} vs {tgt.dim}")
    if phi.order is not None:
        order = min(order, phi.order)
    d = differential_at(phi)
    try:
        le = linalg.inverse(d.even) if d.even else []
        lo = linalg.inverse(d.odd) if d.odd else []
    except ZeroDivisionError:
        raise SingularDifferentialError("differential is not an isomorphism at the expansion point") from None

    tc = tgt.with_center(phi.reduced_image)
    w_even = [SuperPolynomial.shifted(tc, y) for y in tgt.even]
    w_odd = [SuperPolynomial.coordinate(tc, eta) for eta in tgt.odd]
    x_even = [SuperPolynomial.shifted(src, x) for x in src.even]
    x_odd = [SuperPolynomial.coordinate(src, xi) for xi in src.odd]

    n_even = []
    for i, y in enumerate(tgt.even):
        lin = sum((d.even[i][j] * x_even[j] for j in range(len(x_even))), SuperPolynomial.zero(src))
        n_even.append(phi.pullback[y] - phi.reduced_image[y] - lin)
    n_odd = []
    for a, eta in enumerate(tgt.odd):
        lin = sum((d.odd[a][b] * x_odd[b] for b in range(len(x_odd))), SuperPolynomial.zero(src))
        n_odd.append(phi.pullback[eta] - lin)

    zero = SuperPolynomial.zero(tc)
    rhs_even = list(w_even)
    rhs_odd = list(w_odd)
    guess: dict[str, SuperPolynomial] | None = None
    for _ in range(order + tgt.n_odd + 3):
        new = {}
        for j, x in enumerate(src.even):
            acc = zero
            for i in range(len(rhs_even)):
                if le[j][i]:
                    acc = acc + rhs_even[i] * le[j][i]
            new[x] = (acc + src.center[j]).truncate(order)
        for b, xi in enumerate(src.odd):
            acc = zero
            for a in range(len(rhs_odd)):
                if lo[b][a]:
                    acc = acc + rhs_odd[a] * lo[b][a]
            new[xi] = acc.truncate(order)
        if new == guess:
            return Morphism(tc, src, new, order)
        guess = new
        rhs_even = [w - sp_substitute(nf, guess, order) for w, nf in zip(w_even, n_even)]
        rhs_odd = [w - sp_substitute(nf, guess, order) for w, nf in zip(w_odd, n_odd)]
    raise RuntimeError("local inverse iteration did not stabilise")


# ---------------------------------------------------------------------------
# Normal forms


@dataclass(frozen=True, eq=False)
class AdaptedChart:
    """Coordinates in which a submersion becomes a coordinate projection.

    ``new_coordinates`` maps the source chart onto the adapted chart (its
    pullbacks are the new coordinate functions); ``to_source`` is its local
    inverse.  Pivot columns are listed in target-row order.
    """

    new_coordinates: Morphism
    to_source: Morphism
    pivot_even: tuple[int, ...]
    pivot_odd: tuple[int, ...]
    normal_form: Morphism

    @property
    def chart(self) -> ChartSignature:
        return self.new_coordinates.target

    def residual_even(self) -> tuple[int, ...]:
        n = self.new_coordinates.source.dim[0]
        return tuple(j for j in range(n) if j not in self.pivot_even)

    def residual_odd(self) -> tuple[int, ...]:
        m = self.new_coordinates.source.dim[1]
        return tuple(j for j in range(m) if j not in self.pivot_odd)


def adapted_coordinates(
    phi: Morphism, point: Mapping[str, object] | None = None, order: int = DEFAULT_ORDER, prime: str = "'"
) -> AdaptedChart:
    """Change coordinates on the source so that ``phi`` reads ``y_i = x_i``, ``eta_j = xi_j``."""
    if point is not None:
        phi = phi.recentered(point)
    prof = rank_profile(phi)
    if not prof.is_submersion:
        raise SingularDifferentialError(f"not a submersion at the expansion point (ranks {prof[:2]})")
    d = differential_at(phi)
    src, tgt = phi.source, phi.target
    pe = tuple(linalg.row_pivots(d.even, src.dim[0])) if d.even else ()
    po = tuple(linalg.row_pivots(d.odd, src.dim[1])) if d.odd else ()
    rest_e = [j for j in range(src.dim[0]) if j not in pe]
    rest_o = [j for j in range(src.dim[1]) if j not in po]

    even_names = [src.even[j] + prime for j in pe] + [src.even[j] + prime for j in rest_e]
    odd_names = [src.odd[j] + prime for j in po] + [src.odd[j] + prime for j in rest_o]
    even_funcs = [phi.pullback[y] for y in tgt.even] + [SuperPolynomial.coordinate(src, src.even[j]) for j in rest_e]
    odd_funcs = [phi.pullback[eta] for eta in tgt.odd] + [SuperPolynomial.coordinate(src, src.odd[j]) for j in rest_o]
    center = [f.constant_term() for f in even_funcs]
    new_chart = ChartSignature(tuple(even_names), tuple(odd_names), tuple(center))
    change = Morphism(src, new_chart, dict(zip(even_names, even_funcs)) | dict(zip(odd_names, odd_funcs)), phi.order)
    back = invert_local(change, order=order if phi.order is None else min(order, phi.order))
    normal = compose(back, phi)
    return AdaptedChart(change, back, pe, po, normal)


# ---------------------------------------------------------------------------
# Reduced points


def _eval_complex(f: SuperPolynomial, pt: Sequence[complex]) -> complex:
    total = 0j
    sig = f.signature
    shifts = [x - complex(c) for x, c in zip(pt, sig.center)]
    for exps, odd, c in f.terms():
        if odd:
            continue
        v = complex(c)
        for s, e in zip(shifts, exps):
            if e:
                v *= s**e
        total += v
    return total


def _rationalize(z: complex, bound: int) -> Scalar:
    re = Fraction(z.real).limit_denominator(bound)
    im = Fraction(z.imag).limit_denominator(bound)
    return Scalar(re, im)


def solve_reduced(
    phi: Morphism,
    target: Mapping[str, object],
    guess: Mapping[str, object] | None = None,
    denominator_bound: int = 10**6,
) -> dict[str, Scalar]:
    """Exact reduced source point mapped by ``phi`` onto ``target``.

    Newton iteration in floating point locates the point, which is then
    rounded to small-denominator Gaussian rationals and verified exactly.
    """
    if not phi.is_exact:
        raise ReducedSolveError("reduced solves need an exact morphism")
    src, tgt = phi.source, phi.target
    tpt = tgt.point(target)
    if src.dim[0] != tgt.dim[0]:
        raise ReducedSolveError("reduced solve needs equal even dimensions")
    funcs = [phi.pullback[y].numeric_part() for y in tgt.even]
    jac = [[sp_derivative(f, x) for x in src.even] for f in funcs]
    want = np.array([complex(tpt[y]) for y in tgt.even])
    start = src.point(guess) if guess else src.center_point()
    x = np.array([complex(start[n]) for n in src.even])
    for _ in range(200):
        fx = np.array([_eval_complex(f, x) for f in funcs]) - want
        if np.max(np.abs(fx), initial=0.0) < 1e-14:
            break
        j = np.array([[_eval_complex(g, x) for g in row] for row in jac])
        try:
            x = x - np.linalg.solve(j, fx)
        except np.linalg.LinAlgError:
            raise ReducedSolveError("singular reduced Jacobian during the solve") from None
    sol = {n: _rationalize(complex(v), denominator_bound) for n, v in zip(src.even, x)}
    for y, f in zip(tgt.even, funcs):
        if sp_value_at(f, sol) != tpt[y]:
            raise ReducedSolveError(f"no exact reduced solution found near {dict((k, complex(v)) for k, v in sol.items())}")
    return sol


def solve_implicit(F: Morphism, prod: Product, unknown: int, order: int = DEFAULT_ORDER) -> Morphism:
    """Jets of ``x(p)`` with ``F(x(p), p) = F(x0, p0)`` on a two-factor product.

    ``unknown`` names the factor holding ``x``; the result maps the other
    factor (at its center) into the unknown factor.  The differential of
    ``F`` along the unknown factor must be invertible.
    """
    if len(prod.factors) != 2:
        raise SignatureError("implicit solves need a two-factor product")
    if F.source != prod.signature:
        F = F.recentered(prod.signature.center_point())
    param = 1 - unknown
    X, P = prod.factors[unknown], prod.factors[param]
    if X.dim != F.target.dim:
        raise SignatureError("unknown factor and target must have equal dimensions")
    if F.order is not None:
        order = min(order, F.order)
    d = differential_at(F)
    sig = prod.signature
    xe = [sig.locate(prod.name(unknown, n))[1] for n in X.even]
    xo = [sig.locate(prod.name(unknown, n))[1] for n in X.odd]
    try:
        le = linalg.inverse([[row[j] for j in xe] for row in d.even]) if X.even else []
        lo = linalg.inverse([[row[j] for j in xo] for row in d.odd]) if X.odd else []
    except ZeroDivisionError:
        raise SingularDifferentialError("differential along the unknown factor is singular") from None
    tgt = F.target
    n_even = []
    for i, y in enumerate(tgt.even):
        lin = SuperPolynomial.zero(sig)
        for jj, j in enumerate(xe):
            if d.even[i][j]:
                lin = lin + SuperPolynomial.shifted(sig, sig.even[j]) * d.even[i][j]
        n_even.append(F.pullback[y] - F.reduced_image[y] - lin)
    n_odd = []
    for a, eta in enumerate(tgt.odd):
        lin = SuperPolynomial.zero(sig)
        for j in xo:
            if d.odd[a][j]:
                lin = lin + SuperPolynomial.coordinate(sig, sig.odd[j]) * d.odd[a][j]
        n_odd.append(F.pullback[eta] - lin)
    assign = {prod.name(param, n): SuperPolynomial.coordinate(P, n) for n in P.names}
    zero = SuperPolynomial.zero(P)
    guess = {n: SuperPolynomial.coordinate(P, n) * 0 + c for n, c in zip(X.even, X.center)}
    guess |= {n: zero for n in X.odd}
    for _ in range(order + P.n_odd + X.n_odd + 3):
        assign |= {prod.name(unknown, n): guess[n] for n in X.names}
        ne = [sp_substitute(f, assign, order) for f in n_even]
        no = [sp_substitute(f, assign, order) for f in n_odd]
        new = {}
        for j, n in enumerate(X.even):
            acc = zero
            for i in range(len(ne)):
                if le[j][i]:
                    acc = acc - ne[i] * le[j][i]
            new[n] = (acc + X.center[j]).truncate(order)
        for b, n in enumerate(X.odd):
            acc = zero
            for a in range(len(no)):
                if lo[b][a]:
                    acc = acc - no[a] * lo[b][a]
            new[n] = acc.truncate(order)
        if new == guess:
            return Morphism(P, X, new, order)
        guess = new
    raise RuntimeError("implicit solve did not stabilise")
