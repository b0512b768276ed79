"""Exact arithmetic of superfunctions on a chart.

A superfunction is stored as a finite sum of terms ``c * u^e * xi_A`` where
``u_i = x_i - center_i`` are the even coordinates shifted to the chart center,
``xi_A`` is an ordered product of odd coordinates and ``c`` is a Gaussian
rational.  Internally a term is keyed by a single integer: the odd subset is a
bitmask in the low 16 bits and each even exponent occupies one byte above it,
so multiplying two monomials with disjoint odd subsets is integer addition.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Iterator, Mapping, Sequence

from gmpy2 import mpq

__all__ = [
    "Scalar",
    "ChartSignature",
    "SuperPolynomial",
    "Jet",
    "Product",
    "SignatureError",
    "ParityError",
    "sp_mul",
    "sp_value_at",
    "sp_substitute",
    "sp_recenter",
    "sp_rename",
    "sp_derivative",
    "jet_truncate",
]

MAX_ODD = 16
_ODD_BITS = 16
_ODD_MASK = (1 << _ODD_BITS) - 1
_EXP_BITS = 8
_EXP_LIMIT = (1 << _EXP_BITS) - 1


class SignatureError(ValueError):
    """Operands live on different charts, or a coordinate is unknown."""


class ParityError(ValueError):
    """A value of the wrong parity was supplied for a coordinate."""


# ---------------------------------------------------------------------------
# Scalars


def _q(x) -> mpq:
    if isinstance(x, str):
        x = x.strip()
        return mpq(Fraction(x))
    return mpq(x)


class Scalar:
    """Gaussian rational ``re + im*i`` with exact rational parts."""

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        if isinstance(re, Scalar):
            re, im = re.re, re.im + _q(im)
        elif isinstance(re, complex):
            re, im = Fraction(re.real), Fraction(re.imag) + Fraction(im)
        self.re = _q(re)
        self.im = _q(im)

    @staticmethod
    def _make(re: mpq, im: mpq) -> "Scalar":
        s = object.__new__(Scalar)
        s.re = re
        s.im = im
        return s

    @classmethod
    def of(cls, x) -> "Scalar":
        if isinstance(x, Scalar):
            return x
        if isinstance(x, str):
            return cls.parse(x)
        return cls(x)

    @classmethod
    def parse(cls, text: str) -> "Scalar":
        """Parse ``"3/2"``, ``"-1"``, ``"2i"``, ``"1+2i"`` or ``"1/2-3/4i"``."""
        t = text.replace(" ", "")
        if not t.endswith("i"):
            return cls(t)
        body = t[:-1]
        # split at the last sign that is not the leading one
        cut = max(body.rfind("+"), body.rfind("-"))
        if cut <= 0:
            im = body if body not in ("", "+", "-") else body + "1"
            return cls(0, im)
        re, im = body[:cut], body[cut:]
        if im in ("+", "-"):
            im += "1"
        return cls(re, im)

    def is_zero(self) -> bool:
        return not self.re and not self.im

    def is_real(self) -> bool:
        return not self.im

    def __bool__(self) -> bool:
        return bool(self.re) or bool(self.im)

    def __add__(self, other):
        if not isinstance(other, Scalar):
            other = _coerce(other)
            if other is NotImplemented:
                return other
        return Scalar._make(self.re + other.re, self.im + other.im)

    __radd__ = __add__

    def __sub__(self, other):
        if not isinstance(other, Scalar):
            other = _coerce(other)
            if other is NotImplemented:
                return other
        return Scalar._make(self.re - other.re, self.im - other.im)

    def __rsub__(self, other):
        other = _coerce(other)
        return other if other is NotImplemented else other - self

    def __neg__(self):
        return Scalar._make(-self.re, -self.im)

    def __mul__(self, other):
        if not isinstance(other, Scalar):
            other = _coerce(other)
            if other is NotImplemented:
                return other
        if not self.im and not other.im:
            return Scalar._make(self.re * other.re, self.im)
        return Scalar._make(
            self.re * other.re - self.im * other.im,
            self.re * other.im + self.im * other.re,
        )

    __rmul__ = __mul__

    def inverse(self) -> "Scalar":
        if not self:
            raise ZeroDivisionError("inverse of zero scalar")
        if not self.im:
            return Scalar._make(1 / self.re, self.im)
        n = self.re * self.re + self.im * self.im
        return Scalar._make(self.re / n, -self.im / n)

    def __truediv__(self, other):
        return self * Scalar.of(other).inverse()

    def __rtruediv__(self, other):
        return Scalar.of(other) * self.inverse()

    def __pow__(self, k: int):
        out = Scalar._make(mpq(1), mpq(0))
        base = self if k >= 0 else self.inverse()
        for _ in range(abs(k)):
            out = out * base
        return out

    def __eq__(self, other):
        if not isinstance(other, Scalar):
            try:
                other = Scalar.of(other)
            except (TypeError, ValueError):
                return NotImplemented
        return self.re == other.re and self.im == other.im

    def __hash__(self):
        return hash((self.re, self.im))

    def __complex__(self):
        return complex(float(self.re), float(self.im))

    def fraction_pair(self) -> tuple[Fraction, Fraction]:
        return Fraction(int(self.re.numerator), int(self.re.denominator)), Fraction(
            int(self.im.numerator), int(self.im.denominator)
        )

    def __str__(self):
        def fmt(q):
            return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"

        if not self.im:
            return fmt(self.re)
        im = "" if self.im == 1 else "-" if self.im == -1 else fmt(self.im)
        if not self.re:
            return f"{im}i"
        sign = "" if self.im < 0 else "+"
        return f"{fmt(self.re)}{sign}{im}i"

    def __repr__(self):
        return f"Scalar({self})"


def _coerce(x):
    try:
        return Scalar.of(x)
    except (TypeError, ValueError):
        return NotImplemented


ZERO = Scalar(0)
ONE = Scalar(1)


# ---------------------------------------------------------------------------
# Key packing


def _pack(exps: Sequence[int], mask: int) -> int:
    key = mask
    shift = _ODD_BITS
    for e in exps:
        if e < 0 or e > _EXP_LIMIT:
            raise OverflowError(f"even exponent {e} outside 0..{_EXP_LIMIT}")
        key |= e << shift
        shift += _EXP_BITS
    return key


def _unpack_exps(key: int, n: int) -> tuple[int, ...]:
    key >>= _ODD_BITS
    out = []
    for _ in range(n):
        out.append(key & _EXP_LIMIT)
        key >>= _EXP_BITS
    return tuple(out)


_DEG_CACHE: dict[int, int] = {}


def _degree(key: int) -> int:
    e = key >> _ODD_BITS
    d = _DEG_CACHE.get(e)
    if d is None:
        d = 0
        k = e
        while k:
            d += k & _EXP_LIMIT
            k >>= _EXP_BITS
        _DEG_CACHE[e] = d
    return d


@lru_cache(maxsize=None)
def _sign(ma: int, mb: int) -> int:
    """Sign of reordering ``xi_A * xi_B`` (disjoint masks) into ascending order."""
    swaps = 0
    b = mb
    while b:
        low = b & -b
        swaps += bin(ma & ~((low << 1) - 1)).count("1")
        b ^= low
    return -1 if swaps & 1 else 1


def _bits(mask: int) -> list[int]:
    out = []
    i = 0
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return out


def _mask_of(indices: Iterable[int]) -> tuple[int, int]:
    """Mask and sign of the product of odd generators in the given order."""
    mask = 0
    sign = 1
    for i in indices:
        bit = 1 << i
        if mask & bit:
            return 0, 0
        sign *= _sign(mask, bit)
        mask |= bit
    return mask, sign


# ---------------------------------------------------------------------------
# Charts


@dataclass(frozen=True)
class ChartSignature:
    """Ordered even and odd coordinate names plus the center of the even ones."""

    even: tuple[str, ...]
    odd: tuple[str, ...] = ()
    center: tuple[Scalar, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "even", tuple(self.even))
        object.__setattr__(self, "odd", tuple(self.odd))
        names = self.even + self.odd
        if len(set(names)) != len(names):
            raise SignatureError(f"duplicate coordinate names in {names}")
        if len(self.odd) > MAX_ODD:
            raise SignatureError(f"at most {MAX_ODD} odd coordinates supported")
        center = self.center
        if center is None:
            center = (ZERO,) * len(self.even)
        center = tuple(Scalar.of(c) for c in center)
        if len(center) != len(self.even):
            raise SignatureError("center must assign every even coordinate")
        object.__setattr__(self, "center", center)
        object.__setattr__(
            self, "_index", {n: (0, i) for i, n in enumerate(self.even)} | {n: (1, j) for j, n in enumerate(self.odd)}
        )

    @property
    def dim(self) -> tuple[int, int]:
        return len(self.even), len(self.odd)

    @property
    def names(self) -> tuple[str, ...]:
        return self.even + self.odd

    @property
    def n_odd(self) -> int:
        return len(self.odd)

    def locate(self, name: str) -> tuple[int, int]:
        """``(parity, index)`` of a coordinate."""
        try:
            return self._index[name]
        except KeyError:
            raise SignatureError(f"unknown coordinate {name!r}") from None

    def parity_of(self, name: str) -> int:
        return self.locate(name)[0]

    def center_point(self) -> dict[str, Scalar]:
        return dict(zip(self.even, self.center))

    def point(self, values: Mapping[str, object] | None = None) -> dict[str, Scalar]:
        """Complete a partial even assignment with center values."""
        values = dict(values or {})
        out = {}
        for n, c in zip(self.even, self.center):
            out[n] = Scalar.of(values.pop(n)) if n in values else c
        for n in list(values):
            if n in self.odd:
                if Scalar.of(values.pop(n)):
                    raise ValueError(f"reduced point cannot give odd coordinate {n} a nonzero value")
        if values:
            raise SignatureError(f"unknown coordinates {sorted(values)}")
        return out

    def with_center(self, center: Mapping[str, object] | Sequence[object]) -> "ChartSignature":
        if isinstance(center, Mapping):
            center = [self.point(center)[n] for n in self.even]
        return ChartSignature(self.even, self.odd, tuple(center))

    def same_coordinates(self, other: "ChartSignature") -> bool:
        return self.even == other.even and self.odd == other.odd

    def renamed(self, fn) -> "ChartSignature":
        return ChartSignature(tuple(fn(n) for n in self.even), tuple(fn(n) for n in self.odd), self.center)

    def __str__(self):
        return f"({', '.join(self.even)} | {', '.join(self.odd)})"


@dataclass(frozen=True)
class Product:
    """Cartesian product of charts with per-factor name suffixes."""

    factors: tuple[ChartSignature, ...]
    suffixes: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "factors", tuple(self.factors))
        object.__setattr__(self, "suffixes", tuple(self.suffixes))
        if len(self.factors) != len(self.suffixes):
            raise SignatureError("one suffix per factor")
        even, odd, center = [], [], []
        for sig, sfx in zip(self.factors, self.suffixes):
            even += [n + sfx for n in sig.even]
            odd += [n + sfx for n in sig.odd]
            center += list(sig.center)
        object.__setattr__(self, "signature", ChartSignature(tuple(even), tuple(odd), tuple(center)))

    def name(self, i: int, coord: str) -> str:
        self.factors[i].locate(coord)
        return coord + self.suffixes[i]

    def names(self, i: int) -> dict[str, str]:
        return {n: n + self.suffixes[i] for n in self.factors[i].names}

    def inject(self, f: "SuperPolynomial", i: int) -> "SuperPolynomial":
        """View a function on factor ``i`` as a function on the product."""
        if not f.signature.same_coordinates(self.factors[i]):
            raise SignatureError("function does not live on this factor")
        if f.signature.center != self.factors[i].center:
            f = sp_recenter(f, self.factors[i].center_point())
        return sp_rename(f, self.signature, self.names(i))

    def coordinate(self, i: int, coord: str) -> "SuperPolynomial":
        return SuperPolynomial.coordinate(self.signature, self.name(i, coord))

    def with_centers(self, *centers: Mapping[str, object] | None) -> "Product":
        sigs = [s if c is None else s.with_center(c) for s, c in zip(self.factors, centers)]
        return Product(tuple(sigs), self.suffixes)


# ---------------------------------------------------------------------------
# Superpolynomials


class SuperPolynomial:
    """Exact Grassmann-valued polynomial on a chart, in canonical form."""

    __slots__ = ("signature", "_terms")

    def __init__(self, signature: ChartSignature, terms: Mapping[int, Scalar] | None = None):
        self.signature = signature
        self._terms = {k: v for k, v in (terms or {}).items() if v}

    # construction -----------------------------------------------------
    @classmethod
    def _raw(cls, signature, terms):
        p = object.__new__(cls)
        p.signature = signature
        p._terms = terms
        return p

    @classmethod
    def zero(cls, signature: ChartSignature) -> "SuperPolynomial":
        return cls._raw(signature, {})

    @classmethod
    def constant(cls, signature: ChartSignature, c) -> "SuperPolynomial":
        c = Scalar.of(c)
        return cls._raw(signature, {0: c} if c else {})

    @classmethod
    def coordinate(cls, signature: ChartSignature, name: str) -> "SuperPolynomial":
        """The coordinate function itself (for even ones: center + shifted variable)."""
        par, i = signature.locate(name)
        if par:
            return cls._raw(signature, {1 << i: ONE})
        terms = {1 << (_ODD_BITS + _EXP_BITS * i): ONE}
        if signature.center[i]:
            terms[0] = signature.center[i]
        return cls._raw(signature, terms)

    @classmethod
    def shifted(cls, signature: ChartSignature, name: str) -> "SuperPolynomial":
        """Coordinate minus its center value (the local variable)."""
        par, i = signature.locate(name)
        key = 1 << i if par else 1 << (_ODD_BITS + _EXP_BITS * i)
        return cls._raw(signature, {key: ONE})

    @classmethod
    def from_terms(cls, signature: ChartSignature, terms: Iterable[tuple[Sequence[int], Sequence[int], object]]):
        """Build from ``(even exponents, odd indices in product order, coefficient)``.

        Odd indices may be in any order; the sign of sorting them is applied.
        """
        out: dict[int, Scalar] = {}
        n = len(signature.even)
        for exps, odd, c in terms:
            exps = tuple(exps)
            if len(exps) != n:
                raise SignatureError(f"expected {n} even exponents, got {len(exps)}")
            mask, sign = _mask_of(odd)
            if not sign:
                continue
            c = Scalar.of(c)
            if sign < 0:
                c = -c
            k = _pack(exps, mask)
            out[k] = out.get(k, ZERO) + c
        return cls(signature, out)

    # inspection -------------------------------------------------------
    def terms(self) -> Iterator[tuple[tuple[int, ...], tuple[int, ...], Scalar]]:
        """Canonical terms in graded-lex order: even exponents, odd indices, coefficient."""
        n = len(self.signature.even)
        for k in sorted(self._terms, key=self._order_key):
            yield _unpack_exps(k, n), tuple(_bits(k & _ODD_MASK)), self._terms[k]

    def _order_key(self, k: int):
        exps = _unpack_exps(k, len(self.signature.even))
        m = k & _ODD_MASK
        return (_degree(k), tuple(-e for e in exps), bin(m).count("1"), _bits(m))

    def coefficient(self, exps: Sequence[int], odd: Sequence[int] = ()) -> Scalar:
        mask, sign = _mask_of(odd)
        if not sign:
            return ZERO
        c = self._terms.get(_pack(exps, mask), ZERO)
        return -c if sign < 0 else c

    def __len__(self):
        return len(self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    def __bool__(self):
        return bool(self._terms)

    def constant_term(self) -> Scalar:
        return self._terms.get(0, ZERO)

    def parity(self) -> int | None:
        """0 or 1 for homogeneous values (zero counts as even), None if mixed."""
        pars = {bin(k & _ODD_MASK).count("1") & 1 for k in self._terms}
        if not pars:
            return 0
        return pars.pop() if len(pars) == 1 else None

    def has_parity(self, p: int) -> bool:
        return all((bin(k & _ODD_MASK).count("1") & 1) == p for k in self._terms)

    def even_degree(self) -> int:
        return max((_degree(k) for k in self._terms), default=0)

    def numeric_part(self) -> "SuperPolynomial":
        return SuperPolynomial._raw(self.signature, {k: v for k, v in self._terms.items() if not k & _ODD_MASK})

    def odd_content(self) -> set[int]:
        m = 0
        for k in self._terms:
            m |= k & _ODD_MASK
        return set(_bits(m))

    def uses(self, name: str) -> bool:
        par, i = self.signature.locate(name)
        if par:
            return any(k & (1 << i) for k in self._terms)
        shift = _ODD_BITS + _EXP_BITS * i
        return any((k >> shift) & _EXP_LIMIT for k in self._terms)

    def has_nilpotent_shift(self) -> bool:
        """True if some term has even degree zero but nonempty odd part."""
        return any(k and not k >> _ODD_BITS for k in self._terms)

    # arithmetic -------------------------------------------------------
    def _check(self, other):
        if not isinstance(other, SuperPolynomial):
            return SuperPolynomial.constant(self.signature, other)
        if other.signature != self.signature:
            raise SignatureError(f"signature mismatch: {self.signature} vs {other.signature}")
        return other

    def __add__(self, other):
        other = self._check(other)
        out = dict(self._terms)
        for k, v in other._terms.items():
            w = out.get(k)
            if w is None:
                out[k] = v
            else:
                s = w + v
                if s:
                    out[k] = s
                else:
                    del out[k]
        return SuperPolynomial._raw(self.signature, out)

    __radd__ = __add__

    def __neg__(self):
        return SuperPolynomial._raw(self.signature, {k: -v for k, v in self._terms.items()})

    def __sub__(self, other):
        return self + (-self._check(other))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, SuperPolynomial):
            return sp_mul(self, other)
        if isinstance(other, Jet):
            return NotImplemented
        c = Scalar.of(other)
        if not c:
            return SuperPolynomial.zero(self.signature)
        return SuperPolynomial._raw(self.signature, {k: v * c for k, v in self._terms.items()})

    def __rmul__(self, other):
        return self * other

    def __pow__(self, n: int):
        out = SuperPolynomial.constant(self.signature, 1)
        for _ in range(n):
            out = out * self
        return out

    def scale(self, c) -> "SuperPolynomial":
        return self * Scalar.of(c)

    def truncate(self, order: int | None) -> "SuperPolynomial":
        if order is None:
            return self
        return SuperPolynomial._raw(self.signature, {k: v for k, v in self._terms.items() if _degree(k) <= order})

    def __eq__(self, other):
        if isinstance(other, SuperPolynomial):
            return self.signature == other.signature and self._terms == other._terms
        try:
            c = Scalar.of(other)
        except (TypeError, ValueError):
            return NotImplemented
        return self._terms == ({0: c} if c else {})

    def __hash__(self):
        return hash((self.signature, frozenset(self._terms.items())))

    def __repr__(self):
        return f"SuperPolynomial({self})"

    def __str__(self):
        return format_superpolynomial(self)


def format_superpolynomial(f: SuperPolynomial, shifted: bool = True) -> str:
    """Human-readable form; even variables shown as ``(x-c)`` when centered away from zero."""
    sig = f.signature
    parts = []
    for exps, odd, c in f.terms():
        factors = []
        for name, e, cen in zip(sig.even, exps, sig.center):
            if not e:
                continue
            base = name if not cen else f"({name}-{cen})" if cen.is_real() and cen.re > 0 else f"({name}-({cen}))"
            factors.append(base if e == 1 else f"{base}^{e}")
        factors += [sig.odd[j] for j in odd]
        mono = "*".join(factors)
        cs = str(c)
        if not mono:
            parts.append(cs)
        elif c == ONE:
            parts.append(mono)
        elif c == -ONE:
            parts.append("-" + mono)
        else:
            parts.append(f"({cs})*{mono}" if ("+" in cs or "i" in cs or "-" in cs[1:]) else f"{cs}*{mono}")
    if not parts:
        return "0"
    out = parts[0]
    for p in parts[1:]:
        out += " - " + p[1:] if p.startswith("-") else " + " + p
    return out


# ---------------------------------------------------------------------------
# Core operations


def _mul_terms(A: Mapping[int, Scalar], B: Mapping[int, Scalar], order: int | None) -> dict[int, Scalar]:
    if not A or not B:
        return {}
    if len(A) > len(B):
        A, B, swapped = B, A, True
    else:
        swapped = False
    bl = sorted(((_degree(k), k, k & _ODD_MASK, v) for k, v in B.items()), key=lambda t: t[0])
    out: dict[int, Scalar] = {}
    get = out.get
    for ka, ca in A.items():
        ma = ka & _ODD_MASK
        da = _degree(ka)
        limit = None if order is None else order - da
        if limit is not None and limit < 0:
            continue
        for db, kb, mb, cb in bl:
            if limit is not None and db > limit:
                break
            if ma & mb:
                continue
            c = ca * cb if not swapped else cb * ca
            if ma and mb:
                s = _sign(mb, ma) if swapped else _sign(ma, mb)
                if s < 0:
                    c = -c
            k = ka + kb
            w = get(k)
            out[k] = c if w is None else w + c
    return {k: v for k, v in out.items() if v}


def sp_mul(f: SuperPolynomial, g: SuperPolynomial, order: int | None = None) -> SuperPolynomial:
    """Product in canonical form under the Koszul sign rule, optionally truncated."""
    if f.signature != g.signature:
        raise SignatureError(f"signature mismatch: {f.signature} vs {g.signature}")
    return SuperPolynomial._raw(f.signature, _mul_terms(f._terms, g._terms, order))


def sp_value_at(f: SuperPolynomial, point: Mapping[str, object]) -> Scalar:
    """Value of the numeric part ``f_0`` at a reduced point."""
    sig = f.signature
    missing = [n for n in sig.even if n not in point]
    if missing:
        raise SignatureError(f"point does not assign {missing}")
    shifts = [Scalar.of(point[n]) - c for n, c in zip(sig.even, sig.center)]
    n = len(sig.even)
    total = ZERO
    for k, c in f._terms.items():
        if k & _ODD_MASK:
            continue
        v = c
        for s, e in zip(shifts, _unpack_exps(k, n)):
            if e:
                v = v * s**e
        total = total + v
    return total


def _check_assignment(f: SuperPolynomial, assignment: Mapping[str, SuperPolynomial]) -> ChartSignature:
    sig = f.signature
    missing = [n for n in sig.names if n not in assignment]
    if missing:
        raise SignatureError(f"assignment does not cover {missing}")
    target = None
    for n in sig.names:
        v = assignment[n]
        if target is None:
            target = v.signature
        elif v.signature != target:
            raise SignatureError("assignment values live on different charts")
        par = sig.parity_of(n)
        if not v.has_parity(par):
            raise ParityError(f"coordinate {n} is {'odd' if par else 'even'} but its value {v} is not")
    return target


def sp_substitute(
    f: SuperPolynomial,
    assignment: Mapping[str, SuperPolynomial],
    order: int | None = None,
    target: ChartSignature | None = None,
) -> SuperPolynomial:
    """Replace every coordinate of ``f`` by a superfunction on a common target chart.

    Even values are the (absolute) coordinate values; their center offset is
    subtracted before expanding.  With ``order`` the result and all
    intermediate products are truncated at that even degree.
    """
    sig = f.signature
    if sig.names:
        target = _check_assignment(f, assignment)
    elif target is None:
        raise SignatureError("target chart required for functions without coordinates")
    n = len(sig.even)
    shifted = [
        (assignment[name] - c)._terms if c else assignment[name]._terms for name, c in zip(sig.even, sig.center)
    ]
    odd_vals = [assignment[name]._terms for name in sig.odd]

    powers: list[list[dict[int, Scalar]]] = [[{0: ONE}] for _ in range(n)]

    def power(i, e):
        lst = powers[i]
        while len(lst) <= e:
            lst.append(_mul_terms(lst[-1], shifted[i], order))
        return lst[e]

    even_cache: dict[tuple[int, ...], dict[int, Scalar]] = {(0,) * n: {0: ONE}}

    def even_part(exps):
        got = even_cache.get(exps)
        if got is not None:
            return got
        last = max(i for i, e in enumerate(exps) if e)
        rest = list(exps)
        rest[last] = 0
        rest = tuple(rest)
        val = _mul_terms(even_part(rest), power(last, exps[last]), order) if any(rest) else power(last, exps[last])
        even_cache[exps] = val
        return val

    odd_cache: dict[int, dict[int, Scalar]] = {0: {0: ONE}}

    def odd_part(mask):
        got = odd_cache.get(mask)
        if got is not None:
            return got
        low = (mask & -mask).bit_length() - 1
        val = _mul_terms(odd_vals[low], odd_part(mask & (mask - 1)), order)
        odd_cache[mask] = val
        return val

    by_mask: dict[int, list[tuple[int, Scalar]]] = {}
    for k, c in f._terms.items():
        by_mask.setdefault(k & _ODD_MASK, []).append((k, c))

    out: dict[int, Scalar] = {}
    for mask, items in by_mask.items():
        acc: dict[int, Scalar] = {}
        for k, c in items:
            part = even_part(_unpack_exps(k, n))
            for kk, v in part.items():
                w = acc.get(kk)
                cv = v * c
                acc[kk] = cv if w is None else w + cv
        acc = {k: v for k, v in acc.items() if v}
        if mask:
            acc = _mul_terms(acc, odd_part(mask), order)
        for kk, v in acc.items():
            w = out.get(kk)
            out[kk] = v if w is None else w + v
    result = SuperPolynomial(target, out)
    return result.truncate(order)


def sp_recenter(f: SuperPolynomial, new_center: Mapping[str, object]) -> SuperPolynomial:
    """Re-express ``f`` in variables shifted to a new center (exact binomial shift)."""
    sig = f.signature
    new_sig = sig.with_center(sig.point(new_center))
    if new_sig == sig:
        return f
    assignment = {n: SuperPolynomial.coordinate(new_sig, n) for n in sig.names}
    return sp_substitute(f, assignment)


def sp_rename(f: SuperPolynomial, target: ChartSignature, mapping: Mapping[str, str]) -> SuperPolynomial:
    """Relabel coordinates of ``f`` into ``target`` (parity and center preserving)."""
    sig = f.signature
    ev_pos = []
    for i, n in enumerate(sig.even):
        par, j = target.locate(mapping[n])
        if par:
            raise ParityError(f"{n} is even but {mapping[n]} is odd")
        if target.center[j] != sig.center[i]:
            raise SignatureError(f"center of {n} differs from center of {mapping[n]}")
        ev_pos.append(j)
    od_pos = []
    for n in sig.odd:
        par, j = target.locate(mapping[n])
        if not par:
            raise ParityError(f"{n} is odd but {mapping[n]} is even")
        od_pos.append(j)
    m = len(target.even)
    out = {}
    for k, c in f._terms.items():
        exps = [0] * m
        for i, e in enumerate(_unpack_exps(k, len(sig.even))):
            exps[ev_pos[i]] += e
        mask, sign = _mask_of(od_pos[j] for j in _bits(k & _ODD_MASK))
        out[_pack(exps, mask)] = c if sign > 0 else -c
    return SuperPolynomial._raw(target, out)


def sp_derivative(f: SuperPolynomial, name: str) -> SuperPolynomial:
    """Partial derivative along a coordinate; odd derivatives act from the left."""
    sig = f.signature
    par, i = sig.locate(name)
    out: dict[int, Scalar] = {}
    if par:
        bit = 1 << i
        for k, c in f._terms.items():
            if not k & bit:
                continue
            below = bin(k & (bit - 1)).count("1")
            out[k ^ bit] = -c if below & 1 else c
    else:
        shift = _ODD_BITS + _EXP_BITS * i
        for k, c in f._terms.items():
            e = (k >> shift) & _EXP_LIMIT
            if e:
                out[k - (1 << shift)] = c * e
    return SuperPolynomial._raw(sig, out)


# ---------------------------------------------------------------------------
# Jets


@dataclass(frozen=True, eq=False)
class Jet:
    """Superfunction truncated at even total degree ``order`` around the chart center."""

    body: SuperPolynomial
    order: int

    def __post_init__(self):
        if self.order < 0:
            raise ValueError("jet order must be non-negative")
        object.__setattr__(self, "body", self.body.truncate(self.order))

    @property
    def signature(self) -> ChartSignature:
        return self.body.signature

    def _other(self, other) -> "Jet":
        if isinstance(other, Jet):
            if other.order != self.order:
                raise ValueError("jet orders differ")
            return other
        if isinstance(other, SuperPolynomial):
            return Jet(other, self.order)
        return Jet(SuperPolynomial.constant(self.signature, other), self.order)

    def __add__(self, other):
        return Jet(self.body + self._other(other).body, self.order)

    __radd__ = __add__

    def __sub__(self, other):
        return Jet(self.body - self._other(other).body, self.order)

    def __neg__(self):
        return Jet(-self.body, self.order)

    def __mul__(self, other):
        if isinstance(other, (Jet, SuperPolynomial)):
            return Jet(sp_mul(self.body, self._other(other).body, self.order), self.order)
        return Jet(self.body * other, self.order)

    def __rmul__(self, other):
        if isinstance(other, SuperPolynomial):
            return Jet(sp_mul(other, self.body, self.order), self.order)
        return Jet(self.body * other, self.order)

    def __eq__(self, other):
        if isinstance(other, Jet):
            return self.order == other.order and self.body == other.body
        if isinstance(other, SuperPolynomial):
            return self.body == other.truncate(self.order)
        return NotImplemented

    def __hash__(self):
        return hash((self.body, self.order))

    def is_zero(self) -> bool:
        return self.body.is_zero()

    def __str__(self):
        return f"{self.body} + O({self.order + 1})"


def jet_truncate(f: SuperPolynomial, order: int) -> Jet:
    """Drop every term whose even degree exceeds ``order``; odd factors never count."""
    if order < 0:
        raise ValueError("jet order must be non-negative")
    return Jet(f, order)
