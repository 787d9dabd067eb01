"""Slopes over F_p (and Q) together with projections, dual slopes and Moebius maps.

A slope is either a field element or the tagged value ``INF``.  Over F_p the
field elements are :class:`FieldElem`; in exact-rational mode they are
:class:`fractions.Fraction`.  The projection ``pi_r`` sends ``(a, b)`` to
``a + r*b`` and ``pi_inf`` sends it to ``b``.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence, Union


class SlopeError(ValueError):
    """Invalid slope, modulus mismatch or malformed field data."""


class ExceptionalSlopeError(SlopeError):
    """Raised when a dual slope does not exist for the requested slope."""


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    f = 3
    while f * f <= n:
        if n % f == 0:
            return False
        f += 2
    return True


class Infinity:
    """The slope at infinity.  There is exactly one instance, ``INF``."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "INF"

    def __str__(self) -> str:
        return "inf"

    def __reduce__(self):
        return (Infinity, ())


INF = Infinity()


@dataclass(frozen=True)
class FieldElem:
    """Residue ``value`` modulo the prime ``p``."""

    value: int
    p: int

    def __post_init__(self):
        if self.p < 2:
            raise SlopeError(f"modulus must be a prime, got {self.p}")
        if not 0 <= self.value < self.p:
            object.__setattr__(self, "value", self.value % self.p)

    def _other(self, other) -> "FieldElem":
        if isinstance(other, FieldElem):
            if other.p != self.p:
                raise SlopeError(f"modulus mismatch: {self.p} vs {other.p}")
            return other
        if isinstance(other, int):
            return FieldElem(other % self.p, self.p)
        return NotImplemented

    def __add__(self, other):
        o = self._other(other)
        if o is NotImplemented:
            return o
        return FieldElem((self.value + o.value) % self.p, self.p)

    __radd__ = __add__

    def __sub__(self, other):
        o = self._other(other)
        if o is NotImplemented:
            return o
        return FieldElem((self.value - o.value) % self.p, self.p)

    def __rsub__(self, other):
        o = self._other(other)
        if o is NotImplemented:
            return o
        return FieldElem((o.value - self.value) % self.p, self.p)

    def __mul__(self, other):
        o = self._other(other)
        if o is NotImplemented:
            return o
        return FieldElem((self.value * o.value) % self.p, self.p)

    __rmul__ = __mul__

    def __neg__(self):
        return FieldElem((-self.value) % self.p, self.p)

    def inverse(self) -> "FieldElem":
        if self.value == 0:
            raise ZeroDivisionError("0 has no inverse")
        return FieldElem(pow(self.value, -1, self.p), self.p)

    def __truediv__(self, other):
        o = self._other(other)
        if o is NotImplemented:
            return o
        return self * o.inverse()

    def __rtruediv__(self, other):
        o = self._other(other)
        if o is NotImplemented:
            return o
        return o * self.inverse()

    def __eq__(self, other):
        if isinstance(other, FieldElem):
            return self.p == other.p and self.value == other.value
        if isinstance(other, int) and not isinstance(other, bool):
            return self.value == other % self.p
        return NotImplemented

    def __hash__(self):
        return hash((self.value, self.p))

    def __int__(self):
        return self.value

    def __repr__(self) -> str:
        return f"{self.value} (mod {self.p})"


Scalar = Union[FieldElem, Fraction]
Slope = Union[FieldElem, Fraction, Infinity]


class GF:
    """Prime field F_p.  ``GF(7)(3)`` builds an element; odd primes only."""

    def __init__(self, p: int):
        if not is_prime(p):
            raise SlopeError(f"{p} is not prime")
        if p == 2:
            raise SlopeError("characteristic 2 is not supported (-1 == 1)")
        self.p = p

    def __call__(self, v) -> FieldElem:
        if isinstance(v, FieldElem):
            if v.p != self.p:
                raise SlopeError(f"modulus mismatch: {v.p} vs {self.p}")
            return v
        return FieldElem(int(v) % self.p, self.p)

    def slope(self, token) -> Slope:
        return parse_slope(token, self.p)

    def slopes(self, include_inf: bool = True) -> list[Slope]:
        out: list[Slope] = [FieldElem(v, self.p) for v in range(self.p)]
        if include_inf:
            out.append(INF)
        return out

    def proper_slopes(self) -> list[Slope]:
        return [r for r in self.slopes() if is_proper(r)]

    def __eq__(self, other):
        return isinstance(other, GF) and other.p == self.p

    def __hash__(self):
        return hash(("GF", self.p))

    def __repr__(self) -> str:
        return f"GF({self.p})"


def is_inf(r) -> bool:
    return r is INF


def is_proper(r: Slope) -> bool:
    if r is INF:
        return True
    if isinstance(r, FieldElem):
        return r.value != r.p - 1
    return r != -1


def slope_modulus(r: Slope) -> int | None:
    return r.p if isinstance(r, FieldElem) else None


def parse_slope(token, p: int | None = None) -> Slope:
    """Parse ``"inf"``, an integer or ``"a/b"`` into a slope.

    With ``p`` given the result lives in F_p; otherwise it is an exact rational.
    """
    if token is INF:
        return INF
    if isinstance(token, FieldElem):
        if p is not None and token.p != p:
            raise SlopeError(f"modulus mismatch: {token.p} vs {p}")
        return token
    if isinstance(token, str):
        t = token.strip().lower()
        if t in ("inf", "infinity", "oo"):
            return INF
        try:
            token = Fraction(t)
        except ValueError as exc:
            raise SlopeError(f"cannot parse slope {token!r}") from exc
    if isinstance(token, bool):
        raise SlopeError(f"cannot parse slope {token!r}")
    if p is None:
        return Fraction(token)
    q = Fraction(token)
    num = FieldElem(q.numerator % p, p)
    den = FieldElem(q.denominator % p, p)
    if den.value == 0:
        raise SlopeError(f"denominator of {token} vanishes mod {p}")
    return num / den


def slope_to_json(r: Slope):
    if r is INF:
        return "inf"
    if isinstance(r, FieldElem):
        return r.value
    q = Fraction(r)
    return q.numerator if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def slope_key(r: Slope) -> tuple:
    """Canonical ordering: finite values ascending, then infinity."""
    if r is INF:
        return (1, 0)
    if isinstance(r, FieldElem):
        return (0, r.value)
    return (0, Fraction(r))


def slope_parts(r: Slope) -> tuple[int, bool]:
    """``(value, is_inf)`` for numeric kernels; value is 0 at infinity."""
    if r is INF:
        return 0, True
    if isinstance(r, FieldElem):
        return r.value, False
    raise SlopeError("kernel slopes must be F_p elements")


def _coerce_scalar(x, p: int | None):
    if isinstance(x, FieldElem):
        if p is not None and x.p != p:
            raise SlopeError(f"modulus mismatch: {x.p} vs {p}")
        return x
    if p is not None:
        return FieldElem(int(x) % p, p)
    return Fraction(x)


def _modulus_of(*items) -> int | None:
    p = None
    for it in items:
        q = slope_modulus(it) if not isinstance(it, (tuple, list)) else None
        if q is None:
            continue
        if p is not None and q != p:
            raise SlopeError(f"modulus mismatch: {p} vs {q}")
        p = q
    return p


def project(r: Slope, g, p: int | None = None):
    """``pi_r(g)``: ``a + r*b`` for finite r, ``b`` for ``r = INF``.

    ``g`` is a pair ``(a, b)`` of field elements (or of plain integers when
    ``p`` or a modular ``r`` fixes the field).  Vectors in F_p^d are given as
    tuples and projected componentwise.
    """
    a, b = g
    if isinstance(a, (tuple, list)):
        return tuple(project(r, (ai, bi), p) for ai, bi in zip(a, b, strict=True))
    mod = _modulus_of(r, a, b)
    if p is not None:
        if mod is not None and mod != p:
            raise SlopeError(f"modulus mismatch: {mod} vs {p}")
        mod = p
    a = _coerce_scalar(a, mod)
    b = _coerce_scalar(b, mod)
    if r is INF:
        return b
    r = _coerce_scalar(r, mod)
    return a + r * b


def project_pair(r: Slope, r2: Slope, gg, p: int | None = None):
    """Double projection ``(pi_r(g), pi_r2(g'))``."""
    g, g2 = gg
    return project(r, g, p), project(r2, g2, p)


# --- projective helpers --------------------------------------------------

def _form(r: Slope, one):
    """Linear form of ``pi_r`` as coefficients of (a, b)."""
    if r is INF:
        return (one * 0, one)
    return (one, r)


def _one_like(*items):
    for it in items:
        if isinstance(it, FieldElem):
            return FieldElem(1, it.p)
    return Fraction(1)


def _slope_of_form(u, v) -> Slope:
    """Slope whose linear form is proportional to ``(u, v)``."""
    if u == 0:
        if v == 0:
            raise ExceptionalSlopeError("zero linear form")
        return INF
    return v / u


def _solve2(c1, c2, target):
    """Solve ``x*c1 + z*c2 = target`` for 2-vectors by Cramer's rule."""
    det = c1[0] * c2[1] - c1[1] * c2[0]
    if det == 0:
        raise ExceptionalSlopeError("degenerate slope pair")
    x = (target[0] * c2[1] - target[1] * c2[0]) / det
    z = (c1[0] * target[1] - c1[1] * target[0]) / det
    return x, z


@dataclass(frozen=True)
class NuParams:
    """Parameters of ``nu(g, g') = s*pi_{r_inf}(g) + pi_{-1}(g')`` on ``V^{r0}``."""

    r0: Slope
    r_inf: Slope
    s: Scalar

    def __post_init__(self):
        if not (is_proper(self.r0) and is_proper(self.r_inf)):
            raise SlopeError("r0 and r_inf must be proper")
        if slope_key(self.r0) == slope_key(self.r_inf):
            raise SlopeError("r0 and r_inf must differ")
        if self.s == 0:
            raise SlopeError("s must be nonzero")
        _modulus_of(self.r0, self.r_inf, self.s)

    @property
    def p(self) -> int | None:
        return _modulus_of(self.r0, self.r_inf, self.s)

    @classmethod
    def model(cls, s, p: int | None = None) -> "NuParams":
        """The ``r0 = 0, r_inf = INF`` family."""
        zero = FieldElem(0, p) if p else Fraction(0)
        return cls(zero, INF, _coerce_scalar(s, p))


def dual_coefficients(nu: NuParams, r: Slope):
    """Return ``(x, y, z, r')`` with
    ``s*pi_rinf(g) + pi_{-1}(g') = x*pi_r(g) + y*pi_r'(g') + z*(pi_r0(g) - pi_r0(g'))``.
    """
    if not is_proper(r):
        raise ExceptionalSlopeError(f"slope {slope_to_json(r)} is not proper")
    key = slope_key(r)
    if key == slope_key(nu.r0) or key == slope_key(nu.r_inf):
        raise ExceptionalSlopeError(
            f"slope {slope_to_json(r)} coincides with r0 or r_inf; no dual exists"
        )
    one = _one_like(nu.r0, nu.r_inf, nu.s, r)
    s = nu.s if not isinstance(nu.s, int) else one * nu.s
    f_inf = _form(nu.r_inf, one)
    target = (s * f_inf[0], s * f_inf[1])
    x, z = _solve2(_form(r, one), _form(nu.r0, one), target)
    f_r0 = _form(nu.r0, one)
    # g' part: pi_{-1} + z*pi_r0 = y*pi_r'
    u = one + z * f_r0[0]
    v = -one + z * f_r0[1]
    rp = _slope_of_form(u, v)
    y = u if u != 0 else v
    if x == 0 or y == 0 or z == 0:
        raise ExceptionalSlopeError(f"slope {slope_to_json(r)} is exceptional")
    return x, y, z, rp


def dual_slope(nu: NuParams, r: Slope) -> Slope:
    """The slope r' for which ``nu`` is determined by ``pi_{r (x) r'}`` on ``V``."""
    return dual_coefficients(nu, r)[3]


@dataclass(frozen=True)
class Moebius:
    """Fractional linear map ``r -> (a*r + b) / (c*r + d)``."""

    a: Scalar
    b: Scalar
    c: Scalar
    d: Scalar

    def __post_init__(self):
        if self.a * self.d - self.b * self.c == 0:
            raise SlopeError("degenerate Moebius map (ad - bc = 0)")

    @classmethod
    def identity(cls, p: int | None = None) -> "Moebius":
        one, zero = (FieldElem(1, p), FieldElem(0, p)) if p else (Fraction(1), Fraction(0))
        return cls(one, zero, zero, one)

    @classmethod
    def inversion(cls, p: int | None = None) -> "Moebius":
        one, zero = (FieldElem(1, p), FieldElem(0, p)) if p else (Fraction(1), Fraction(0))
        return cls(zero, one, one, zero)

    @classmethod
    def random_fixing_minus_one(cls, p: int, rng: random.Random) -> "Moebius":
        while True:
            a, b, c = (FieldElem(rng.randrange(p), p) for _ in range(3))
            d = c + a - b
            if a * d - b * c != 0:
                return cls(a, b, c, d)

    @classmethod
    def all_fixing_minus_one(cls, p: int) -> list["Moebius"]:
        """Every map fixing -1, one representative per projective class."""
        out = []
        seen = set()
        for a in range(p):
            for b in range(p):
                for c in range(p):
                    d = (c + a - b) % p
                    if (a * d - b * c) % p == 0:
                        continue
                    # normalise the first nonzero coefficient to 1
                    coeffs = (a, b, c, d)
                    lead = next(x for x in coeffs if x)
                    inv = pow(lead, -1, p)
                    norm = tuple((x * inv) % p for x in coeffs)
                    if norm in seen:
                        continue
                    seen.add(norm)
                    out.append(cls(*(FieldElem(x, p) for x in norm)))
        return out

    def fixes_minus_one(self) -> bool:
        one = _one_like(self.a, self.b, self.c, self.d)
        return slope_key(moebius_apply(self, -one)) == slope_key(-one)

    def induced_linear_map(self):
        """2x2 matrix ``A`` with ``pi_{L(r)}(A g)`` proportional to ``pi_r(g)``.

        Rows of ``A`` act on the column vector ``(a, b)``.
        """
        # slope forms transform by B = [[d, b], [c, a]] = A^{-1}
        m00, m01, m10, m11 = self.d, self.b, self.c, self.a
        det = m00 * m11 - m01 * m10
        return ((m11 / det, -m01 / det), (-m10 / det, m00 / det))


def moebius_apply(L: Moebius, r: Slope) -> Slope:
    if r is INF:
        num, den = L.a, L.c
    else:
        num, den = L.a * r + L.b, L.c * r + L.d
    if den == 0:
        return INF
    return num / den


@dataclass
class GenericReport:
    ok: bool
    duals: list
    violation: str | None = None

    def __bool__(self) -> bool:
        return self.ok


def check_generic_slopes(nu: NuParams, rs: Sequence[Slope], extra: Iterable[Slope] = ()) -> GenericReport:
    """Check that ``{r0, r_inf, r_1..r_k, r'_1..r'_k}`` (plus ``extra``) are
    pairwise distinct and proper.  Returns the duals or the first violation."""
    duals = []
    named = [("r0", nu.r0), ("r_inf", nu.r_inf)]
    for i, r in enumerate(rs, 1):
        if not is_proper(r):
            return GenericReport(False, duals, f"r{i}={slope_to_json(r)} is not proper")
        try:
            rp = dual_slope(nu, r)
        except ExceptionalSlopeError as exc:
            return GenericReport(False, duals, f"r{i}={slope_to_json(r)}: {exc}")
        duals.append(rp)
        named.append((f"r{i}", r))
    for i, rp in enumerate(duals, 1):
        named.append((f"r{i}'", rp))
    named.extend((f"extra{i}", e) for i, e in enumerate(extra, 1))
    seen: dict[tuple, str] = {}
    for name, r in named:
        if not is_proper(r):
            return GenericReport(False, duals, f"{name}={slope_to_json(r)} is not proper")
        k = slope_key(r)
        if k in seen:
            return GenericReport(
                False, duals,
                f"{name}={slope_to_json(r)} collides with {seen[k]}",
            )
        seen[k] = name
    return GenericReport(True, duals)
