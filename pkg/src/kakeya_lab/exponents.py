"""Exponent maps, fixed points and dimension-bound formulas.

Rational inputs give exact ``Fraction`` outputs; the irrational fixed points
are found by bisection at 60 significant digits and returned as floats.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, asdict
from fractions import Fraction
from typing import Union

import mpmath

Real = Union[int, Fraction, float]

CSV_COLUMNS = ("n", "minkowski", "hausdorff", "maximal_p", "maximal_q", "wolff",
               "kt_minkowski", "kt_hausdorff", "bourgain_hausdorff", "best")
HAUSDORFF_START = (Fraction(1), Fraction(0))
_DPS = 60


class ExponentError(ValueError):
    pass


def _exact(x: Real):
    if isinstance(x, bool):
        raise ExponentError("boolean is not an exponent")
    if isinstance(x, int):
        return Fraction(x)
    return x


def _check_beta(beta):
    if not (1 < beta <= 2):
        raise ExponentError(f"beta must lie in (1, 2], got {beta}")


def basic_map(beta: Real):
    """SD(beta) => SD((4 beta - 1) / (2 beta))."""
    b = _exact(beta)
    _check_beta(b)
    return (4 * b - 1) / (2 * b)


def advanced_map(beta: Real):
    """SD(beta) => SD((3 beta^2 + 2 beta - 2) / (beta^2 + 3 beta - 2))."""
    b = _exact(beta)
    _check_beta(b)
    return (3 * b * b + 2 * b - 2) / (b * b + 3 * b - 2)


def _bisect(f, lo, hi, tol=mpmath.mpf(10) ** -40):
    with mpmath.workdps(_DPS):
        lo, hi = mpmath.mpf(lo), mpmath.mpf(hi)
        flo = f(lo)
        if flo * f(hi) > 0:
            raise ExponentError("no sign change on the bracket")
        while hi - lo > tol:
            mid = (lo + hi) / 2
            fm = f(mid)
            if fm == 0:
                return mid
            if (fm > 0) == (flo > 0):
                lo, flo = mid, fm
            else:
                hi = mid
        return (lo + hi) / 2


def advanced_fixed_mp():
    """Root of a^3 - 4a + 2 in (1, 2) as an mpf."""
    return _bisect(lambda a: a ** 3 - 4 * a + 2, 1, 2)


def advanced_fixed() -> float:
    return float(advanced_fixed_mp())


def basic_fixed() -> float:
    # 2b^2 - 4b + 1 = 0
    return float(_bisect(lambda b: 2 * b * b - 4 * b + 1, 1, 2))


def cubic_residual(alpha: float) -> float:
    return abs(alpha ** 3 - 4 * alpha + 2)


def hausdorff_recursion(a: Real, b: Real):
    """K(n, a(n-4) + 3 - b) => K(n, a'(n-4) + 3 - b') with the returned (a', b')."""
    a, b = _exact(a), _exact(b)
    if a < 0 or b < 0:
        raise ExponentError("a and b must be nonnegative")
    return (a * a + 2) / 4, b * (a + 1) / 2


def hausdorff_fixed() -> float:
    # a = (a^2 + 2) / 4  <=>  a^2 - 4a + 2 = 0, root in (0, 1)
    return float(_bisect(lambda a: a * a - 4 * a + 2, 0, 1))


def hausdorff_iterate(start=HAUSDORFF_START, steps: int = 50) -> list:
    out = [tuple(start)]
    a, b = start
    for _ in range(steps):
        a, b = hausdorff_recursion(a, b)
        # keep the iterates as floats once they stop being short rationals
        if isinstance(a, Fraction) and a.denominator > 10 ** 12:
            a, b = float(a), float(b)
        out.append((a, b))
    return out


def kakeya_recursion(n: Real, d: Real, dprime: Real):
    """K(n-1, d') together with K(n, d) implies K(n, (2n + 1 + d') / 4)."""
    n, d, dp = _exact(n), _exact(d), _exact(dprime)
    if not (0 < d < n):
        raise ExponentError("need 0 < d < n")
    if dp < 0 or dp > 2 * n - 1:
        raise ExponentError("d' out of range")
    return (2 * n + 1 + dp) / 4


def _check_n(n):
    if n < 2:
        raise ExponentError(f"n must be >= 2, got {n}")


def maximal_exponents(n: Real):
    """(p, q) for the maximal function estimate; q = (n-1) p' is exactly n + 3/4."""
    n = _exact(n)
    _check_n(n)
    p = (4 * n + 3) / 7
    q = (n - 1) * p / (p - 1)
    if isinstance(q, Fraction):
        assert q == n + Fraction(3, 4)
    return p, q


@dataclass
class BoundRow:
    n: Real
    minkowski: float
    hausdorff: float
    maximal_p: Real
    maximal_q: Real
    wolff: Real
    kt_minkowski: Real
    kt_hausdorff: Real
    bourgain_hausdorff: Real
    best: float
    minkowski_new: bool = False
    hausdorff_new: bool = False
    maximal_new: bool = False

    def to_json(self) -> dict:
        d = asdict(self)
        return {k: (_num(v) if not isinstance(v, bool) else v) for k, v in d.items()}


def _num(v):
    if isinstance(v, Fraction):
        return int(v) if v.denominator == 1 else float(v)
    return v


def dimension_bounds(n: Real, alpha: float | None = None) -> BoundRow:
    n = _exact(n)
    _check_n(n)
    a = advanced_fixed() if alpha is None else alpha
    nf = float(n)
    mink = (nf + a - 1) / a
    haus = (2 - math.sqrt(2)) * (nf - 4) + 3
    p, q = maximal_exponents(n)
    wolff = (n + 2) / 2
    kt_m = (4 * n + 3) / 7  # Minkowski bound from SD(7/4)
    kt_h = (6 * n + 5) / 11
    bo_h = (13 * n + 12) / 25  # also the Minkowski bound from SD(25/13)
    best = max(mink, haus, float(p))
    return BoundRow(
        n, mink, haus, p, q, wolff, kt_m, kt_h, bo_h, best,
        minkowski_new=mink > max(float(wolff), float(kt_m), float(bo_h)),
        hausdorff_new=haus > max(float(wolff), float(kt_h), float(bo_h)),
        # the maximal estimate matches the earlier Minkowski exponent, so it
        # is compared with the earlier maximal-function exponents only
        maximal_new=float(p) > max(float(wolff), float(bo_h)),
    )


def hausdorff_minkowski_crossover() -> float:
    """Real n* where (2 - sqrt 2)(n - 4) + 3 = (n + a - 1) / a."""
    with mpmath.workdps(_DPS):
        a = advanced_fixed_mp()
        c = 2 - mpmath.sqrt(2)
        # c n - 4c + 3 = n / a + (a - 1) / a
        n_star = (4 * c - 3 + (a - 1) / a) / (c - 1 / a)
        return float(n_star)


def comparison_table(n_min: int = 2, n_max: int = 24) -> list[BoundRow]:
    if not (2 <= n_min <= n_max):
        raise ExponentError("need 2 <= n_min <= n_max")
    a = advanced_fixed()
    return [dimension_bounds(n, a) for n in range(int(n_min), int(n_max) + 1)]


def table_csv(rows: list[BoundRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in rows:
        d = r.to_json()
        w.writerow([_fmt(d[c]) for c in CSV_COLUMNS])
    return buf.getvalue()


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.10g}"
    return str(v)


def table_json(rows: list[BoundRow]) -> dict:
    return {
        "rows": [r.to_json() for r in rows],
        "crossover_hausdorff_minkowski": hausdorff_minkowski_crossover(),
        "note": ("Hausdorff exceeds Minkowski only below the computed crossover; "
                 "at n = 23 the Minkowski bound is larger by about 0.003"),
    }


def first_exceeding(key: str, n_max: int = 60, baseline=lambda n: Fraction(n + 2, 2)) -> int | None:
    """Least integer n >= 2 with the named bound strictly above ``baseline(n)``."""
    a = advanced_fixed()
    for n in range(2, n_max + 1):
        if float(getattr(dimension_bounds(n, a), key)) > float(baseline(n)):
            return n
    return None
