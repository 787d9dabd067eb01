"""Discretized points and lines on the grid N^{-1} Z^n inside B(0, C_ball).

Points are stored as integer coordinate vectors in units of 1/N.  A line is
given by a base point at height 0 and a direction ``(v, 1)`` normalised to
vertical component 1.  Its members are the grid points in the ball whose
in-slice offset from the ideal line is at most ``C_line / N`` in the sup norm,
so a line meets each horizontal slice in one point (two at exact ties).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from ..rng import make_rng


class GridError(ValueError):
    pass


@dataclass(frozen=True)
class GridParams:
    C_ball: Fraction = Fraction(2)
    C_line: Fraction = Fraction(1, 2)
    cap_tan: Fraction = Fraction(1)  # tangent of the vertical-angle cap (pi/4)
    slack: int = 4  # "~" windows are dyadic factor-4 windows
    family_C: int = 4  # #F <= family_C * N^(n-1)

    def to_json(self) -> dict:
        return {"C_ball": str(self.C_ball), "C_line": str(self.C_line),
                "cap_tan": str(self.cap_tan), "slack": self.slack, "family_C": self.family_C}


DEFAULT = GridParams()


def _frac(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, str):
        return Fraction(x)
    if isinstance(x, float):
        return Fraction(x).limit_denominator(10 ** 9)
    return Fraction(int(x))


def _frac_json(q: Fraction):
    return q.numerator if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def height_count(N: int, params: GridParams = DEFAULT) -> int:
    """Number of grid heights in the ball; plays the role of N in slice counts."""
    return 2 * math.floor(params.C_ball * N) + 1


@dataclass
class DLine:
    n: int
    N: int
    base: tuple  # Fractions, last coordinate 0
    v: tuple  # horizontal direction part (Fractions); direction is (v, 1)
    points: np.ndarray  # (m, n) int64 grid points, sorted by height

    def __len__(self) -> int:
        return int(self.points.shape[0])

    @property
    def direction(self) -> tuple:
        return tuple(self.v) + (Fraction(1),)

    def heights(self) -> np.ndarray:
        return self.points[:, -1]

    def at_height(self, h: int) -> np.ndarray:
        return self.points[self.points[:, -1] == h]

    def crossing(self, h) -> tuple:
        """Ideal crossing point (in units of 1/N) at grid height ``h``."""
        t = Fraction(h)
        return tuple(self.N * b + vi * t for b, vi in zip(self.base[:-1], self.v))

    def slice_offset(self, x) -> Fraction:
        """Sup-norm in-slice offset of grid point ``x`` from the ideal line, in units of 1/N."""
        c = self.crossing(int(x[-1]))
        return max(abs(Fraction(int(xi)) - ci) for xi, ci in zip(x[:-1], c))

    def to_json(self) -> dict:
        return {"base": [_frac_json(b) for b in self.base], "dir": [_frac_json(d) for d in self.direction]}


def make_line(n: int, N: int, base: Sequence, direction: Sequence, params: GridParams = DEFAULT) -> DLine:
    if n < 2 or N < 1:
        raise GridError("need n >= 2 and N >= 1")
    base = [_frac(b) for b in base]
    d = [_frac(x) for x in direction]
    if len(base) != n or len(d) != n:
        raise GridError(f"base and direction must have {n} coordinates")
    if d[-1] == 0:
        raise GridError("direction too far from vertical (horizontal direction)")
    v = [x / d[-1] for x in d[:-1]]
    if sum(x * x for x in v) > params.cap_tan ** 2:
        raise GridError("direction too far from vertical: angle exceeds the cap")
    # move the base point to height 0
    b0 = [b - vi * base[-1] for b, vi in zip(base[:-1], v)] + [Fraction(0)]
    pts = _members(n, N, b0, v, params)
    return DLine(n, N, tuple(b0), tuple(v), pts)


def _members(n, N, b0, v, params: GridParams) -> np.ndarray:
    H = math.floor(params.C_ball * N)
    hs = np.arange(-H, H + 1, dtype=np.int64)
    D = 1
    for q in list(b0) + list(v) + [params.C_line]:
        D = D * q.denominator // math.gcd(D, q.denominator)
    c = params.C_line
    cols = []
    for i in range(n - 1):
        # D * N * crossing_i(h) = X_i(h), an integer
        X = int(N * b0[i] * D) + int(v[i] * D) * hs
        lo = -((-(X - int(c * D))) // D)  # ceil((X - cD) / D)
        hi = (X + int(c * D)) // D
        cols.append((lo, hi))
    width = max(int((hi - lo).max()) for lo, hi in cols) + 1 if len(hs) else 0
    grids = []
    for offs in np.ndindex(*([width] * (n - 1))):
        ks = [lo + o for (lo, _), o in zip(cols, offs)]
        ok = np.ones(len(hs), dtype=bool)
        for (_, hi), k in zip(cols, ks):
            ok &= k <= hi
        P = np.stack(ks + [hs], axis=1)[ok]
        grids.append(P)
    P = np.concatenate(grids) if grids else np.zeros((0, n), dtype=np.int64)
    R2 = (params.C_ball * N) ** 2
    inball = np.array([Fraction(int(s)) <= R2 for s in (P * P).sum(axis=1)], dtype=bool) if len(P) else np.zeros(0, bool)
    P = P[inball]
    order = np.lexsort(tuple(P[:, i] for i in range(n - 2, -1, -1)) + (P[:, -1],))
    return P[order].astype(np.int64)


@dataclass
class LineFamily:
    n: int
    N: int
    lines: list
    params: GridParams = field(default=DEFAULT)
    kind: str = "custom"

    def __len__(self) -> int:
        return len(self.lines)

    @property
    def separated(self) -> bool:
        return not separation_violations(self)

    def to_json(self) -> dict:
        return {"n": self.n, "N": self.N, "lines": [L.to_json() for L in self.lines]}

    @classmethod
    def from_json(cls, obj: dict, params: GridParams = DEFAULT) -> "LineFamily":
        try:
            n, N = int(obj["n"]), int(obj["N"])
            lines = [make_line(n, N, L["base"], L["dir"], params) for L in obj["lines"]]
        except (KeyError, TypeError) as e:
            raise GridError(f"malformed line family: {e}") from None
        return cls(n, N, lines, params)


def separation_violations(F: LineFamily) -> list:
    """Pairs of lines whose directions are closer than 1/N (difference of the v parts)."""
    if not F.lines:
        return []
    V = np.array([[float(x) for x in L.v] for L in F.lines])
    d2 = ((V[:, None, :] - V[None, :, :]) ** 2).sum(axis=2)
    bad = []
    thr = 1.0 / F.N ** 2
    for i, j in zip(*np.nonzero(d2 < thr * (1 + 1e-9))):
        if i < j:
            # confirm exactly near the threshold
            dv = sum((a - b) ** 2 for a, b in zip(F.lines[i].v, F.lines[j].v))
            if dv * F.N ** 2 < 1:
                bad.append((int(i), int(j)))
    return bad


def _angle(u, w) -> float:
    nu = math.sqrt(sum(float(x) ** 2 for x in u))
    nw = math.sqrt(sum(float(x) ** 2 for x in w))
    c = sum(float(a) * float(b) for a, b in zip(u, w)) / (nu * nw)
    return math.acos(max(-1.0, min(1.0, abs(c))))


def validate_family(F: LineFamily) -> dict:
    """Separation, the angular cap count and the family size, with realised constants."""
    n, N = F.n, F.N
    sep = separation_violations(F)
    size_C = len(F) / N ** (n - 1)
    # angular cap: #{T : angle(T, w) <= theta} <= C (N theta)^(n-1), theta dyadic in [1/N, 1]
    worst = 0.0
    worst_at = None
    dirs = [L.direction for L in F.lines]
    if dirs:
        A = np.array([[_angle(u, w) for w in dirs] for u in dirs])
        theta = 1.0
        while theta >= 1.0 / N:
            cnt = (A <= theta).sum(axis=1)
            ratio = float(cnt.max()) / (N * theta) ** (n - 1)
            if ratio > worst:
                worst, worst_at = ratio, theta
            theta /= 2
    lens = [len(L) for L in F.lines]
    return {
        "lines": len(F),
        "separated": not sep,
        "separation_violations": sep[:20],
        "size_constant": size_C,
        "size_ok": len(F) <= F.params.family_C * N ** (n - 1),
        "angle_constant": worst,
        "angle_constant_theta": worst_at,
        "line_cardinality_min": min(lens) if lens else 0,
        "line_cardinality_max": max(lens) if lens else 0,
        "ok": (not sep) and len(F) <= F.params.family_C * N ** (n - 1),
    }


def line_index(F: LineFamily) -> dict:
    """Map grid point tuple -> list of line indices containing it."""
    idx: dict = {}
    for i, L in enumerate(F.lines):
        for x in map(tuple, L.points.tolist()):
            idx.setdefault(x, []).append(i)
    return idx


def lines_through_pair(F: LineFamily, x1, x2, index: dict | None = None) -> int:
    x1, x2 = tuple(int(a) for a in x1), tuple(int(a) for a in x2)
    if x1 == x2:
        raise GridError("lines_through_pair needs two distinct points")
    if index is not None:
        a, b = index.get(x1, []), index.get(x2, [])
        return len(set(a) & set(b))
    count = 0
    for L in F.lines:
        P = L.points
        if (P == x1).all(axis=1).any() and (P == x2).all(axis=1).any():
            count += 1
    return count


def cone_count(F: LineFamily, x1, x2) -> int:
    """Lines whose direction lies in the cone every line through x1 and x2 must lie in.

    Both points are within sqrt(n-1) C_line / N of such a line, so its
    direction makes angle at most asin(2 sqrt(n-1) C_line / |x1 - x2|) (grid
    units) with x2 - x1.
    """
    w = [int(b) - int(a) for a, b in zip(x1, x2)]
    dist = math.sqrt(sum(c * c for c in w))
    s = 2 * math.sqrt(F.n - 1) * float(F.params.C_line) / dist
    lim = math.asin(min(1.0, s)) + 1e-12
    return sum(1 for L in F.lines if _angle(L.direction, w) <= lim)


# ---------------------------------------------------------------------------
# generators
# ---------------------------------------------------------------------------

KINDS = ("random", "bush", "hairbrush", "maximal_separated")


def direction_lattice(n: int, N: int, params: GridParams = DEFAULT) -> list:
    """All v in N^{-1} Z^(n-1) inside the cap; pairwise 1/N separated."""
    m = math.floor(params.cap_tan * N)
    out = []
    for q in np.ndindex(*([2 * m + 1] * (n - 1))):
        v = [Fraction(c - m, N) for c in q]
        if sum(x * x for x in v) <= params.cap_tan ** 2:
            out.append(tuple(v))
    return out


def generate_family(kind: str, n: int, N: int, count: int | None = None, seed: int = 0,
                    params: GridParams = DEFAULT) -> LineFamily:
    if kind not in KINDS:
        raise GridError(f"unknown family kind {kind!r}")
    if n < 2 or N < 2:
        raise GridError("need n >= 2 and N >= 2")
    cap = N ** (n - 1)
    dirs = direction_lattice(n, N, params)
    if kind == "maximal_separated":
        count = len(dirs)
    else:
        if count is None:
            count = N ** (n - 1)
        if count < 1:
            raise GridError("count must be positive")
        if count > cap:
            raise GridError(f"count {count} exceeds the N^(n-1) = {cap} capacity")
        if count > len(dirs):
            raise GridError(f"only {len(dirs)} separated directions fit in the cap")
    rng = make_rng(seed)
    pick = np.sort(rng.choice(len(dirs), size=count, replace=False)) if count < len(dirs) else np.arange(len(dirs))
    third = Fraction(1, 3)
    lines = []
    for i in pick:
        v = dirs[int(i)]
        if kind == "bush":
            base = [Fraction(0)] * n
        elif kind == "hairbrush":
            # every line meets the vertical stem through the origin
            z = Fraction(int(rng.integers(-N // 2, N // 2 + 1)), N)
            base = [-vi * z for vi in v] + [Fraction(0)]
        else:
            # off-grid offsets keep in-slice ties away
            base = [Fraction(int(rng.integers(-N // 2, N // 2 + 1)), N) + third / N for _ in range(n - 1)]
            base.append(Fraction(0))
        lines.append(make_line(n, N, base, list(v) + [1], params))
    return LineFamily(n, N, lines, params, kind)
