"""Shadings Y(T) of a line family, their statistics and the two-ends test."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .. import kernels
from ..rng import make_rng
from .geometry import GridError, LineFamily


@dataclass
class Shading:
    """``sets[i]`` holds sorted member indices of line ``i``."""

    family: LineFamily
    sets: list

    def __post_init__(self):
        if len(self.sets) != len(self.family):
            raise GridError("shading must give a subset for every line")
        clean = []
        for i, s in enumerate(self.sets):
            a = np.unique(np.asarray(s, dtype=np.int64))
            if len(a) and (a[0] < 0 or a[-1] >= len(self.family.lines[i])):
                raise GridError(f"Y(T) is not a subset of T for line {i}")
            clean.append(a)
        self.sets = clean

    def points(self, i: int) -> np.ndarray:
        return self.family.lines[i].points[self.sets[i]]

    @property
    def mass(self) -> int:
        return int(sum(len(s) for s in self.sets))

    def density(self, i: int) -> float:
        L = len(self.family.lines[i])
        return len(self.sets[i]) / L if L else 0.0

    def mean_density(self) -> float:
        total = sum(len(L) for L in self.family.lines)
        return self.mass / total if total else 0.0

    def union(self) -> tuple[np.ndarray, np.ndarray]:
        """Distinct points of E and the counting function mu on them."""
        chunks = [self.points(i) for i in range(len(self.sets)) if len(self.sets[i])]
        if not chunks:
            return np.zeros((0, self.family.n), dtype=np.int64), np.zeros(0, dtype=np.int64)
        P = np.concatenate(chunks)
        E, mu = np.unique(P, axis=0, return_counts=True)
        return E, mu.astype(np.int64)

    def to_json(self) -> dict:
        return {str(i): s.tolist() for i, s in enumerate(self.sets)}

    @classmethod
    def from_json(cls, family: LineFamily, obj: dict) -> "Shading":
        sets = [[] for _ in family.lines]
        for k, v in obj.items():
            i = int(k)
            if not 0 <= i < len(family):
                raise GridError(f"shading refers to missing line {i}")
            sets[i] = v
        return cls(family, sets)


def full_shading(F: LineFamily) -> Shading:
    return Shading(F, [np.arange(len(L)) for L in F.lines])


def empty_shading(F: LineFamily) -> Shading:
    return Shading(F, [[] for _ in F.lines])


def stride_shading(F: LineFamily, step: int = 2) -> Shading:
    return Shading(F, [np.arange(0, len(L), step) for L in F.lines])


def random_shading(F: LineFamily, density: float, seed: int = 0) -> Shading:
    rng = make_rng(seed)
    sets = []
    for L in F.lines:
        k = int(round(density * len(L)))
        sets.append(np.sort(rng.choice(len(L), size=min(k, len(L)), replace=False)))
    return Shading(F, sets)


def concentrated_shading(F: LineFamily, length: Fraction | float = Fraction(1, 4)) -> Shading:
    """Y(T) = the points of T with height in a window of the given length around 0."""
    half = float(length) * F.N / 2
    sets = []
    for L in F.lines:
        h = L.heights()
        sets.append(np.nonzero(np.abs(h) <= half)[0])
    return Shading(F, sets)


def single_point_shading(F: LineFamily) -> Shading:
    return Shading(F, [[len(L) // 2] if len(L) else [] for L in F.lines])


def shading_stats(F: LineFamily, Y: Shading) -> dict:
    if Y.family is not F:
        Y = Shading(F, Y.sets)
    E, mu = Y.union()
    dens = [Y.density(i) for i in range(len(F))]
    hist = np.bincount(mu) if len(mu) else np.zeros(1, dtype=np.int64)
    nominal = F.N * len(F)
    slack = F.params.slack
    mass = Y.mass
    return {
        "lines": len(F),
        "mass": mass,
        "mu_total": int(mu.sum()),
        "union": int(len(E)),
        "lambda": Y.mean_density(),
        "lambda_min": min(dens) if dens else 0.0,
        "lambda_max": max(dens) if dens else 0.0,
        "mu_histogram": {int(k): int(v) for k, v in enumerate(hist) if v and k},
        "saturated": bool(nominal and nominal <= slack * mass and mass <= slack * nominal),
    }


@dataclass(frozen=True)
class TwoEndsParams:
    sigma: Fraction = Fraction(1, 8)
    slack: Fraction = Fraction(1)

    def __post_init__(self):
        if self.sigma <= 0:
            raise GridError("sigma must be positive")


def dyadic_radii(N: int) -> list:
    """r = 2^-j for j = 0 .. while r >= 1/N."""
    out, j = [], 0
    while Fraction(1, 2 ** j) >= Fraction(1, N):
        out.append(Fraction(1, 2 ** j))
        j += 1
    return out


def two_ends_check(F: LineFamily, Y: Shading, params: TwoEndsParams = TwoEndsParams()) -> dict:
    """Worst ratio #(Y(T) & B(x, r)) / (lambda_T r^sigma #T) per line, x over Y(T).

    ``lambda_T #T = #Y(T)`` plays the role of ``lambda N``.  A line passes
    when its worst ratio is at most the slack.
    """
    N = F.N
    radii = dyadic_radii(N)
    radii2 = np.array([int((r * N) ** 2) for r in radii], dtype=np.int64)
    sig = float(params.sigma)
    per_line = []
    for i in range(len(F)):
        P = Y.points(i)
        m = len(P)
        if m == 0:
            per_line.append({"line": i, "ratio": 0.0, "r": None, "ok": True})
            continue
        C = kernels.ball_counts(P, radii2)
        best, at = 0.0, None
        for q, r in enumerate(radii):
            ratio = float(C[q].max()) / (m * float(r) ** sig)
            if ratio > best:
                best, at = ratio, r
        per_line.append({"line": i, "ratio": best, "r": str(at), "ok": best <= float(params.slack)})
    return {
        "sigma": str(params.sigma),
        "slack": str(params.slack),
        "lines": per_line,
        "worst": max((d["ratio"] for d in per_line), default=0.0),
        "ok": all(d["ok"] for d in per_line),
    }
