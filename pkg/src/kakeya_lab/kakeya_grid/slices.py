"""Dyadic pigeonholing of E by multiplicity and of its horizontal slices by size."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .geometry import DEFAULT, GridError, GridParams, height_count


@dataclass
class SliceStructure:
    E_prime: np.ndarray  # (m, n) points of E'
    mu_level: int  # mu in [2^j, 2^(j+1)) on E'
    mass_E: int  # total mass of the input
    k: int
    S: np.ndarray  # selected heights (grid units), sorted
    counts: dict  # height -> #(E' & slice)
    H: int  # reference number of heights
    buckets: int  # nonempty slice-size buckets
    mu_buckets: int

    def slice_window(self) -> tuple[float, float]:
        """Every selected slice has size in [lo, hi)."""
        lo = 2.0 ** self.k * len(self.E_prime) / self.H
        return lo, 2 * lo

    def size_window(self) -> tuple[float, float]:
        """|S| lies in [2^-k H / (2 B), 2^-k H] by pigeonholing over B buckets."""
        top = 2.0 ** (-self.k) * self.H
        return top / (2 * self.buckets), top

    def windows_ok(self) -> bool:
        lo, hi = self.slice_window()
        sizes = [self.counts[int(t)] for t in self.S]
        ok_slice = all(lo <= s < hi for s in sizes)
        a, b = self.size_window()
        return ok_slice and a <= len(self.S) <= b

    def to_json(self) -> dict:
        return {"E_prime": len(self.E_prime), "mu_level": self.mu_level, "k": self.k,
                "S": [int(t) for t in self.S], "H": self.H, "buckets": self.buckets,
                "slice_window": list(self.slice_window()), "size_window": list(self.size_window()),
                "windows_ok": self.windows_ok()}


def _floor_log2(x: int) -> int:
    return int(x).bit_length() - 1


def _best_bucket(keys, weights) -> tuple[int, int]:
    """Bucket key with the largest total weight, smaller key on ties; and #buckets."""
    totals: dict = {}
    for k, w in zip(keys, weights):
        totals[k] = totals.get(k, 0) + int(w)
    best = min(totals, key=lambda k: (-totals[k], k))
    return best, len(totals)


def _slice_level(s: int, m: int, H: int) -> int:
    """Largest k with 2^k m <= s H (k may be negative)."""
    k = 0
    while Fraction(2) ** k * m > s * H:
        k -= 1
    while Fraction(2) ** (k + 1) * m <= s * H:
        k += 1
    return k


def slice_extract(E, mu=None, N: int | None = None, params: GridParams = DEFAULT) -> SliceStructure:
    """Pick E' (one dyadic multiplicity level) then S (one dyadic slice-size level).

    Both choices take the bucket of largest mass, the smaller level on ties.
    Heights are the last coordinate in grid units; ``H`` is the number of
    grid heights in the ball, which stands in for N in the window formulas.
    """
    E = np.asarray(E, dtype=np.int64)
    if E.ndim != 2 or len(E) == 0:
        raise GridError("slice_extract needs a nonempty point set")
    if mu is None:
        mu = np.ones(len(E), dtype=np.int64)
    mu = np.asarray(mu, dtype=np.int64)
    if N is None:
        N = max(1, int(np.abs(E).max()) // 2)
    H = height_count(N, params)
    lev = [_floor_log2(int(m)) for m in mu]
    j, nmu = _best_bucket(lev, mu)
    Ep = E[np.array(lev) == j]
    hs, cnt = np.unique(Ep[:, -1], return_counts=True)
    m = len(Ep)
    ks = [_slice_level(int(c), m, H) for c in cnt]
    k, nb = _best_bucket(ks, cnt)
    S = hs[np.array(ks) == k]
    counts = {int(h): int(c) for h, c in zip(hs, cnt)}
    return SliceStructure(Ep, j, int(mu.sum()), k, np.sort(S), counts, H, nb, nmu)
