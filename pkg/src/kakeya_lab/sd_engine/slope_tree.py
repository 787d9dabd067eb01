"""Slope trees for the advanced iteration, and the uniform/chunky dichotomy.

For a triple ``(r1, r2, r3)`` the corner map ``mu = pi_r3(g1) + pi_{-1}(g3)``
splits, for each extra slope ``r4``, as ``x pi_r4(g1) + nu_r4(g2, g3)`` with
``nu_r4 = u pi_r1(g2) + pi_{-1}(g3)`` on segments of slope ``r2``; here
``l_r3 = x l_r4 + u l_r1`` for the linear forms ``l_r = (1, r)``.  Every
slope set is the image of a base set R0 under a random Moebius map fixing -1,
resampled until all distinctness constraints hold.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from ..configs import fiber_index
from ..slope_field import (
    INF,
    FieldElem,
    Moebius,
    NuParams,
    SlopeError,
    check_generic_slopes,
    is_proper,
    moebius_apply,
    slope_key,
    slope_to_json,
)
from ..rng import PRNG_NAME, RandRange, make_rng

RANDOM_ATTEMPTS = 64
EXHAUSTIVE_LIMIT = 31  # enumerate all maps fixing -1 when random draws fail and p <= this


class FieldTooSmallError(SlopeError):
    """No admissible Moebius image exists: degeneracies are unavoidable in F_p."""


def _form(r, one):
    return (one * 0, one) if r is INF else (one, r)


def mu_split(r1, r2, r3, r4):
    """``(x, NuParams(r0=r2, r_inf=r1, s=u))`` with ``l_r3 = x l_r4 + u l_r1``.

    Raises :class:`SlopeError` when r4 is exceptional for the triple.
    """
    keys = [slope_key(r) for r in (r1, r2, r3, r4)]
    if len(set(keys)) != 4:
        raise SlopeError("r4 must differ from r1, r2, r3")
    p = next(r.p for r in (r1, r2, r3, r4) if isinstance(r, FieldElem))
    one = FieldElem(1, p)
    c1, c2, t = _form(r4, one), _form(r1, one), _form(r3, one)
    det = c1[0] * c2[1] - c1[1] * c2[0]
    if det == 0:
        raise SlopeError("degenerate slopes")
    x = (t[0] * c2[1] - t[1] * c2[0]) / det
    u = (c1[0] * t[1] - c1[1] * t[0]) / det
    if x == 0 or u == 0:
        raise SlopeError("exceptional r4")
    return x, NuParams(r2, r1, u)


@dataclass
class TripleData:
    triple: tuple
    R3: list  # R_{r1 r2 r3}: the r4 slopes
    nus: dict = field(default_factory=dict)  # slope_key(r4) -> NuParams
    xs: dict = field(default_factory=dict)
    R4: dict = field(default_factory=dict)  # slope_key(r4) -> list of r
    duals: dict = field(default_factory=dict)  # slope_key(r4) -> list of r'

    def children(self) -> list:
        out = []
        for r4 in self.R3:
            k = slope_key(r4)
            for r, rp in zip(self.R4[k], self.duals[k]):
                out.append((self.triple[1], r, rp))
        return out

    def rstar(self) -> list:
        s = {slope_key(r): r for r in self.triple}
        for r4 in self.R3:
            s[slope_key(r4)] = r4
            k = slope_key(r4)
            for r, rp in zip(self.R4[k], self.duals[k]):
                s[slope_key(r)] = r
                s[slope_key(rp)] = rp
        return [s[k] for k in sorted(s)]


@dataclass
class SlopeTree:
    p: int
    M: int
    seed: int
    R0: list
    levels: list  # levels[j] = sorted list of triples
    data: dict  # (j, triple keys) -> TripleData
    attempts: int = 0

    def rho(self, k: int) -> Fraction:
        return Fraction(100 * (self.M - k), self.M) if self.M else Fraction(0)

    def node(self, j: int, triple) -> TripleData:
        return self.data[(j, _tkey(triple))]

    def slopes(self) -> list:
        s = {}
        for (j, _), td in self.data.items():
            for r in td.rstar():
                s[slope_key(r)] = r
        for lvl in self.levels:
            for t in lvl:
                for r in t:
                    s[slope_key(r)] = r
        return [s[k] for k in sorted(s)]

    def validate(self) -> list[str]:
        """Re-check every stored constraint; returns the list of violations."""
        bad = []
        if self.levels and [_tkey(t) for t in self.levels[0]] != [_tkey(_T0(self.p))]:
            bad.append("T0 is not {(0, 1, 2)}")
        for j, lvl in enumerate(self.levels):
            for t in lvl:
                if len({slope_key(r) for r in t}) != 3 or not all(is_proper(r) for r in t):
                    bad.append(f"level {j}: triple {_tjson(t)} not distinct proper")
        for j in range(min(self.M, len(self.levels))):
            nxt = set()
            for t in self.levels[j]:
                td = self.node(j, t)
                r1, r2, r3 = t
                for r4 in td.R3:
                    k = slope_key(r4)
                    try:
                        x, nu = mu_split(r1, r2, r3, r4)
                    except SlopeError as exc:
                        bad.append(f"{_tjson(t)} r4={slope_to_json(r4)}: {exc}")
                        continue
                    if nu != td.nus[k]:
                        bad.append(f"{_tjson(t)} r4={slope_to_json(r4)}: stored nu differs")
                    rep = check_generic_slopes(nu, td.R4[k], extra=[r3, r4])
                    if not rep.ok:
                        bad.append(f"{_tjson(t)} r4={slope_to_json(r4)}: {rep.violation}")
                    elif [slope_key(a) for a in rep.duals] != [slope_key(a) for a in td.duals[k]]:
                        bad.append(f"{_tjson(t)} r4={slope_to_json(r4)}: stored duals differ")
                nxt.update(_tkey(c) for c in td.children())
            if sorted(nxt) != [_tkey(t) for t in self.levels[j + 1]]:
                bad.append(f"level {j + 1} is not the union of the children of level {j}")
        return bad

    def to_json(self) -> dict:
        nodes = []
        for (j, _), td in sorted(self.data.items()):
            nodes.append({
                "level": j,
                "triple": _tjson(td.triple),
                "R_r1r2r3": [slope_to_json(r) for r in td.R3],
                "branches": [
                    {"r4": slope_to_json(r4),
                     "s": slope_to_json(td.nus[slope_key(r4)].s),
                     "R_r1r2r3r4": [slope_to_json(r) for r in td.R4[slope_key(r4)]],
                     "duals": [slope_to_json(r) for r in td.duals[slope_key(r4)]]}
                    for r4 in td.R3
                ],
            })
        return {
            "p": self.p, "M": self.M, "seed": self.seed, "prng": PRNG_NAME,
            "R0": [slope_to_json(r) for r in self.R0],
            "levels": [[_tjson(t) for t in lvl] for lvl in self.levels],
            "rho": [str(self.rho(k)) for k in range(self.M + 1)],
            "nodes": nodes,
        }


def _tkey(t):
    return tuple(slope_key(r) for r in t)


def _tjson(t):
    return [slope_to_json(r) for r in t]


def _T0(p):
    return (FieldElem(0, p), FieldElem(1, p), FieldElem(2, p))


def default_R0(p):
    return [FieldElem(0, p), FieldElem(1, p), FieldElem(2, p), INF]


def _images(p, R0, rng, accept):
    """First Moebius image of R0 passing ``accept``: random draws, then enumeration."""
    tries = 0
    for _ in range(RANDOM_ATTEMPTS):
        tries += 1
        L = Moebius.random_fixing_minus_one(p, rng)
        img = [moebius_apply(L, r) for r in R0]
        out = accept(img)
        if out is not None:
            return img, out, tries
    if p <= EXHAUSTIVE_LIMIT:
        for L in Moebius.all_fixing_minus_one(p):
            tries += 1
            img = [moebius_apply(L, r) for r in R0]
            out = accept(img)
            if out is not None:
                return img, out, tries
    raise FieldTooSmallError(
        f"no Moebius image of R0 avoids the degeneracies in F_{p} (after {tries} candidates)"
    )


def _expand(p, triple, R0, rng) -> tuple[TripleData, int]:
    r1, r2, r3 = triple
    total = 0

    def accept_R3(img):
        nus, xs = {}, {}
        for r4 in img:
            try:
                x, nu = mu_split(r1, r2, r3, r4)
            except SlopeError:
                return None
            nus[slope_key(r4)] = nu
            xs[slope_key(r4)] = x
        if len({slope_key(r) for r in img}) != len(img):
            return None
        return nus, xs

    R3, (nus, xs), t = _images(p, R0, rng, accept_R3)
    total += t
    td = TripleData(triple, R3, nus, xs)
    for r4 in R3:
        k = slope_key(r4)
        nu = nus[k]

        def accept_R4(img, nu=nu, r4=r4):
            rep = check_generic_slopes(nu, img, extra=[r3, r4])
            return rep.duals if rep.ok else None

        R4, duals, t = _images(p, R0, rng, accept_R4)
        total += t
        td.R4[k] = R4
        td.duals[k] = duals
    return td, total


def build_slope_tree(p: int, M: int, seed: int = 0, R0=None) -> SlopeTree:
    """Levels T_0..T_M; R_{r1r2r3} and R_{r1r2r3r4} are stored for levels below M."""
    from ..slope_field import is_prime

    if not is_prime(p) or p == 2:
        raise SlopeError(f"p must be an odd prime, got {p}")
    if M < 0:
        raise ValueError("M must be >= 0")
    R0 = list(R0) if R0 is not None else default_R0(p)
    rng = RandRange(make_rng(seed))
    levels = [[_T0(p)]]
    data = {}
    attempts = 0
    for j in range(M):
        nxt = {}
        for t in levels[j]:
            td, a = _expand(p, t, R0, rng)
            attempts += a
            data[(j, _tkey(t))] = td
            for c in td.children():
                nxt.setdefault(_tkey(c), c)
        levels.append([nxt[k] for k in sorted(nxt)])
    return SlopeTree(p, M, seed, R0, levels, data, attempts)


# ---------------------------------------------------------------------------
# uniform / chunky
# ---------------------------------------------------------------------------


@dataclass
class Uniformity:
    uniform: bool
    k: int
    M: int
    N: int
    size: int  # #tilde V^{(r1)}
    small: int  # elements whose fibre is below the rho_k threshold
    witness: np.ndarray | None  # chunky subset (mask) when not uniform
    witness_values: int = 0

    def to_json(self) -> dict:
        return {"uniform": self.uniform, "k": self.k, "M": self.M, "N": self.N,
                "size": self.size, "small": self.small,
                "witness_size": None if self.witness is None else int(self.witness.sum()),
                "witness_values": self.witness_values}


def small_fibre_mask(keys, k: int, M: int, N: int) -> np.ndarray:
    """``#[v]_{pi_{r2 x r3}} < (#V / N^2) N^{rho_k}`` per element, decided exactly."""
    ids, counts = fiber_index(keys)
    n = int(ids.shape[0])
    # (fibre N^2)^M < n^M N^{100 (M - k)}
    rhs = n ** M * N ** (100 * (M - k))
    small_f = np.array([(int(c) * N * N) ** M < rhs for c in counts], dtype=bool)
    return small_f[ids] if n else np.zeros(0, dtype=bool)


def classify_uniformity(tildeV, triple, k: int, M: int, N: int) -> Uniformity:
    """k-uniform test for ``(r1, r2, r3)`` on the tilde family of slope r1.

    ``tildeV`` is a :class:`~kakeya_lab.configs.SegmentFamily` (or anything with
    ``proj_pair_keys``).  Uniform iff the small-fibre count is at least
    ``N^{-1/M - k/M^2} #V``, i.e. ``count^{M^2} N^{M+k} >= #V^{M^2}``.  Otherwise
    the complement of the small-fibre set is the chunky witness.
    """
    if not 0 <= k <= M or M < 1:
        raise ValueError("need 0 <= k <= M and M >= 1")
    _, r2, r3 = triple
    keys = tildeV.proj_pair_keys(r2, r3)
    n = int(keys.shape[0])
    small = small_fibre_mask(keys, k, M, N)
    cnt = int(small.sum())
    uniform = cnt ** (M * M) * N ** (M + k) >= n ** (M * M)
    if uniform:
        return Uniformity(True, k, M, N, n, cnt, None)
    wit = ~small
    vals = len(fiber_index(keys[wit])[1]) if wit.any() else 0
    # chunky: #values <= N^{2 - rho_k} and #(V \ W) <= N^{-1/M - k/M^2} #V
    assert vals ** M * N ** (100 * (M - k)) <= N ** (2 * M), "chunky value bound"
    assert (n - int(wit.sum())) ** (M * M) * N ** (M + k) <= n ** (M * M), "chunky size bound"
    return Uniformity(False, k, M, N, n, cnt, wit, vals)
