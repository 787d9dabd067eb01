"""Six-slices reduction: from a shaded line family to an SD instance.

Heights are integers in units of 1/N.  Every pigeonhole step keeps the count
it used and the order the argument predicts for it, with the number of grid
heights ``H`` in place of N and the density of the refined shading on the
surviving lines in place of lambda.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .. import kernels
from ..certificate import Certificate
from ..configs import Config
from ..slope_field import INF
from ..sd_engine.instance import SdInstance
from .bush import refined_shading, sep_bounds
from .geometry import GridError, LineFamily
from .shading import Shading, TwoEndsParams, two_ends_check
from .slices import slice_extract

R_WINDOW = 4  # |r(t)| in [1/4, 4]
COUNT_SLACK = 16  # "within a factor 16 of the predicted order"
DUAL_TOL = 4  # |s/r_i - 1/r'_i - 1| <= DUAL_TOL / N
MULTIPLICITY = 4  # pi_(-1) fibres of the produced G


class BushBranchError(GridError):
    """Density too small for the six-slices argument; the bush bound applies."""


class PigeonholeError(GridError):
    pass


def slice_slope(t, t1, t2) -> Fraction:
    """r(t) = (t - t1) / (t2 - t)."""
    t, t1, t2 = Fraction(t), Fraction(t1), Fraction(t2)
    if t == t2:
        raise GridError("r(t) is undefined at t = t2")
    return (t - t1) / (t2 - t)


def round_half_down(x: Fraction) -> int:
    """Nearest integer, ties toward -infinity."""
    return math.ceil(x - Fraction(1, 2))


def s_exact(t, tp, t1, t2) -> Fraction:
    r, rp = slice_slope(t, t1, t2), slice_slope(tp, t1, t2)
    if rp == 0:
        raise GridError("r(t') = 0: t' coincides with t1")
    return r + r / rp


def s_value(t, tp, t1, t2, N: int) -> Fraction:
    """s(t, t') rounded to the grid N^{-1} Z (nearest, ties down)."""
    return Fraction(round_half_down(s_exact(t, tp, t1, t2) * N), N)


@dataclass
class SixSlicesResult:
    slices: dict  # t1..t6 in grid units
    d: Fraction
    instance: SdInstance
    certificate: Certificate
    grid_projection_counts: dict
    pi_minus1_max_fibre: int


def _ok_r(t, t1, t2, lo, hi):
    if not (lo <= abs(t - t1) <= hi and lo <= abs(t - t2) <= hi):
        return False
    r = abs(slice_slope(t, t1, t2))
    return Fraction(1, R_WINDOW) <= r <= R_WINDOW


def _dyadic_level(x: Fraction) -> int:
    """floor(log2 x) for x > 0."""
    k = 0
    while Fraction(2) ** k > x:
        k -= 1
    while Fraction(2) ** (k + 1) <= x:
        k += 1
    return k


def six_slices_to_sd(F: LineFamily, Y: Shading, seed: int = 0,
                     params: TwoEndsParams = TwoEndsParams()) -> SixSlicesResult:
    """Run the six-slices pigeonhole chain; every tie is broken lexicographically.

    The seed is recorded only; the construction is deterministic.
    """
    n, N = F.n, F.N
    lam = Y.mean_density()
    if lam < N ** (-1 / 8):
        raise BushBranchError(f"lambda = {lam:.4g} < N^(-1/8) = {N ** (-1 / 8):.4g}: the bush branch applies")
    te = two_ends_check(F, Y, params)
    if not te["ok"]:
        raise GridError("two-ends condition fails")
    E, mu = Y.union()
    ss = slice_extract(E, mu, N, F.params)
    H, k = ss.H, ss.k
    cert = Certificate("six_slices")
    cert.data.update({"n": n, "N": N, "seed": seed, "lines": len(F), "lambda": lam, "H": H, "k": k,
                      "slices_structure": ss.to_json()})

    def fail(step):
        raise PigeonholeError(f"pigeonhole step failed: {step}")

    # refined shading and T'
    Yp = refined_shading(F, Y, ss)
    sizes = np.array([len(s) for s in Yp])
    avg = sizes.sum() / len(F)
    slack = F.params.slack
    Tp = [i for i in range(len(F)) if sizes[i] > 0 and avg <= slack * sizes[i] and sizes[i] <= slack * avg]
    if not Tp:
        fail("T' (lines where Y' has the typical density) is empty")
    # density of Y' on T': surviving heights over the heights each line meets
    hts = {i: np.unique(F.lines[i].points[Yp[i], -1]) for i in Tp}
    lamp = sum(Fraction(len(hts[i]), len(np.unique(F.lines[i].heights()))) for i in Tp) / len(Tp)
    cert.data["lambda_refined"] = float(lamp)
    cert.measure("mass(Y') ~ mass(Y)", {"mp": int(sizes.sum()), "m": Y.mass}, "mp", "m")
    cert.measure("#T' ~ #T", {"Tp": len(Tp), "T": len(F)}, "Tp", "T")

    lo, hi = sep_bounds(N)
    heights = hts
    # P(T): pairs (t1, t2) whose Q-count reaches lambda^2 H^2 / COUNT_SLACK
    thrQ = lamp ** 2 * H * H / COUNT_SLACK
    Ps = {}
    pair_hist: dict = {}
    for i in Tp:
        h = heights[i]
        Q = kernels.quad_counts(h, lo, hi, R_WINDOW)
        a, b = np.nonzero(Q >= thrQ) if len(h) else (np.zeros(0, int), np.zeros(0, int))
        Ps[i] = set(zip(h[a].tolist(), h[b].tolist()))
        for pr in Ps[i]:
            pair_hist[pr] = pair_hist.get(pr, 0) + 1
    sumP = sum(len(v) for v in Ps.values())
    cert.measure("pigeonhole P(T): mean #P(T) ~ lambda^2 N^2", {"P": Fraction(sumP, len(Tp)), "lam": lamp, "H": H},
                 "P", (("lam", 2), ("H", 2)), note="pigeonhole")
    if not pair_hist:
        fail("no line has a popular slice pair (all P(T) empty)")
    (t1, t2), nT2 = min(pair_hist.items(), key=lambda kv: (-kv[1], kv[0]))
    S = [int(t) for t in ss.S]
    cert.add("tpppp-card: #T'' #S^2 >= sum #P(T)", {"T2": nT2, "S": len(S), "sumP": sumP},
             (("T2", 1), ("S", 2)), ">=", "sumP")
    cert.measure("pigeonhole T'': #T'' ~ 2^(2k) lambda^2 #T", {"T2": nT2, "lam": lamp, "T": len(F)},
                 "T2", ((Fraction(2) ** (2 * k), 1), ("lam", 2), ("T", 1)), note="pigeonhole")
    T2 = [i for i in Tp if (t1, t2) in Ps[i]]

    Sp = [t for t in S if _ok_r(t, t1, t2, lo, hi)]
    spos = set(Sp)
    r = {t: slice_slope(t, t1, t2) for t in Sp}

    def skey(t, tp):
        return round_half_down((r[t] + r[t] / r[tp]) * N)

    # per-line Q pairs grouped by s
    dmin = lamp ** 2 / COUNT_SLACK
    dmin_grid = math.ceil(dmin * N)
    lvl = np.array([_dyadic_level(Fraction(x, N)) if x else 0 for x in range(2 * hi + 1)], dtype=np.int64)

    def quads_of(ts):
        """s-congruent quadruples of distinct heights from separated pairs of ``ts``."""
        P = [(t3, t4) for t3 in ts for t4 in ts if lo <= abs(t3 - t4) <= hi]
        if not P:
            return np.zeros((0, 4), dtype=np.int64), 0
        P = np.array(P, dtype=np.int64)
        K = np.array([skey(int(x), int(y)) for x, y in P], dtype=np.int64)
        order = np.argsort(K, kind="stable")
        P, K = P[order], K[order]
        _, starts, cnt = np.unique(K, return_index=True, return_counts=True)
        chunks = []
        for st, c in zip(starts, cnt):
            g = P[st:st + c]
            i, j = np.meshgrid(np.arange(c), np.arange(c), indexing="ij")
            chunks.append(np.concatenate([g[i.ravel()], g[j.ravel()]], axis=1))
        Qd = np.concatenate(chunks)
        distinct = ((Qd[:, 0] != Qd[:, 2]) & (Qd[:, 0] != Qd[:, 3])
                    & (Qd[:, 1] != Qd[:, 2]) & (Qd[:, 1] != Qd[:, 3]))
        return Qd[distinct], int((cnt.astype(np.int64) ** 2).sum())

    quads_by_T: dict = {}
    cauchy_total = 0
    for i in T2:
        Qd, tot = quads_of([t for t in heights[i].tolist() if t in spos])
        quads_by_T[i] = Qd
        cauchy_total += tot
    cert.measure("cauchy: quadruples with equal s ~ lambda^4 N^3 per line",
                 {"q": Fraction(cauchy_total, len(T2)), "lam": lamp, "H": H}, "q", (("lam", 4), ("H", 3)),
                 note="pigeonhole")
    # |t3 - t5| >~ lambda^2, then dyadic pigeonholing on d and on the per-line counts
    per_d: dict = {}
    for i in T2:
        Qd = quads_by_T[i]
        dist = np.abs(Qd[:, 0] - Qd[:, 2])
        keep = dist >= dmin_grid
        levs = lvl[dist[keep]]
        for L in np.unique(levs).tolist():
            per_d.setdefault(L, {})[i] = Qd[keep][levs == L]
    if not per_d:
        fail("no s-congruent quadruples with |t3 - t5| >~ lambda^2")
    dlev = min(per_d, key=lambda L: (-sum(len(v) for v in per_d[L].values()), L))
    d = Fraction(2) ** dlev
    byT = per_d[dlev]
    lev_T: dict = {}
    for i, qs in byT.items():
        lev_T.setdefault(len(qs).bit_length() - 1, []).append(i)
    best = min(lev_T, key=lambda L: (-sum(len(byT[i]) for i in lev_T[L]), L))
    T3 = sorted(lev_T[best])
    sum3 = sum(len(byT[i]) for i in T3)
    cert.data["d"] = str(d)
    cert.measure("pigeonhole T''': quadruples at scale d per line ~ lambda^4 N^3",
                 {"q": Fraction(sum3, len(T3)), "lam": lamp, "H": H}, "q", (("lam", 4), ("H", 3)),
                 note="pigeonhole")
    # Delta and the final pigeonhole
    Dq, _ = quads_of(Sp)
    dist = np.abs(Dq[:, 0] - Dq[:, 2])
    delta = int(((dist >= dmin_grid) & (lvl[np.minimum(dist, 2 * hi)] == dlev)).sum())
    S_nom = Fraction(2) ** (-k) * H
    # dN counts grid distances |t3 - t5| ~ d, so it keeps N rather than H
    cert.measure("pigeonhole Delta: #Delta ~ (2^-k N)^2 (d N)", {"Delta": delta, "S": S_nom, "d": d, "N": N},
                 "Delta", (("S", 2), ("d", 1), ("N", 1)), note="pigeonhole")
    allq = np.concatenate([byT[i] for i in T3])
    uq, ucnt = np.unique(allq, axis=0, return_counts=True)
    top = int(np.argmax(ucnt))  # first maximum = lexicographically least
    quad, nT4 = tuple(int(x) for x in uq[top]), int(ucnt[top])
    cert.add("t5-card: #T'''' #Delta >= sum over T''' of its quadruples",
             {"T4": nT4, "Delta": delta, "sum": sum3}, ("T4", "Delta"), ">=", "sum")
    cert.measure("pigeonhole T'''': #T'''' ~ lambda^6 2^(4k) #T / d (times H/N)",
                 {"T4": nT4, "lam": lamp, "T": len(F), "d": d, "H": H, "N": N}, "T4",
                 ((Fraction(2) ** (4 * k), 1), ("lam", 6), ("T", 1), ("d", -1), ("H", 1), ("N", -1)),
                 note="pigeonhole")
    T4 = [i for i in T3 if (byT[i] == np.array(quad)).all(axis=1).any()]
    t3, t4, t5, t6 = quad

    # G from the first and last slices
    pairs = set()
    for i in T4:
        L = F.lines[i]
        A = [tuple(x) for x in L.at_height(t1)[:, :-1].tolist()]
        B = [tuple(x) for x in L.at_height(t2)[:, :-1].tolist()]
        for a in A:
            for b in B:
                pairs.add((a, b))
    pairs = sorted(pairs)
    nG = len(pairs)
    cert.measure("pigeonhole G: each line contributes ~ 1 element (#G ~ #T'''')",
                 {"G": nG, "T4": nT4}, "G", "T4", note="pigeonhole")
    fib: dict = {}
    for a, b in pairs:
        key = tuple(x - y for x, y in zip(a, b))
        fib[key] = fib.get(key, 0) + 1
    mult = max(fib.values()) if fib else 0
    cert.add("pi_(-1) essentially injective: max fibre <= 4", {"m": mult, "C": MULTIPLICITY}, "m", "<=", "C",
             kind="claim")
    s = Fraction(skey(t3, t4), N)
    r1, r2, r1p, r2p = r[t3], r[t5], r[t4], r[t6]
    for lab, ri, rip in (("1", r1, r1p), ("2", r2, r2p)):
        dev = abs(s / ri - 1 / rip - 1)
        cert.add(f"near-dual slope {lab}: |s/r_{lab} - 1/r'_{lab} - 1| <= 4/N", {"dev": dev, "N": N},
                 "dev", "<=", ((DUAL_TOL, 1), ("N", -1)))
    for lab, ri in (("r1", r1), ("r2", r2), ("r1'", r1p), ("r2'", r2p)):
        cert.add(f"|{lab}| ~ 1 (>= 1/4)", {"r": abs(ri)}, "r", ">=", ((Fraction(1, 4), 1),))
        cert.add(f"|{lab}| ~ 1 (<= 4)", {"r": abs(ri)}, "r", "<=", ((4, 1),))
    cert.measure("|r1 - r2| ~ d", {"diff": abs(r1 - r2), "d": d}, "diff", "d")
    # grid projections: pi_r(a, b) stands for the point of the line at height t
    Ep_n = len(ss.E_prime)
    grid_counts = {}
    for lab, t in (("0", t1), ("r1", t3), ("r2", t5), ("r1'", t4), ("r2'", t6), ("inf", t2)):
        vals = set()
        for a, b in pairs:
            w = Fraction(t - t1, t2 - t1)
            vals.add(tuple(round_half_down((1 - w) * x + w * y) for x, y in zip(a, b)))
        grid_counts[lab] = len(vals)
        cert.measure(f"#pi_{lab}(G) ~ 2^k #E' / N (slice bound)",
                     {"proj": len(vals), "Ep": Ep_n, "H": H}, "proj",
                     ((Fraction(2) ** k, 1), ("Ep", 1), ("H", -1)))
    loss = float(d) ** ((1 - n) / 4)
    cert.data.update({"t": [t1, t2, t3, t4, t5, t6], "s": str(s), "G": nG, "multiplicity": mult,
                      "loss_d_power": loss, "T_counts": {"Tp": len(Tp), "T2": nT2, "T3": len(T3), "T4": nT4}})
    cert.notes.append(f"multiplicity allowance d^((1-n)/4) = {loss:.6g}")
    G = Config(None, [([Fraction(x, N) for x in a], [Fraction(y, N) for y in b]) for a, b in pairs],
               d=n - 1, multiplicity=max(mult, 1))
    inst = SdInstance(G, [Fraction(0), r1, r2, r1p, r2p, INF],
                      meta={"source": "six_slices", "s": str(s), "N": N})
    slices = {"t1": t1, "t2": t2, "t3": t3, "t4": t4, "t5": t5, "t6": t6}
    return SixSlicesResult(slices, d, inst, cert, grid_counts, mult)
