"""Two-slices ("bush") lower bound for #E and the maximal-function experiment."""

from __future__ import annotations

import math
from fractions import Fraction

import numpy as np

from ..certificate import Certificate
from .geometry import GridError, LineFamily, cone_count, line_index
from .shading import Shading, TwoEndsParams, two_ends_check
from .slices import SliceStructure, slice_extract

BUSH_CONSTANT = Fraction(1, 16)
SEP_LO = Fraction(1, 4)  # |t - t'| ~ 1 means |t - t'| in [1/4, 4]
SEP_HI = Fraction(4)


def sep_bounds(N: int) -> tuple[int, int]:
    """Separation window in grid units."""
    return math.ceil(SEP_LO * N), math.floor(SEP_HI * N)


def refined_shading(F: LineFamily, Y: Shading, ss: SliceStructure) -> list:
    """Y'(T) = Y(T) & E' & slices(S), as member-index arrays."""
    keep = {tuple(x) for x in ss.E_prime.tolist()}
    S = set(int(t) for t in ss.S)
    out = []
    for i, L in enumerate(F.lines):
        idx = Y.sets[i]
        P = L.points[idx]
        m = np.array([tuple(x) in keep and int(x[-1]) in S for x in P.tolist()], dtype=bool)
        out.append(idx[m] if len(idx) else idx)
    return out


def _dense_lines(F, Yp, slack):
    sizes = np.array([len(s) for s in Yp])
    if sizes.sum() == 0:
        return []
    avg = sizes.sum() / len(F)
    return [i for i in range(len(F)) if sizes[i] * slack >= avg and sizes[i] > 0]


def bush_certificate(F: LineFamily, Y: Shading, params: TwoEndsParams = TwoEndsParams()) -> Certificate:
    te = two_ends_check(F, Y, params)
    if not te["ok"]:
        raise GridError("two-ends condition fails; the bush argument needs it")
    N = F.N
    E, mu = Y.union()
    if len(E) == 0:
        raise GridError("empty shading")
    lam = Y.mean_density()
    lamN = Fraction(Y.mass, len(F))  # mean #Y(T), the "lambda N" of the argument
    ss = slice_extract(E, mu, N, F.params)
    Yp = refined_shading(F, Y, ss)
    Tp = _dense_lines(F, Yp, F.params.slack)
    lo, hi = sep_bounds(N)
    cert = Certificate("bush")
    cert.data.update({"n": F.n, "N": N, "lines": len(F), "lambda": lam, "slices": ss.to_json(),
                      "two_ends_worst": te["worst"], "sigma": str(params.sigma)})
    cert.add("T' nonempty", {"Tp": len(Tp), "one": 1}, "Tp", ">=", "one")
    if not Tp:
        return cert
    # easy-two-ends triple count and the pair histogram
    pair_count: dict = {}
    total = 0
    for i in Tp:
        h = np.unique(F.lines[i].points[Yp[i], -1])
        d = np.abs(h[:, None] - h[None, :])
        a, b = np.nonzero((d >= lo) & (d <= hi))
        total += len(a)
        for t1, t2 in zip(h[a].tolist(), h[b].tolist()):
            pair_count[(t1, t2)] = pair_count.get((t1, t2), 0) + 1
    S = [int(t) for t in ss.S]
    P2 = sum(1 for t1 in S for t2 in S if lo <= abs(t1 - t2) <= hi)
    cert.measure("easy-two-ends: #{(T, t1, t2)} ~ (lambda N)^2 #T'",
                 {"triples": total, "lamN": lamN, "T": len(Tp)}, "triples", (("lamN", 2), ("T", 1)))
    cert.add("separated slice pairs exist", {"triples": total, "one": 1}, "triples", ">=", "one")
    if total == 0:
        return cert
    (t1, t2), m = min(pair_count.items(), key=lambda kv: (-kv[1], kv[0]))
    cert.data.update({"t1": t1, "t2": t2})
    cert.add("pigeonhole: max pair count * #(separated pairs in S^2) >= triples",
             {"m": m, "P2": P2, "triples": total}, ("m", "P2"), ">=", "triples")
    # multiplicity of lines through a pair of points on the two slices
    Ep = ss.E_prime
    s1 = Ep[Ep[:, -1] == t1]
    s2 = Ep[Ep[:, -1] == t2]
    idx = line_index(LineFamily(F.n, N, [F.lines[i] for i in Tp], F.params))
    mult, cone = 0, 0
    for x1 in map(tuple, s1.tolist()):
        a = set(idx.get(x1, []))
        if not a:
            continue
        for x2 in map(tuple, s2.tolist()):
            c = len(a & set(idx.get(x2, [])))
            if c > mult:
                mult = c
                cone = cone_count(F, x1, x2)
    mult = max(mult, 1)
    e1, e2 = len(s1), len(s2)
    cert.add("lines through a slice pair: count <= #slice(t1) #slice(t2) * max multiplicity",
             {"m": m, "e1": e1, "e2": e2, "mult": mult}, "m", "<=", ("e1", "e2", "mult"))
    cert.add("multiplicity bounded by the admissible direction cone",
             {"mult": mult, "cone": max(cone, 1)}, "mult", "<=", "cone")
    nE = len(E)
    cert.add("#E >= #slice(t1) + #slice(t2)", {"E": nE, "s": e1 + e2}, "E", ">=", "s")
    cert.add("(e1 + e2)^2 >= 4 e1 e2", {"s": e1 + e2, "e1": e1, "e2": e2}, (("s", 2),), ">=", ((4, 1), ("e1", 1), ("e2", 1)))
    cert.measure("#E ~ lambda N #T^(1/2)", {"E": nE, "lamN": lamN, "T": len(F)}, "E",
                 (("lamN", 1), ("T", Fraction(1, 2))))
    cert.add("#E >= c lambda N #T^(1/2) with c = 1/16", {"E": nE, "lamN": lamN, "T": len(F)}, "E", ">=",
             ((BUSH_CONSTANT, 1), ("lamN", 1), ("T", Fraction(1, 2))), kind="claim")
    c = nE / (float(lamN) * math.sqrt(len(F)))
    small = lam < N ** (-1 / 8)
    cert.data.update({"realized_c": c, "lambda_small": small, "E": nE})
    if small:
        cert.notes.append("lambda < N^(-1/8): this branch alone gives the restricted weak-type bound")
    return cert


def maximal_experiment(F: LineFamily, Y: Shading) -> dict:
    """#E against lambda^((4n+3)/7) N #T^(4/7) and N lambda^((2n+14)/7) #T^(4/7)."""
    n, N = F.n, F.N
    E, _ = Y.union()
    lam = Y.mean_density()
    T = len(F)
    rhs1 = lam ** ((4 * n + 3) / 7) * N * T ** (4 / 7)
    rhs2 = N * lam ** ((2 * n + 14) / 7) * T ** (4 / 7)
    return {
        "n": n, "N": N, "lines": T, "lambda": lam, "E": int(len(E)),
        "rhs_rwt": rhs1, "rhs_six_slices": rhs2,
        "ratio_rwt": len(E) / rhs1 if rhs1 else math.inf,
        "ratio_six_slices": len(E) / rhs2 if rhs2 else math.inf,
    }
