"""Certificate pipelines for the basic iteration.

Each pipeline replays a counting argument on a concrete G: every set it
builds is materialised, every count is exact, and every inequality the
argument uses becomes a certificate step with an explicit constant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from ..certificate import Certificate
from ..configs import (
    Config,
    SegmentFamily,
    build_segments,
    check_determined,
    fiber_index,
    nu_keys,
    popular_mask,
)
from ..slope_field import (
    INF,
    FieldElem,
    NuParams,
    SlopeError,
    check_generic_slopes,
    slope_to_json,
)
from .instance import InstanceError

THREE_HALVES_NOTE = (
    "the fibre chain gives #V <= sqrt(8) * N^(5/2); a bound of N^(3/2) on #V would "
    "not combine with the pair count #V >= #G^2/N to give N^(7/4), so N^(5/2) is used"
)


def _F(p, v):
    return FieldElem(v % p, p)


def _require(G: Config):
    if G.p is None:
        raise InstanceError("pipelines need a finite field configuration")
    if len(G) == 0:
        raise InstanceError("empty configuration")


@dataclass
class ChainResult:
    V: SegmentFamily
    v2: int
    fiber: int
    triples: int


def _fiber_chain(cert: Certificate, G: Config, nu: NuParams, pairs, N: int) -> ChainResult:
    """The two-pass popularity argument shared by both Theorem-type pipelines.

    ``pairs = [(r1, r1'), (r2, r2')]``: nu must be determined by both double
    projections and V parameterized by each of them.
    """
    V = build_segments(G, nu.r0)
    nV = len(V)
    nG = len(G)
    cert.add("pair count: #V >= #G^2 / N", {"V": nV, "G": nG, "N": N},
             "V", ">=", (("G", 2), ("N", -1)))
    (ra, rap), (rb, rbp) = pairs
    ka = V.proj_pair_keys(ra, rap)
    kb = V.proj_pair_keys(rb, rbp)
    nuk = nu_keys(nu, V)
    cert.add("nu determined by the first double projection",
             {"determined": int(check_determined(nuk, [ka])), "one": 1}, "determined", "==", "one",
             kind="identity")
    cert.add("nu determined by the second double projection",
             {"determined": int(check_determined(nuk, [kb])), "one": 1}, "determined", "==", "one",
             kind="identity")
    ident = np.arange(nV)
    cert.add("V parameterized by (nu, pi_rinf o gamma_1)",
             {"determined": int(check_determined(ident, [nuk, V.gamma_keys(nu.r_inf, 0)])), "one": 1},
             "determined", "==", "one", kind="identity")

    cod = N * N
    m1 = popular_mask(ka, cod)
    V1 = np.nonzero(m1)[0]
    cert.add("first popularity pass keeps more than half", {"V1": len(V1), "V": nV},
             (("V1", 1), (2, 1)), ">", "V")
    ids_b, counts_b = fiber_index(kb[V1])
    m2 = 2 * cod * counts_b[ids_b] >= len(V1)
    V2 = V1[m2]
    cert.add("second popularity pass keeps more than half", {"V2": len(V2), "V1": len(V1)},
             (("V2", 1), (2, 1)), ">", "V1")
    v2 = int(V2[0])
    # fibre of v2 under the second projection, inside V1
    pos_v2 = int(np.searchsorted(V1, v2))
    same_b = V1[ids_b == ids_b[pos_v2]]
    fb = len(same_b)
    cert.add("fibre of v2 in V1 under the second projection: >= #V1 / (2 N^2)",
             {"F2": fb, "V1": len(V1), "N": N}, "F2", ">=", (("V1", 1), (2, -1), ("N", -2)))
    ids_a, counts_a = fiber_index(ka)
    fa = counts_a[ids_a[same_b]]
    min_fa = int(fa.min())
    cert.add("each such v1 has a first-projection fibre in V of size >= #V / (2 N^2)",
             {"F1min": min_fa, "V": nV, "N": N}, "F1min", ">=", (("V", 1), (2, -1), ("N", -2)))
    T = int(fa.sum())
    cert.add("chains (v1, v0): T >= #V^2 / (8 N^4)", {"T": T, "V": nV, "N": N},
             "T", ">=", (("V", 2), (8, -1), ("N", -4)))
    # the v0 are distinct across chains and all share nu(v2)
    v0 = np.nonzero(np.isin(ids_a, ids_a[same_b]))[0]
    cert.add("distinct v0 over all chains equals T (co-ordinate injectivity)",
             {"distinct_v0": len(v0), "T": T}, "distinct_v0", "==", "T", kind="identity")
    fnu = int(np.count_nonzero(nuk == nuk[v2]))
    cert.add("every v0 lies in the nu-fibre of v2", {"nu_fiber": fnu, "distinct_v0": len(v0),
             "outside": int(np.count_nonzero(nuk[v0] != nuk[v2])), "zero": 0},
             "outside", "==", "zero", kind="identity")
    cert.add("nu-fibre lower bound: #[v2]_nu >= #V^2 / (8 N^4)", {"nu_fiber": fnu, "V": nV, "N": N},
             "nu_fiber", ">=", (("V", 2), (8, -1), ("N", -4)))
    n_inf = G.proj_count(nu.r_inf)
    cert.add("nu-fibre upper bound: #[v2]_nu <= #pi_rinf(G)", {"nu_fiber": fnu, "proj_inf": n_inf},
             "nu_fiber", "<=", "proj_inf")
    cert.add("#pi_rinf(G) <= N", {"proj_inf": n_inf, "N": N}, "proj_inf", "<=", "N")
    return ChainResult(V, v2, fnu, T)


def _conclude(cert: Certificate, nG: int, nV: int, N: int, final_C: Fraction | int):
    cert.add("segment bound: #V <= sqrt(8) N^(5/2)", {"V": nV, "N": N},
             "V", "<=", ((8, Fraction(1, 2)), ("N", Fraction(5, 2))))
    cert.add("configuration bound: #G <= 8^(1/4) N^(7/4)", {"G": nG, "N": N},
             "G", "<=", ((8, Fraction(1, 4)), ("N", Fraction(7, 4))))
    if final_C is not None:
        cert.add(f"safe bound: #G <= {final_C} N^(7/4)", {"G": nG, "N": N},
                 "G", "<=", ((final_C, 1), ("N", Fraction(7, 4))))
    cert.notes.append(THREE_HALVES_NOTE)
    if N >= 2:
        cert.data["realized_exponent"] = math.log(nG) / math.log(N)
    cert.data["target_exponent"] = "7/4"


def pipeline_012inf(G: Config) -> Certificate:
    """Replay of SD({0,1,2,inf}, 7/4) on G."""
    _require(G)
    p = G.p
    R = [_F(p, 0), _F(p, 1), _F(p, 2), INF]
    N = G.max_proj(R)
    nu = NuParams(_F(p, 0), INF, _F(p, 2))  # nu = a + 2 b1 - b2
    cert = Certificate("sd_012inf")
    cert.data.update({"p": p, "N": N, "G": len(G), "slopes": [slope_to_json(r) for r in R]})
    ch = _fiber_chain(cert, G, nu, [(R[1], R[1]), (R[2], INF)], N)
    _conclude(cert, len(G), len(ch.V), N, 2)
    cert.data.update({"V": len(ch.V), "nu_fiber": ch.fiber})
    return cert


def pipeline_conviviality(G: Config, nu: NuParams, r1, r2) -> Certificate:
    """Same chain with general r0, r_inf, s and the duals of r1, r2."""
    _require(G)
    rep = check_generic_slopes(nu, [r1, r2])
    if not rep.ok:
        raise SlopeError(f"slope degeneracy: {rep.violation}")
    r1p, r2p = rep.duals
    R = [nu.r0, r1, r1p, r2, r2p, nu.r_inf]
    N = G.max_proj(R)
    cert = Certificate("sd_conviviality")
    cert.data.update({"p": G.p, "N": N, "G": len(G), "slopes": [slope_to_json(r) for r in R]})
    ch = _fiber_chain(cert, G, nu, [(r1, r1p), (r2, r2p)], N)
    _conclude(cert, len(G), len(ch.V), N, None)
    cert.data.update({"V": len(ch.V), "nu_fiber": ch.fiber})
    return cert


# ---------------------------------------------------------------------------
# substructure and one step of the basic iteration
# ---------------------------------------------------------------------------


@dataclass
class Substructure:
    nu0: int
    G_nu0: Config
    G_sub: Config
    V: int
    N: int
    k: int
    proj: list  # #pi_rj(G_sub)
    realized_C: list
    certificate: Certificate


def substructure(G: Config, nu: NuParams, rs) -> tuple:
    """Find nu0 and the refinement G'_{nu0}; returns ``(nu0, G_sub, cert)``.

    nu0 maximises ``#(V' & nu^{-1}(nu0))`` (least value on ties), which always
    meets the ``#G_nu0 / 2^k`` refinement threshold.
    """
    s = _substructure(G, nu, rs)
    return s.nu0, s.G_sub, s.certificate


def _substructure(G: Config, nu: NuParams, rs, cert: Certificate | None = None) -> Substructure:
    _require(G)
    rs = list(rs)
    rep = check_generic_slopes(nu, rs)
    if not rep.ok:
        raise SlopeError(f"slope degeneracy: {rep.violation}")
    duals = rep.duals
    k = len(rs)
    slopes = [nu.r0, nu.r_inf] + rs + duals
    N = G.max_proj(slopes)
    cert = cert or Certificate("substructure")
    cert.data.update({"p": G.p, "N": N, "G": len(G), "k": k,
                      "slopes": [slope_to_json(r) for r in slopes]})
    V = build_segments(G, nu.r0)
    nV = len(V)
    nuk = nu_keys(nu, V)
    ids, counts = fiber_index(nuk)
    # G_nu0 = gamma_1(nu^{-1}(nu0)) has the size of the fibre
    g1 = V.pairs[:, 0]
    sizes_g = np.array([len(np.unique(g1[ids == f])) for f in range(len(counts))])
    cert.add("#G_nu0 = #nu^{-1}(nu0) for every nu0",
             {"mismatches": int(np.count_nonzero(sizes_g != counts)), "zero": 0},
             "mismatches", "==", "zero", kind="identity")
    cert.add("g-bound: max #G_nu0 <= N", {"Gnu_max": int(counts.max()), "N": N}, "Gnu_max", "<=", "N")

    mask = np.ones(nV, dtype=bool)
    pair_keys = [V.proj_pair_keys(r, rp) for r, rp in zip(rs, duals)]
    survive_fibre_min = []
    for j, kj in enumerate(pair_keys, 1):
        idx = np.nonzero(mask)[0]
        m = popular_mask(kj[idx], N * N)
        before = len(idx)
        mask[idx[~m]] = False
        cert.add(f"popularity pass {j} keeps more than half", {"after": int(m.sum()), "before": before},
                 (("after", 1), (2, 1)), ">", "before")
        # fibres (in the pre-pass set) of the survivors
        fid, fc = fiber_index(kj[idx])
        survive_fibre_min.append((int(fc[fid[m]].min()) if m.any() else 0, before))
    Vp = np.nonzero(mask)[0]
    cert.add("V' >= #V / 2^k", {"Vp": len(Vp), "V": nV}, (("Vp", 1), (2, k)), ">=", "V")

    inter = np.bincount(ids[Vp], minlength=len(counts))
    # nu0: largest V' intersection, least value on ties (fibres are in value order)
    f0 = int(np.argmax(inter))
    nu0 = int(np.unique(nuk)[f0])
    F = np.nonzero(ids == f0)[0]
    FVp = np.intersect1d(F, Vp)
    G_nu0 = G.subset(np.unique(g1[F]))
    G_sub = G.subset(np.unique(g1[FVp]))
    cert.add("G'_nu0 is a refinement: #G'_nu0 >= #G_nu0 / 2^k",
             {"Gp": len(G_sub), "Gnu0": len(G_nu0)}, (("Gp", 1), (2, k)), ">=", "Gnu0")
    proj, realized = [], []
    for j, (r, rp, kj) in enumerate(zip(rs, duals, pair_keys), 1):
        pj = G_sub.proj_count(r)
        dj = len(fiber_index(kj[FVp])[1])
        cert.add(f"#pi_r{j}(G') <= #pi_(r{j} x r{j}')(V' & F)", {"proj": pj, "dproj": dj},
                 "proj", "<=", "dproj")
        # every value met on V' & F has a fibre inside F of size >= #V / (2^j N^2)
        idsF, cntF = fiber_index(kj[F])
        inS = np.isin(F, FVp)
        fmin = int(cntF[idsF[inS]].min()) if inS.any() else 0
        cert.add(f"fibres in F of values met on V' & F (pass {j}) are >= #V / (2^{j} N^2)",
                 {"fmin": fmin, "V": nV, "N": N}, "fmin", ">=", (("V", 1), (2, -j), ("N", -2)))
        st = cert.add(f"g-smallproj r{j}: #pi_r{j}(G') <= 2^{j} #G_nu0 N^2 / #V",
                      {"proj": pj, "Gnu0": len(G_nu0), "N": N, "V": nV},
                      "proj", "<=", ((2, j), ("Gnu0", 1), ("N", 2), ("V", -1)))
        proj.append(pj)
        realized.append(st.constant)
    cert.data.update({"nu0": nu0, "G_nu0": len(G_nu0), "G_sub": len(G_sub), "V": nV,
                      "realized_C": realized, "duals": [slope_to_json(r) for r in duals]})
    return Substructure(nu0, G_nu0, G_sub, nV, N, k, proj, realized, cert)


def iterate_once(G: Config, nu: NuParams, rs, inner_alpha=2, inner_C=1) -> Certificate:
    """One step SD(beta) => SD((4 beta - 1) / (2 beta)) replayed on G."""
    beta = Fraction(inner_alpha)
    Cin = Fraction(inner_C)
    if not (1 < beta <= 2):
        raise InstanceError("inner exponent must lie in (1, 2]")
    cert = Certificate("basic_iteration")
    sub = _substructure(G, nu, rs, cert)
    k, N, nV = sub.k, sub.N, sub.V
    P = max(sub.proj) if sub.proj else 0
    counts = {"Gp": len(sub.G_sub), "P": P, "Gnu0": len(sub.G_nu0), "V": nV, "N": N, "G": len(G)}
    cert.add("inner hypothesis on G': #G' <= C_in (max_j #pi_rj(G'))^beta", counts,
             "Gp", "<=", ((Cin, 1), ("P", beta)), kind="hypothesis")
    cert.add("max_j #pi_rj(G') <= 2^k #G_nu0 N^2 / #V", counts,
             "P", "<=", ((2, k), ("Gnu0", 1), ("N", 2), ("V", -1)))
    e_v = (3 * beta - 1) / beta
    cV = (Cin, 1 / beta), (2, k * (beta + 1) / beta)
    cert.add(f"#V <= C' N^({e_v})", counts, "V", "<=", cV + (("N", e_v),))
    cert.add("pair count: #V >= #G^2 / N", counts, "V", ">=", (("G", 2), ("N", -1)))
    e_g = (4 * beta - 1) / (2 * beta)
    cG = (Cin, 1 / (2 * beta)), (2, k * (beta + 1) / (2 * beta))
    cert.add(f"#G <= C'' N^({e_g})", counts, "G", "<=", cG + (("N", e_g),))
    cert.data.update({"beta": str(beta), "final_exponent": str(e_g), "segment_exponent": str(e_v),
                      "C_segment": float(Cin) ** float(1 / beta) * 2 ** float(k * (beta + 1) / beta),
                      "C_final": float(Cin) ** float(1 / (2 * beta)) * 2 ** float(k * (beta + 1) / (2 * beta))})
    if N >= 2:
        cert.data["realized_exponent"] = math.log(len(G)) / math.log(N)
    return cert
