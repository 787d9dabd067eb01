"""Replay of the advanced iteration on a concrete G.

The argument descends through the slope tree to a level k with a k-uniform
triple whose children are all (k+1)-chunky, then runs the corner/mu chain.
Steps whose constants the argument leaves implicit (the ``N^{C/M}`` slack)
are recorded as measured relations with their realised constants; every
step with an explicit constant is checked exactly.
"""

from __future__ import annotations

import math
from fractions import Fraction

import numpy as np

from ..certificate import Certificate
from ..configs import (
    Config,
    SegmentFamily,
    check_determined,
    fiber_index,
    joint_keys,
    nu_keys,
    mu_keys,
    CornerFamily,
    popular_mask,
    strong_mask,
)
from ..exponents import advanced_map
from ..slope_field import FieldElem, slope_key, slope_to_json
from .instance import InstanceError
from .slope_tree import SlopeTree, classify_uniformity, small_fibre_mask, _tkey, _tjson


class TildeFamilies:
    """G' (popularity over every slope of R), the X_{g,r} and tilde V^{(r)}."""

    def __init__(self, G: Config, R: list, N: int):
        self.G = G
        self.N = N
        self.R = R
        n = len(G)
        mask = np.ones(n, dtype=bool)
        for r in R:
            idx = np.nonzero(mask)[0]
            keep = popular_mask(G.proj_keys(r)[idx], N)
            mask[idx[~keep]] = False
        self.Gp = mask
        self.xsize = -(-n // (2 * N))  # ceil(#G / (2N))
        self._cache: dict = {}
        self._minx: dict = {}

    def tilde(self, r) -> SegmentFamily:
        k = slope_key(r)
        if k in self._cache:
            return self._cache[k]
        keys = self.G.proj_keys(r)
        ids, counts = fiber_index(keys)
        chunks = []
        min_x = None
        for f in range(len(counts)):
            members = np.nonzero(ids == f)[0]  # canonical (point) order
            X = members[: min(len(members), self.xsize)]
            heads = members[self.Gp[members]]
            if len(heads) == 0:
                continue
            min_x = len(X) if min_x is None else min(min_x, len(X))
            a, b = np.meshgrid(heads, X, indexing="ij")
            chunks.append(np.stack([a.ravel(), b.ravel()], axis=1))
        pairs = np.concatenate(chunks).astype(np.int64) if chunks else np.zeros((0, 2), dtype=np.int64)
        pairs = pairs[np.lexsort((pairs[:, 1], pairs[:, 0]))]
        fam = SegmentFamily(self.G, r, pairs)
        self._cache[k] = fam
        self._minx[k] = min_x or 0
        return fam

    def min_xsize(self, r) -> int:
        self.tilde(r)
        return self._minx[slope_key(r)]


def _descend(tree: SlopeTree, fam: TildeFamilies, N: int):
    """Return ``(k, triple, uniformity_of_triple, chunky_witnesses_at_k+1, log)``."""
    M = tree.M
    witnesses: dict = {}  # triple key at level k+1 -> mask on tilde V^{(r1)}
    log = []
    for k in range(M - 1, -1, -1):
        found = None
        level_wit = {}
        for t in tree.levels[k]:
            u = classify_uniformity(fam.tilde(t[0]), t, k, M, N)
            if u.uniform:
                found = (t, u)
                break
            level_wit[_tkey(t)] = u
        if found is not None:
            log.append({"k": k, "uniform_triple": _tjson(found[0]), "checked": len(tree.levels[k])})
            return k, found[0], found[1], witnesses, log
        log.append({"k": k, "uniform_triple": None, "checked": len(tree.levels[k])})
        witnesses = level_wit
    return None, None, None, witnesses, log


def pipeline_advanced(G: Config, tree: SlopeTree, inner_alpha=Fraction(7, 4), inner_C=1) -> Certificate:
    if G.p is None or G.p != tree.p:
        raise InstanceError("configuration and slope tree must share the modulus")
    if len(G) == 0:
        raise InstanceError("empty configuration")
    if tree.M < 1:
        raise InstanceError("the advanced pipeline needs a tree with M >= 1")
    beta = Fraction(inner_alpha)
    Cin = Fraction(inner_C)
    if not (1 < beta <= 2):
        raise InstanceError("inner exponent must lie in (1, 2]")
    G = G.sorted()
    M = tree.M
    R = tree.slopes()
    N = G.max_proj(R)
    nG = len(G)
    target = advanced_map(beta)
    cert = Certificate("advanced_iteration")
    cert.data.update({"p": G.p, "M": M, "seed": tree.seed, "G": nG, "N": N, "slopes": len(R),
                      "beta": str(beta), "target_exponent": str(target)})
    p = G.p
    r0, r1_ = FieldElem(0, p), FieldElem(1, p)
    if N == 1:
        c = {"G": nG, "a": G.proj_count(r0), "b": G.proj_count(r1_)}
        cert.add("two projections parameterize G: #G <= #pi_0(G) #pi_1(G)", c, "G", "<=", ("a", "b"))
        cert.notes.append("N = 1: the configuration is a single point; the descent is vacuous")
        cert.data["k"] = None
        return cert

    fam = TildeFamilies(G, R, N)
    nGp = int(fam.Gp.sum())
    cert.add("G' = iterated popularity over R: #G' 2^|R| > #G", {"Gp": nGp, "G": nG, "R": len(R)},
             (("Gp", 1), (2, len(R))), ">", "G")

    k, triple, unif, wit, log = _descend(tree, fam, N)
    cert.data["descent"] = log
    cert.add("descent finds a k-uniform triple", {"found": int(k is not None), "one": 1},
             "found", "==", "one", kind="identity")
    if k is None:
        return cert
    r1, r2, r3 = triple
    rho_k = tree.rho(k)
    e_k = Fraction(1, M) + Fraction(k, M * M)
    e_k1 = Fraction(1, M) + Fraction(k + 1, M * M)
    cert.data.update({"k": k, "triple": _tjson(triple), "rho_k": str(rho_k)})
    V1 = fam.tilde(r1)
    V2 = fam.tilde(r2)
    n1, n2 = len(V1), len(V2)
    for name, V, r in (("V1", V1, r1), ("V2", V2, r2)):
        cert.measure(f"tilde-V card ({name}, r={slope_to_json(r)}): #V ~ #G^2 / N",
                     {name: len(V), "G": nG, "N": N}, name, (("G", 2), ("N", -1)))
        cert.measure(f"X sets for r={slope_to_json(r)}: min #X_(g,r) ~ #G / N",
                     {"Xmin": fam.min_xsize(r), "G": nG, "N": N}, "Xmin", (("G", 1), ("N", -1)))
    cert.add("k-uniform: small-fibre count >= N^(-1/M - k/M^2) #V1",
             {"small": unif.small, "V1": n1, "N": N}, "small", ">=", (("N", -e_k), ("V1", 1)))

    td = tree.node(k, triple)
    children = []
    seen = set()
    for c in td.children():
        if _tkey(c) not in seen:
            seen.add(_tkey(c))
            children.append(c)
    s = len(children)

    # chunky witnesses of the children, and V'
    Vp = np.ones(n2, dtype=bool)
    images = {}
    rho_k1 = tree.rho(k + 1)
    for c in children:
        if k + 1 == M:
            W = np.ones(n2, dtype=bool)
        else:
            W = wit[_tkey(c)].witness
        keys = V2.proj_pair_keys(c[1], c[2])
        vals = len(fiber_index(keys[W])[1]) if W.any() else 0
        images[_tkey(c)] = max(vals, 1)
        cert.add(f"v-smallproj {_tjson(c)}: #pi(W) <= N^(2 - rho_(k+1))", {"vals": vals, "N": N},
                 "vals", "<=", (("N", 2 - rho_k1),))
        cert.add(f"chunky size {_tjson(c)}: #(V2 minus W) <= N^(-1/M-(k+1)/M^2) #V2",
                 {"out": int(n2 - W.sum()), "V2": n2, "N": N}, "out", "<=", (("N", -e_k1), ("V2", 1)))
        Vp &= W
    nVp = int(Vp.sum())
    cert.add("jump: #(V2 minus V') <= s N^(-1/M-(k+1)/M^2) #V2",
             {"out": n2 - nVp, "V2": n2, "N": N}, "out", "<=", ((s, 1), ("N", -e_k1), ("V2", 1)))

    # strong popularity
    Vpp = Vp.copy()
    for c in children:
        idx = np.nonzero(Vpp)[0]
        if len(idx) == 0:
            break
        keys = V2.proj_pair_keys(c[1], c[2])[idx]
        m = strong_mask(keys, N, M, images[_tkey(c)])
        Vpp[idx[~m]] = False
    nVpp = int(Vpp.sum())
    cert.add("strong refinement: #(V' minus V'') <= s N^(-100/M) #V'",
             {"out": nVp - nVpp, "Vp": nVp, "N": N}, "out", "<=", ((s, 1), ("N", Fraction(-100, M)), ("Vp", 1)))

    # V''': drop the elements whose nu-fibre lost half its mass, for every r4
    nus = {slope_key(r4): td.nus[slope_key(r4)] for r4 in td.R3}
    nuk = {kk: nu_keys(nu, V2) for kk, nu in nus.items()}
    Vppp = Vpp.copy()
    for r4 in td.R3:
        kk = slope_key(r4)
        ids, cnt = fiber_index(nuk[kk])
        inside = np.bincount(ids[Vpp], minlength=len(cnt))
        bad = Vpp & (2 * inside[ids] < cnt[ids])
        cert.add(f"bad set r4={slope_to_json(r4)}: #V''(r4) <= #(V2 minus V'')",
                 {"bad": int(bad.sum()), "out": n2 - nVpp}, "bad", "<=", "out")
        Vppp &= ~bad
    nVppp = int(Vppp.sum())
    cert.add("jump-3: #(V2 minus V''') <= (1 + #R3) #(V2 minus V'')",
             {"out3": n2 - nVppp, "out2": n2 - nVpp}, "out3", "<=", ((1 + len(td.R3), 1), ("out2", 1)))
    cert.measure("jump-3 against N^(-1/M-(k+1)/M^2) #V2", {"out3": n2 - nVppp, "V2": n2, "N": N},
                 "out3", (("N", -e_k1), ("V2", 1)))
    cert.add("V''' nonempty", {"Vppp": nVppp, "one": 1}, "Vppp", ">=", "one")
    if nVppp == 0:
        return cert

    # nu determined by pi_{r x r'} and the inner bound on nu-fibres of V'''
    idx3 = np.nonzero(Vppp)[0]
    g1 = V2.pairs[:, 0]
    for r4 in td.R3:
        kk = slope_key(r4)
        R4 = td.R4[kk]
        det = all(check_determined(nuk[kk], [V2.proj_pair_keys(r, rp)])
                  for r, rp in zip(R4, td.duals[kk]))
        cert.add(f"nu_r4 determined by every pi_(r x r') (r4={slope_to_json(r4)})",
                 {"determined": int(det), "one": 1}, "determined", "==", "one", kind="identity")
        ids, cnt = fiber_index(nuk[kk][idx3])
        proj_keys = [G.proj_keys(r) for r in R4]
        worst, viol = None, 0
        for f in range(len(cnt)):
            members = g1[idx3[ids == f]]
            size = len(np.unique(members))
            if size != len(members):
                viol += 1  # not parameterized by gamma_1 (cannot happen)
            P = max(len(np.unique(pk[members])) for pk in proj_keys)
            if not _sd_ok(size, P, Cin, beta):
                viol += 1
            ratio = size / (float(Cin) * P ** float(beta))
            if worst is None or ratio > worst[0]:
                worst = (ratio, size, P)
        cert.add(f"inner hypothesis on nu-fibres of V''' (r4={slope_to_json(r4)}), worst fibre",
                 {"Gv": worst[1], "P": worst[2]}, "Gv", "<=", ((Cin, 1), ("P", beta)), kind="hypothesis")
        cert.add(f"inner hypothesis violations over all {len(cnt)} fibres (r4={slope_to_json(r4)})",
                 {"violations": viol, "zero": 0}, "violations", "==", "zero", kind="hypothesis")
        nu_img = len(cnt)
        gam = beta / (beta - 1)
        cert.measure(f"vppp-nu (r4={slope_to_json(r4)}): #nu(V''') ~ (N^(3-rho_k)/#G^2)^(b/(b-1)) #G^2/N",
                     {"nu_img": nu_img, "G": nG, "N": N}, "nu_img",
                     (("N", (3 - rho_k) * gam - 1), ("G", 2 - 2 * gam)))

    # corners
    small1 = _small_mask(V1, r2, r3, k, M, N)
    tri, i1, i2 = _corners(V1, V2)
    nC = len(tri)
    cert.measure("corner count: #C ~ #G^3 / N^2", {"C": nC, "G": nG, "N": N}, "C", (("G", 3), ("N", -2)))
    keep = small1[i1] & Vppp[i2] if nC else np.zeros(0, dtype=bool)
    Cp = np.nonzero(keep)[0]
    nCp = len(Cp)
    cert.measure("cp-def: #C' ~ N^(-1/M-k/M^2) #C", {"Cp": nCp, "C": nC, "N": N}, "Cp", (("N", -e_k), ("C", 1)))
    cert.measure("cp-bound: #C' ~ #G^3 / N^2", {"Cp": nCp, "G": nG, "N": N}, "Cp", (("G", 3), ("N", -2)))
    cert.add("C' nonempty", {"Cp": nCp, "one": 1}, "Cp", ">=", "one")
    if nCp == 0:
        return cert

    # C'' by popularity along f_r4 = (pi_r4(g1), nu_r4(g2, g3))
    cur = Cp.copy()
    fkeys = {}
    for r4 in td.R3:
        kk = slope_key(r4)
        fk = joint_keys(G.proj_keys(r4)[tri[:, 0]], nuk[kk][i2])
        fkeys[kk] = fk
        img = len(fiber_index(fk[Cp])[1])
        m = popular_mask(fk[cur], img)
        cert.add(f"popularity along f_r4 (r4={slope_to_json(r4)}) keeps more than half",
                 {"after": int(m.sum()), "before": len(cur)}, (("after", 1), (2, 1)), ">", "before")
        cur = cur[m]
    Cpp = cur
    nCpp = len(Cpp)
    mu = mu_keys(r3, CornerFamily(G, r1, r2, tri))
    ids_p, cnt_p = fiber_index(mu[Cp])
    vals_p = np.unique(mu[Cp])
    inside = np.bincount(np.searchsorted(vals_p, mu[Cpp]), minlength=len(vals_p))
    # best refinement ratio, least mu value on ties
    best = max(range(len(vals_p)), key=lambda f: (Fraction(int(inside[f]), int(cnt_p[f])), -f))
    m0 = vals_p[best]
    cls = Cpp[mu[Cpp] == m0]
    cert.add("mu-class refinement: #[c]_mu in C'' / #[c]_mu in C' >= #C'' / #C'",
             {"in2": len(cls), "in1": int(cnt_p[best]), "C2": nCpp, "C1": nCp},
             (("in2", 1), ("C1", 1)), ">=", (("C2", 1), ("in1", 1)))
    Gpp_idx = tri[cls, 0]
    nGpp = len(np.unique(Gpp_idx))
    cert.add("G'' = gamma_1 of the class; the class is parameterized by gamma_1",
             {"Gpp": nGpp, "cls": len(cls)}, "Gpp", "==", "cls", kind="identity")
    Gpp = G.subset(np.unique(Gpp_idx))
    Pmax = 0
    for r4 in td.R3:
        kk = slope_key(r4)
        fimg = len(fiber_index(fkeys[kk][cls])[1])
        pr = Gpp.proj_count(r4)
        Pmax = max(Pmax, pr)
        cert.add(f"flip: #pi_r4(G'') = #f_r4(class) (r4={slope_to_json(r4)})",
                 {"proj": pr, "fimg": fimg}, "proj", "==", "fimg", kind="identity")
    cert.add("inner hypothesis on G'': #G'' <= C_in (max_r4 #pi_r4(G''))^beta",
             {"Gpp": nGpp, "P": Pmax}, "Gpp", "<=", ((Cin, 1), ("P", beta)), kind="hypothesis")

    # upper bound on the class
    pr3 = G.proj_keys(r3)[tri[:, 0]]
    k23 = joint_keys(G.proj_keys(r2)[tri[:, 1]], G.proj_keys(r3)[tri[:, 0]])
    det = check_determined(k23[Cpp], [mu[Cpp], pr3[Cpp]])
    cert.add("pi_(r2 x r3) o gamma_(2,1) determined by (mu, pi_r3 o gamma_1) on C''",
             {"determined": int(det), "one": 1}, "determined", "==", "one", kind="identity")
    sub_ids, sub_cnt = fiber_index(pr3[cls])
    cmax = int(sub_cnt.max())
    cert.add("class slices: max #[c]_(mu, pi_r3 o gamma_1) < #V1 N^(rho_k - 2)",
             {"slice": cmax, "V1": n1, "N": N}, "slice", "<", (("V1", 1), ("N", rho_k - 2)))
    cert.add("#G'' <= N * max slice", {"Gpp": nGpp, "N": N, "slice": cmax}, "Gpp", "<=", ("N", "slice"))
    cert.measure("final: #G ~ N^(target)", {"G": nG, "N": N}, "G", (("N", target),))
    cert.data.update({"V1": n1, "V2": n2, "Vp": nVp, "Vpp": nVpp, "Vppp": nVppp, "C": nC,
                      "Cp": nCp, "Cpp": nCpp, "Gpp": nGpp,
                      "realized_exponent": math.log(nG) / math.log(N)})
    cert.notes.append("f_r4 uses pi_r4(g1) as its first component")
    cert.notes.append("the inner bound for G'' is applied with the slope set R_(r1 r2 r3)")
    return cert


def _sd_ok(size: int, P: int, Cin: Fraction, beta: Fraction) -> bool:
    # size <= Cin P^beta, raised to the denominator of beta
    q = beta.denominator
    return Fraction(size) ** q <= Cin ** q * Fraction(P) ** beta.numerator


def _small_mask(V1: SegmentFamily, r2, r3, k, M, N):
    return small_fibre_mask(V1.proj_pair_keys(r2, r3), k, M, N)


def _corners(V1: SegmentFamily, V2: SegmentFamily):
    """Corners (g1, g2, g3) with (g2, g1) in V1 and (g2, g3) in V2.

    Returns the point-index triples and, per corner, the indices into V1, V2.
    """
    a1, a2 = V1.pairs[:, 0], V2.pairs[:, 0]
    out_t, out1, out2 = [], [], []
    top = np.arange(len(V1.base) + 1)
    s1, s2 = np.searchsorted(a1, top), np.searchsorted(a2, top)
    for g2 in np.unique(a1):
        lo1, hi1 = s1[g2], s1[g2 + 1]
        lo2, hi2 = s2[g2], s2[g2 + 1]
        if hi2 <= lo2:
            continue
        j1, j2 = np.meshgrid(np.arange(lo1, hi1), np.arange(lo2, hi2), indexing="ij")
        j1, j2 = j1.ravel(), j2.ravel()
        out1.append(j1)
        out2.append(j2)
        out_t.append(np.stack([V1.pairs[j1, 1], np.full(len(j1), g2), V2.pairs[j2, 1]], axis=1))
    if not out_t:
        z = np.zeros(0, dtype=np.int64)
        return np.zeros((0, 3), dtype=np.int64), z, z
    return np.concatenate(out_t), np.concatenate(out1), np.concatenate(out2)
