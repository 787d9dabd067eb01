"""Brute-force oracle: the largest G over F_p with ``#pi_r(G) <= N`` for r in R.

G is encoded as one optional point per pi_{-1} fibre ``c = a - b``; option
``o < p`` puts ``(o + c, o)`` in G and option ``p`` leaves the fibre empty.
The search space is split into subtrees by the option of the first free
fibre.  Subtrees run in any order (optionally on threads) and merge by
``(max_size, lowest subtree index)``, so results never depend on scheduling.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .. import kernels
from ..configs import Config
from ..slope_field import (
    INF,
    FieldElem,
    Moebius,
    SlopeError,
    is_prime,
    is_proper,
    moebius_apply,
    slope_key,
    slope_parts,
    slope_to_json,
)
from .instance import InstanceError

MODES = ("exhaustive", "branch_and_bound")
DEFAULT_BUDGET = 10 ** 7


@dataclass
class SearchResult:
    max_size: int
    witness: Config
    exhaustive: bool
    nodes_explored: int
    p: int
    R: list
    N: int
    mode: str

    def to_json(self) -> dict:
        return {
            "max_size": self.max_size,
            "witness": self.witness.to_json(),
            "exhaustive": self.exhaustive,
            "nodes_explored": self.nodes_explored,
            "p": self.p,
            "slopes": [slope_to_json(r) for r in self.R],
            "cap": self.N,
            "mode": self.mode,
        }


def _decode(opts, p) -> list:
    return [((int(o) + c) % p, int(o)) for c, o in enumerate(opts) if 0 <= o < p]


def _canonical_moebius(p: int, R: list):
    """Map fixing -1 that sends R to its least image (sorted slope keys)."""
    best = None
    for L in Moebius.all_fixing_minus_one(p):
        img = tuple(sorted(slope_key(moebius_apply(L, r)) for r in R))
        if best is None or img < best[0]:
            best = (img, L)
    return best[1]


def _apply_linear(A, pts, p):
    out = []
    for a, b in pts:
        x = A[0][0] * a + A[0][1] * b
        y = A[1][0] * a + A[1][1] * b
        out.append((int(x) % p, int(y) % p))
    return out


def _run_subtrees(p, rv, rinf, cap, base_fixed, base_must, split_at, use_bound, budget, threads):
    options = list(range(p + 1))
    if base_must[split_at]:
        options = options[:-1]
    k = len(options)
    shares = [budget // k + (1 if i < budget % k else 0) for i in range(k)]

    def job(i):
        fixed = base_fixed.copy()
        fixed[split_at] = options[i]  # option p pins the fibre empty
        return kernels.dfs_search(p, rv, rinf, cap, fixed, base_must, use_bound, max(shares[i], 1))

    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            results = list(ex.map(job, range(k)))
    else:
        results = [job(i) for i in range(k)]
    best, best_opts, nodes, complete = -1, None, 0, True
    for b, opts, n, comp in results:
        nodes += n
        complete = complete and comp
        if b > best:
            best, best_opts = b, opts
    return best, best_opts, nodes, complete


def extremal_search(p: int, R, N: int, mode: str = "exhaustive", seed: int = 0,
                    budget: int = DEFAULT_BUDGET, threads: int = 1,
                    normalize: bool = True) -> SearchResult:
    """Largest ``#G`` with ``#pi_r(G) <= N`` for all ``r`` in ``R``.

    ``exhaustive`` enumerates every choice with feasibility pruning only.
    ``branch_and_bound`` adds a capacity bound and symmetry normalisation:
    translations pin ``(0, 0)`` into G, scalings make fibre 1 nonempty, and R
    is replaced by its least image under the Moebius maps fixing -1.  The seed
    is accepted for interface uniformity; the search itself is deterministic.
    """
    if not is_prime(p) or p == 2:
        raise InstanceError(f"p must be an odd prime, got {p}")
    if mode not in MODES:
        raise InstanceError(f"unknown mode {mode!r}")
    if int(N) < 1:
        raise InstanceError("cap N must be >= 1")
    R = [r if (r is INF or isinstance(r, FieldElem)) else FieldElem(int(r) % p, p) for r in R]
    for r in R:
        if not is_proper(r):
            raise InstanceError(f"slope {slope_to_json(r)} is not proper")
        if isinstance(r, FieldElem) and r.p != p:
            raise SlopeError(f"modulus mismatch: {r.p} vs {p}")
    if len({slope_key(r) for r in R}) != len(R):
        raise InstanceError("duplicate slopes in R")
    use_bound = mode == "branch_and_bound"

    L = None
    R_search = list(R)
    if use_bound and normalize and R:
        L = _canonical_moebius(p, R)
        R_search = [moebius_apply(L, r) for r in R]
    parts = [slope_parts(r) for r in R_search]
    rv = np.array([v for v, _ in parts], dtype=np.int64)
    rinf = np.array([i for _, i in parts], dtype=np.bool_)
    fixed = np.full(p, -1, dtype=np.int64)
    must = np.zeros(p, dtype=np.bool_)

    singleton_floor = False
    if use_bound and normalize:
        fixed[0] = 0
        must[0] = True
        must[1] = True
        singleton_floor = True
        split_at = 1
    else:
        split_at = 0
    best, opts, nodes, complete = _run_subtrees(p, rv, rinf, int(N), fixed, must, split_at,
                                                use_bound, int(budget), threads)
    pts = _decode(opts, p) if best > 0 else []
    if singleton_floor and best < 1:
        # no configuration with two points exists: a single point is optimal
        best, pts = 1, [(0, 0)]
    if best < 0:
        best, pts = 0, []
    if L is not None and pts:
        # witness was found for L(R); pull it back through the induced map
        A = L.induced_linear_map()
        inv = _inverse2(A)
        pts = _apply_linear(inv, [(FieldElem(a, p), FieldElem(b, p)) for a, b in pts], p)
        pts = [(int(a), int(b)) for a, b in pts]
    witness = Config(p, sorted(pts))
    return SearchResult(best, witness, complete, nodes, p, list(R), int(N), mode)


def _inverse2(A):
    (a, b), (c, d) = A
    det = a * d - b * c
    return ((d / det, -b / det), (-c / det, a / det))
