"""The eleven acceptance criteria, each at its stated tolerance.

Every test records one pass/fail line; the lines are printed in the terminal
summary (and inline with ``pytest -s``).
"""

import math
import random
import time
from fractions import Fraction

import numpy as np
import pytest
from scipy.optimize import brentq

from conftest import record
from helpers import brute_max_config, field_slopes, random_config
from kakeya_lab import exponents as ex
from kakeya_lab.configs import (build_segments, check_determined, count_congruent_pairs, fiber_index,
                                nu_keys, popular_refine)
from kakeya_lab.kakeya_grid import (BUSH_CONSTANT, TwoEndsParams, bush_certificate, concentrated_shading,
                                    full_shading, generate_family, slice_extract, two_ends_check)
from kakeya_lab.rng import make_rng
from kakeya_lab.sd_engine import (build_slope_tree, classify_uniformity, extremal_search, pipeline_012inf,
                                  substructure)
from kakeya_lab.sd_engine.advanced import TildeFamilies
from kakeya_lab.kakeya_grid.six_slices import COUNT_SLACK, DUAL_TOL, MULTIPLICITY, six_slices_to_sd
from kakeya_lab.slope_field import (FieldElem, Moebius, NuParams, check_generic_slopes, dual_slope,
                                    moebius_apply)


def test_criterion_01_advanced_fixed_point():
    t0 = time.perf_counter()
    a = ex.advanced_fixed()
    dt = time.perf_counter() - t0
    res = ex.cubic_residual(a)
    # independent root of advanced_map(beta) = beta
    b = brentq(lambda x: float(ex.advanced_map(x)) - x, 1.5, 1.9, xtol=1e-15)
    ok = abs(a - 1.67513) < 1e-4 and res < 1e-12 and dt < 1.0 and abs(a - b) < 1e-12
    record(1, ok, f"alpha={a:.12f} residual={res:.2e} brentq_gap={abs(a - b):.1e} time={dt:.3f}s")
    assert ok


def test_criterion_02_basic_fixed_point_and_exact_maps():
    b = ex.basic_fixed()
    ok = (abs(b - (1 + math.sqrt(2) / 2)) < 1e-12
          and ex.basic_map(2) == Fraction(7, 4) and ex.advanced_map(2) == Fraction(7, 4)
          and isinstance(ex.basic_map(2), Fraction) and isinstance(ex.advanced_map(2), Fraction))
    record(2, ok, f"basic_fixed={b:.15f} basic_map(2)={ex.basic_map(2)} advanced_map(2)={ex.advanced_map(2)}")
    assert ok


def test_criterion_03_maximal_exponent_identity():
    bad = []
    for n in range(2, 51):
        p = Fraction(4 * n + 3, 7)
        q = (n - 1) * p / (p - 1)  # (n - 1) p'
        if q != n + Fraction(3, 4) or ex.maximal_exponents(n) != (p, q):
            bad.append(n)
    record(3, not bad, f"(n-1)p' = n + 3/4 exactly for n in [2, 50]; failures={bad}")
    assert not bad


def test_criterion_04_novelty_flags():
    mink = ex.first_exceeding("minkowski")
    haus = ex.first_exceeding("hausdorff")
    maximal = [n for n in range(2, 51) if ex.dimension_bounds(n).maximal_p > Fraction(n + 2, 2)]
    cross = ex.hausdorff_minkowski_crossover()
    row23 = ex.dimension_bounds(23)
    ok = mink == 7 and haus == 5 and maximal == list(range(9, 51)) and 22.6 <= cross <= 22.8
    record(4, ok, f"minkowski first n={mink}, hausdorff first n={haus}, maximal_p for n>8: "
                  f"{maximal == list(range(9, 51))}, crossover={cross:.4f} "
                  f"(n=23: hausdorff-minkowski={row23.hausdorff - row23.minkowski:+.4f}, reported only)")
    assert ok


def test_criterion_05_exhaustive_search_p5():
    p = 5
    R = field_slopes(p, [0, 1, 2, "inf"])
    rng = random.Random(5)
    t0 = time.perf_counter()
    problems = []
    sizes = {}
    for N in (1, 2, 3, 4):
        res = extremal_search(p, R, N, "exhaustive")
        sizes[N] = res.max_size
        if not res.exhaustive:
            problems.append(f"N={N} incomplete")
        if not (N <= res.max_size <= 4 * N ** 1.75):
            problems.append(f"N={N} size {res.max_size} outside [N, 4N^(7/4)]")
        if res.max_size != brute_max_config(p, R, N):
            problems.append(f"N={N} disagrees with full enumeration")
        for _ in range(20):
            L = Moebius.random_fixing_minus_one(p, rng)
            img = [moebius_apply(L, r) for r in R]
            if extremal_search(p, img, N, "exhaustive").max_size != res.max_size:
                problems.append(f"N={N} not Moebius invariant")
                break
    dt = time.perf_counter() - t0
    ok = not problems and dt < 60
    record(5, ok, f"max #G by N: {sizes}, time={dt:.1f}s, problems={problems}")
    assert ok


def _random_nonexceptional(nu, p, rng, count):
    out = []
    while len(out) < count:
        r = FieldElem(rng.randrange(p), p)
        if check_generic_slopes(nu, [r]).ok:
            out.append(r)
    return out


def test_criterion_06_property_suite():
    rng = random.Random(6)
    failures = {"cauchy": 0, "popular": 0, "coord": 0, "dual": 0}
    for _ in range(1000):
        p = rng.choice([7, 11, 13])
        G = random_config(p, rng)
        r, r2 = rng.sample(range(p), 2)
        kr = G.proj_keys(FieldElem(r, p))
        # Cauchy-Schwarz: pairs with equal pi_r >= #G^2 / #codomain
        if count_congruent_pairs(list(range(len(G))), kr, p) * p < len(G) ** 2:
            failures["cauchy"] += 1
        keep = popular_refine(list(range(len(G))), kr, p)
        if not 2 * len(keep) > len(G):
            failures["popular"] += 1
        # two distinct slopes pin down a point: joint fibres are singletons
        joint = check_determined(np.arange(len(G)), [kr, G.proj_keys(FieldElem(r2, p))])
        if not joint:
            failures["coord"] += 1
        nu = NuParams.model(rng.randrange(1, p), p)
        V = build_segments(G, nu.r0)
        nk = nu_keys(nu, V)
        for s in _random_nonexceptional(nu, p, rng, 5):
            if not check_determined(nk, [V.proj_pair_keys(s, dual_slope(nu, s))]):
                failures["dual"] += 1
    ok = not any(failures.values())
    record(6, ok, f"1000 configs over p in {{7, 11, 13}}; failures={failures}")
    assert ok


def test_criterion_07_pipeline_012inf():
    rng = random.Random(7)
    primes = [7, 11, 13, 17, 19, 23, 29, 31]
    bad, worst = [], 0.0
    for i in range(200):
        p = rng.choice(primes)
        G = random_config(p, rng, rng.randint(2, p))
        cert = pipeline_012inf(G)
        N = cert.data["N"]
        if not cert.valid or len(G) > 2 * N ** 1.75:
            bad.append(i)
        worst = max(worst, len(G) / N ** 1.75)
    record(7, not bad, f"200 instances, invalid={len(bad)}, max #G/N^(7/4)={worst:.3f} (<= 2 required)")
    assert not bad


def test_criterion_08_substructure():
    rng = random.Random(8)
    p = 13
    gb_fail, worst = 0, 0.0
    for _ in range(200):
        G = random_config(p, rng, rng.randint(2, p))
        while True:
            nu = NuParams.model(rng.randrange(1, p), p)
            rs = [FieldElem(rng.randrange(p), p) for _ in range(2)]
            if check_generic_slopes(nu, rs).ok:
                break
        _, _, cert = substructure(G, nu, rs)
        st = cert.step("g-bound")
        gb_fail += not st.ok or st.counts["Gnu_max"] > st.counts["N"]
        worst = max(worst, *cert.data["realized_C"])
    ok = gb_fail == 0 and worst <= 8
    record(8, ok, f"200 instances at p=13, g-bound failures={gb_fail}, worst g-smallproj constant={worst:.3f}")
    assert ok


def test_criterion_09_slope_tree():
    t0 = time.perf_counter()
    tree = build_slope_tree(101, 3, seed=0)
    dt = time.perf_counter() - t0
    violations = tree.validate()
    rng = random.Random(9)
    R = tree.slopes()
    T0 = tree.levels[0][0]
    nonuniform = 0
    for _ in range(20):
        G = random_config(101, rng, rng.randint(2, 101))
        N = G.max_proj(R)
        fam = TildeFamilies(G, R, N)
        nonuniform += not classify_uniformity(fam.tilde(T0[0]), T0, 0, 3, N).uniform
    ok = dt < 10 and not violations and nonuniform == 0
    record(9, ok, f"build {dt:.2f}s, constraint violations={len(violations)}, "
                  f"T0 non-uniform on {nonuniform}/20 instances")
    assert ok


def test_criterion_10_grid_suite():
    t0 = time.perf_counter()
    n, N = 2, 32
    bush = generate_family("bush", n, N)
    cert = bush_certificate(bush, full_shading(bush))
    c = cert.data["realized_c"]
    half = TwoEndsParams(sigma=Fraction(1, 2))
    fam = generate_family("random", n, N, seed=0)
    full_ok = two_ends_check(fam, full_shading(fam), half)["ok"] and \
        two_ends_check(bush, full_shading(bush), half)["ok"]
    conc_fail = not two_ends_check(fam, concentrated_shading(fam, Fraction(1, 4)), half)["ok"]
    rng = make_rng(10)
    window_fail = 0
    for _ in range(100):
        m = int(rng.integers(20, 400))
        E = np.unique(rng.integers(-2 * N, 2 * N + 1, size=(m, n)), axis=0)
        mu = rng.integers(1, 9, size=len(E))
        window_fail += not slice_extract(E, mu, N).windows_ok()
    dt = time.perf_counter() - t0
    ok = cert.valid and c >= float(BUSH_CONSTANT) and full_ok and conc_fail and window_fail == 0 and dt < 60
    record(10, ok, f"bush valid={cert.valid} c={c:.3f} (>= 1/16), full passes={full_ok}, "
                   f"concentrated fails={conc_fail}, slice window failures={window_fail}/100, time={dt:.1f}s")
    assert ok


def test_criterion_11_six_slices():
    n, N = 2, 32
    problems = []
    spread = [math.inf, 0.0]
    for seed in range(10):
        F = generate_family("random", n, N, seed=seed)
        res = six_slices_to_sd(F, full_shading(F), seed)
        cert = res.certificate
        for st in cert.steps:
            if st.desc.startswith("near-dual") and not st.ok:
                problems.append(f"seed {seed}: {st.desc} dev={float(st.counts['dev']):.4f}")
            if st.note == "pigeonhole":
                spread = [min(spread[0], st.constant), max(spread[1], st.constant)]
                if not (1 / COUNT_SLACK <= st.constant <= COUNT_SLACK):
                    problems.append(f"seed {seed}: {st.desc.split(':')[0]} constant {st.constant:.3f}")
        # recompute the duality deviation from the instance itself
        r0, r1, r2, r1p, r2p, _ = res.instance.R
        s = Fraction(res.instance.meta["s"])
        for ri, rip in ((r1, r1p), (r2, r2p)):
            if abs(s / ri - 1 / rip - 1) > Fraction(DUAL_TOL, N):
                problems.append(f"seed {seed}: dual deviation")
        diffs = {}
        for a, b in res.instance.G.points:
            key = tuple(x - y for x, y in zip(a, b)) if isinstance(a, tuple) else a - b
            diffs[key] = diffs.get(key, 0) + 1
        fib = np.array(list(diffs.values()))
        if fib.max() > MULTIPLICITY:
            problems.append(f"seed {seed}: pi_(-1) fibre {fib.max()}")
    ok = not problems
    record(11, ok, f"10 seeds, pigeonhole constants in [{spread[0]:.3f}, {spread[1]:.3f}] "
                   f"(window [1/16, 16]), problems={problems}")
    assert ok
