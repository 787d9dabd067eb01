import random
from fractions import Fraction

import numpy as np
import pytest

from helpers import brute_max_config, field_slopes, random_config
from kakeya_lab.configs import Config
from kakeya_lab.sd_engine import (FieldTooSmallError, InstanceError, SdInstance, build_slope_tree,
                                  classify_uniformity, empirical_exponent, extremal_search, iterate_once,
                                  mu_split, pipeline_012inf, pipeline_advanced, pipeline_conviviality,
                                  substructure, verify_sd)
from kakeya_lab.slope_field import INF, FieldElem, NuParams, SlopeError, check_generic_slopes


def test_instance_cap_violation_names_slope():
    G = Config(7, [(1, 0), (2, 3), (0, 5)])
    with pytest.raises(InstanceError, match="slope r = 0"):
        SdInstance(G, field_slopes(7, [0, 1, "inf"]), cap=2)


def test_instance_json_round_trip():
    G = Config(7, [(1, 0), (2, 3)])
    inst = SdInstance(G, field_slopes(7, [0, 1, "inf"]), cap=2)
    back = SdInstance.from_json(inst.to_json())
    assert back.to_json() == inst.to_json()


def test_verify_sd_exact_boundary():
    # 4 points with every projection of size 2: 4 <= 2^2 holds at alpha = 2 and fails at 7/4
    G = Config(5, [(0, 0), (2, 0), (0, 1), (2, 1)])
    inst = SdInstance(G, field_slopes(5, [0, "inf"]))
    assert verify_sd(inst, 2)
    assert not verify_sd(inst, Fraction(7, 4))
    assert abs(empirical_exponent(inst) - 2) < 1e-12


@pytest.mark.parametrize("p,R", [(5, [0, 1, "inf"]), (7, [0, 1, 2, "inf"]), (5, [1, 3])])
def test_search_modes_agree_with_enumeration(p, R):
    R = field_slopes(p, R)
    for N in (1, 2, 3):
        ex = extremal_search(p, R, N, "exhaustive")
        bb = extremal_search(p, R, N, "branch_and_bound")
        assert ex.max_size == bb.max_size == brute_max_config(p, R, N)
        for res in (ex, bb):
            assert len(res.witness) == res.max_size
            assert all(res.witness.proj_count(r) <= N for r in R)


def test_search_budget_and_threads():
    R = field_slopes(7, [0, 1, 2, "inf"])
    small = extremal_search(7, R, 3, "exhaustive", budget=50)
    assert not small.exhaustive
    one = extremal_search(7, R, 3, "branch_and_bound", threads=1)
    four = extremal_search(7, R, 3, "branch_and_bound", threads=4)
    assert one.to_json() == four.to_json()


def test_search_rejects_bad_input():
    with pytest.raises(InstanceError):
        extremal_search(9, field_slopes(7, [0]), 2)
    with pytest.raises(InstanceError):
        extremal_search(7, [FieldElem(6, 7)], 2)


def test_pipelines_on_random_configs():
    rng = random.Random(11)
    nu = NuParams.model(2, 13)
    rs = [FieldElem(3, 13), FieldElem(5, 13)]
    assert check_generic_slopes(nu, rs).ok
    for _ in range(20):
        G = random_config(13, rng, rng.randint(2, 13))
        assert pipeline_012inf(G).valid
        assert pipeline_conviviality(G, nu, *rs).valid
        assert iterate_once(G, nu, rs).valid
        nu0, G_sub, cert = substructure(G, nu, rs)
        assert cert.valid and len(G_sub) <= len(G)


def test_pipeline_012inf_on_extremal_witness():
    R = field_slopes(7, [0, 1, 2, "inf"])
    w = extremal_search(7, R, 3, "branch_and_bound").witness
    cert = pipeline_012inf(w)
    assert cert.valid
    assert cert.step("configuration bound").ok


def test_degenerate_slopes_rejected():
    G = Config(7, [(0, 0), (1, 2)])
    with pytest.raises(SlopeError):
        pipeline_conviviality(G, NuParams.model(1, 7), FieldElem(0, 7), FieldElem(3, 7))


def test_slope_tree_deterministic_and_valid():
    a = build_slope_tree(31, 2, seed=4)
    b = build_slope_tree(31, 2, seed=4)
    assert a.to_json() == b.to_json()
    assert a.validate() == []
    assert a.rho(0) == 100 and a.rho(2) == 0
    with pytest.raises(FieldTooSmallError):
        build_slope_tree(5, 2)


def test_mu_split_identity():
    p = 13
    r1, r2, r3, r4 = (FieldElem(v, p) for v in (0, 1, 2, 5))
    x, nu = mu_split(r1, r2, r3, r4)
    # l_r3 = x l_r4 + u l_r1 on every point
    for a in range(p):
        for b in range(p):
            lhs = (a + 2 * b) % p
            rhs = (int(x) * (a + 5 * b) + int(nu.s) * a) % p
            assert lhs == rhs


def test_advanced_pipeline_runs_and_is_valid():
    rng = random.Random(2)
    tree = build_slope_tree(31, 2, 0)
    for _ in range(3):
        G = random_config(31, rng, rng.randint(5, 31))
        cert = pipeline_advanced(G, tree)
        assert cert.valid
        assert "realized_exponent" in cert.data
    single = pipeline_advanced(Config(31, [(0, 0)]), tree)
    assert single.valid and len(single.steps) == 1


def test_uniformity_at_the_root_level():
    from kakeya_lab.sd_engine.advanced import TildeFamilies
    tree = build_slope_tree(31, 2, 0)
    rng = random.Random(5)
    G = random_config(31, rng, 20)
    R = tree.slopes()
    N = G.max_proj(R)
    T0 = tree.levels[0][0]
    u = classify_uniformity(TildeFamilies(G, R, N).tilde(T0[0]), T0, 0, 2, N)
    assert u.uniform and u.small == u.size
