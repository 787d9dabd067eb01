import random
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from helpers import naive_count, random_config
from kakeya_lab.configs import (Config, ConfigError, build_segments, check_determined, count_congruent_pairs,
                                fiber_sizes, nu_keys, popular_mask, popular_refine, strong_refine)
from kakeya_lab.slope_field import INF, FieldElem, NuParams


def test_rejects_non_injective_and_names_pair():
    with pytest.raises(ConfigError, match=r"\[1, 0\].*\[2, 1\]"):
        Config(7, [(1, 0), (2, 1)])


def test_rejects_duplicates_and_bad_modulus():
    with pytest.raises(ConfigError):
        Config(7, [(1, 0), (1, 0)])
    with pytest.raises(ConfigError):
        Config(9, [(1, 0)])


def test_multiplicity_relaxes_injectivity():
    G = Config(7, [(1, 0), (2, 1)], multiplicity=2)
    assert len(G) == 2


def test_json_round_trip_is_byte_identical():
    G = Config(11, [(3, 1), (0, 0), (5, 9)])
    text = G.dumps()
    assert Config.loads(text).dumps() == text
    Q = Config(None, [((Fraction(1, 3), 2), (0, Fraction(1, 2)))], d=2)
    assert Config.loads(Q.dumps()).dumps() == Q.dumps()


@settings(max_examples=100)
@given(st.sampled_from([5, 7, 11, 13]), st.integers(0, 10 ** 6))
def test_projection_counts_match_naive(p, seed):
    G = random_config(p, random.Random(seed))
    for r in list(range(p)) + [INF]:
        rr = INF if r is INF else FieldElem(r, p)
        assert G.proj_count(rr) == naive_count(G, r)


def _naive_popular(keys, Y):
    cnt = {}
    for k in keys:
        cnt[k] = cnt.get(k, 0) + 1
    return [2 * Y * cnt[k] >= len(keys) for k in keys]


@settings(max_examples=200)
@given(st.lists(st.integers(0, 6), min_size=1, max_size=60))
def test_popular_mask_matches_definition(keys):
    m = popular_mask(np.array(keys), 7)
    assert m.tolist() == _naive_popular(keys, 7)
    assert 2 * m.sum() > len(keys)


@given(st.lists(st.integers(0, 6), min_size=0, max_size=60))
def test_congruent_pairs_matches_naive(keys):
    naive = sum(1 for a in keys for b in keys if a == b)
    assert count_congruent_pairs(list(range(len(keys))), np.array(keys, dtype=np.int64)) == naive


def test_codomain_smaller_than_image_is_rejected():
    with pytest.raises(ValueError):
        popular_refine([0, 1, 2], np.array([0, 1, 2]), 2)


@given(st.lists(st.tuples(st.integers(0, 3), st.integers(0, 3), st.integers(0, 3)), min_size=1, max_size=40))
def test_check_determined_matches_naive(rows):
    F = np.array([r[0] for r in rows])
    f1 = np.array([r[1] for r in rows])
    f2 = np.array([r[2] for r in rows])
    seen = {}
    naive = True
    for x, a, b in rows:
        if seen.setdefault((a, b), x) != x:
            naive = False
    assert check_determined(F, [f1, f2]) == naive


def test_strong_refine_removes_little():
    keys = np.array([0] * 50 + [1] * 50 + [2])
    kept = strong_refine(list(range(len(keys))), keys, 4, 2, 3)
    assert 100 <= len(kept) <= 101


def test_segments_pair_points_with_equal_r0_projection():
    rng = random.Random(1)
    G = random_config(7, rng, 7)
    V = build_segments(G, FieldElem(0, 7))
    naive = sum(1 for g in G.points for h in G.points if g[0] == h[0])
    assert len(V) == naive
    nu = NuParams.model(3, 7)
    assert len(nu_keys(nu, V)) == len(V)
    assert fiber_sizes(np.array([1, 1, 2])).tolist() == [2, 2, 1]  # per element
