import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from kakeya_lab.kakeya_grid import (DEFAULT, BushBranchError, GridError, LineFamily, PigeonholeError, Shading,
                                    TwoEndsParams, bush_certificate, concentrated_shading, full_shading,
                                    generate_family, height_count, lines_through_pair, make_line,
                                    maximal_experiment, random_shading, s_value, shading_stats,
                                    single_point_shading, six_slices_to_sd, slice_extract, slice_slope,
                                    stride_shading, two_ends_check, validate_family)
from kakeya_lab.kakeya_grid.bush import sep_bounds
from kakeya_lab.kakeya_grid.six_slices import round_half_down


def brute_members(n, N, base, v, params=DEFAULT):
    """Every grid point of the ball within C_line (grid units, sup norm) of the ideal line."""
    H = int(params.C_ball * N)
    out = []
    for x in itertools.product(range(-H, H + 1), repeat=n):
        if sum(c * c for c in x) > (params.C_ball * N) ** 2:
            continue
        h = x[-1]
        if all(abs(Fraction(x[i]) - (N * base[i] + v[i] * h)) <= params.C_line for i in range(n - 1)):
            out.append(x)
    return sorted(out, key=lambda x: (x[-1],) + tuple(x[:-1]))


@settings(max_examples=40, deadline=None)
@given(st.integers(-8, 8), st.integers(-8, 8), st.integers(1, 3))
def test_line_members_match_brute_force_2d(b, k, denom):
    N = 8
    base = (Fraction(b, N) + Fraction(1, 3 * N), Fraction(0))
    v = (Fraction(k, N * denom),)
    L = make_line(2, N, base, (v[0], 1))
    assert [tuple(x) for x in L.points.tolist()] == brute_members(2, N, base, v)


def test_line_members_match_brute_force_3d():
    N = 4
    base = (Fraction(1, 12), Fraction(-1, 4), Fraction(0))
    v = (Fraction(1, 4), Fraction(-1, 2))
    L = make_line(3, N, base, v + (1,))
    assert [tuple(x) for x in L.points.tolist()] == brute_members(3, N, base, v)


def test_vertical_line_through_origin():
    L = make_line(2, 16, (0, 0), (0, 1))
    assert len(L) == height_count(16)
    assert all((0, k) in {tuple(x) for x in L.points.tolist()} for k in range(16))


def test_direction_cap_and_horizontal():
    with pytest.raises(GridError):
        make_line(2, 8, (0, 0), (1, 0))
    with pytest.raises(GridError):
        make_line(2, 8, (0, 0), (2, 1))


@pytest.mark.parametrize("kind", ["random", "bush", "hairbrush", "maximal_separated"])
def test_generated_families_validate(kind):
    F = generate_family(kind, 2, 16, seed=1)
    rep = validate_family(F)
    assert rep["ok"] and rep["separated"]
    G = LineFamily.from_json(F.to_json())
    assert [L.points.tolist() for L in G.lines] == [L.points.tolist() for L in F.lines]


def test_family_capacity():
    with pytest.raises(GridError):
        generate_family("random", 2, 16, count=20 * 16)
    assert len(generate_family("maximal_separated", 2, 16)) == 33


def test_separation_violation_detected():
    lines = [make_line(2, 8, (0, 0), (0, 1)), make_line(2, 8, (0, 0), (Fraction(1, 16), 1))]
    rep = validate_family(LineFamily(2, 8, lines))
    assert not rep["separated"] and rep["separation_violations"] == [(0, 1)]


def test_lines_through_pair_matches_index_and_bush():
    F = generate_family("bush", 2, 16)
    # every bush line passes through the origin
    x2 = tuple(F.lines[0].points[-1].tolist())
    assert lines_through_pair(F, (0, 0), x2) >= 1
    with pytest.raises(GridError):
        lines_through_pair(F, (0, 0), (0, 0))


def test_shading_validation_and_json():
    F = generate_family("random", 2, 16, count=8)
    with pytest.raises(GridError):
        Shading(F, [[10 ** 6]] + [[] for _ in range(7)])
    Y = random_shading(F, 0.5, seed=3)
    Z = Shading.from_json(F, Y.to_json())
    assert [s.tolist() for s in Z.sets] == [s.tolist() for s in Y.sets]
    st_ = shading_stats(F, full_shading(F))
    assert st_["mass"] == st_["mu_total"] and abs(st_["lambda"] - 1) < 1e-12


def _brute_two_ends(F, Y, sigma):
    """max over lines, points and dyadic radii of #(Y(T) & B(x, r)) / (#Y(T) r^sigma)."""
    N = F.N
    worst = 0.0
    for i in range(len(F)):
        P = Y.points(i).tolist()
        m = len(P)
        r = Fraction(1)
        while r >= Fraction(1, N):
            R2 = (r * N) ** 2
            for x in P:
                c = sum(1 for y in P if sum((a - b) ** 2 for a, b in zip(x, y)) <= R2)
                worst = max(worst, c / (m * float(r) ** sigma))
            r /= 2
    return worst


@pytest.mark.parametrize("make", [full_shading, stride_shading, concentrated_shading, single_point_shading])
def test_two_ends_matches_brute_force(make):
    F = generate_family("random", 2, 8, count=6, seed=2)
    Y = make(F)
    got = two_ends_check(F, Y, TwoEndsParams(sigma=Fraction(1, 2)))
    assert abs(got["worst"] - _brute_two_ends(F, Y, 0.5)) < 1e-12


def test_two_ends_examples():
    F = generate_family("bush", 2, 32)
    half = TwoEndsParams(sigma=Fraction(1, 2))
    assert two_ends_check(F, full_shading(F), half)["ok"]
    assert not two_ends_check(F, concentrated_shading(F), half)["ok"]
    assert not two_ends_check(F, single_point_shading(F), half)["ok"]


def test_slice_extract_uniform_and_single_slice():
    N = 16
    H = height_count(N)
    E = np.array([(x, h) for h in range(-2 * N, 2 * N + 1) for x in range(3)])
    ss = slice_extract(E, None, N)
    assert ss.k == 0 and len(ss.S) == H and ss.windows_ok()
    E1 = np.array([(x, 0) for x in range(20)])
    s1 = slice_extract(E1, None, N)
    assert list(s1.S) == [0] and s1.windows_ok()
    with pytest.raises(GridError):
        slice_extract(np.zeros((0, 2)), None, N)


def test_bush_certificate_constant():
    F = generate_family("bush", 2, 32)
    cert = bush_certificate(F, full_shading(F))
    assert cert.valid and cert.data["realized_c"] >= 1 / 16
    with pytest.raises(GridError):
        bush_certificate(F, concentrated_shading(F), TwoEndsParams(sigma=Fraction(1, 2)))


def test_maximal_experiment_fields():
    F = generate_family("maximal_separated", 2, 16)
    out = maximal_experiment(F, full_shading(F))
    assert out["E"] > 0 and out["ratio_rwt"] > 0 and out["lines"] == 33


def test_slice_slope_and_rounding():
    assert slice_slope(3, 1, 5) == Fraction(1, 1)
    with pytest.raises(GridError):
        slice_slope(5, 1, 5)
    assert round_half_down(Fraction(1, 2)) == 0
    assert round_half_down(Fraction(-1, 2)) == -1
    assert round_half_down(Fraction(3, 2)) == 1
    # r = 1, r' = 1/3 -> s = 1 + 3 = 4 exactly
    assert s_value(3, 2, 1, 5, 32) == 4


def test_sep_bounds():
    assert sep_bounds(32) == (8, 128)


def test_six_slices_routes_small_density_to_bush():
    F = generate_family("random", 2, 32, seed=0)
    Y = Shading(F, [[0] for _ in F.lines])
    with pytest.raises(BushBranchError, match="bush branch"):
        six_slices_to_sd(F, Y)


def test_six_slices_empty_buckets_name_the_step(monkeypatch):
    # at lambda >= N^(-1/8) every line has separated quadruples, so empty the
    # P(T) buckets by raising their threshold out of reach
    import kakeya_lab.kakeya_grid.six_slices as six
    monkeypatch.setattr(six, "COUNT_SLACK", Fraction(1, 10 ** 6))
    F = generate_family("random", 2, 32, seed=0)
    with pytest.raises(PigeonholeError, match="P\\(T\\)"):
        six.six_slices_to_sd(F, full_shading(F))


def test_six_slices_is_deterministic():
    F = generate_family("random", 2, 32, seed=3)
    a = six_slices_to_sd(F, full_shading(F), 3)
    b = six_slices_to_sd(F, full_shading(F), 3)
    assert a.slices == b.slices and a.certificate.to_json() == b.certificate.to_json()
    assert a.certificate.valid and a.pi_minus1_max_fibre <= 4
