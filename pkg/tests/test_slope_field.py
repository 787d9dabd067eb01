import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from helpers import naive_proj
from kakeya_lab.slope_field import (INF, ExceptionalSlopeError, FieldElem, GF, Moebius, NuParams, SlopeError,
                                    check_generic_slopes, dual_coefficients, dual_slope, is_inf, is_prime,
                                    moebius_apply, parse_slope, project, slope_key, slope_to_json)

PRIMES = [3, 5, 7, 11, 13]


def test_is_prime_matches_trial_division():
    naive = [n for n in range(2, 200) if all(n % d for d in range(2, n))]
    assert [n for n in range(200) if is_prime(n)] == naive


def test_parse_slope_tokens():
    assert parse_slope("inf", 7) is INF
    assert parse_slope("3", 7) == FieldElem(3, 7)
    assert parse_slope(-1, 7) == FieldElem(6, 7)
    assert slope_to_json(INF) == "inf"
    assert parse_slope("1/2") == Fraction(1, 2)


def test_minus_one_is_not_proper():
    with pytest.raises(SlopeError):
        NuParams(FieldElem(6, 7), INF, FieldElem(1, 7))


def test_field_inverse_and_division():
    for p in PRIMES:
        for a in range(1, p):
            x = FieldElem(a, p)
            assert (x * x.inverse()).value == 1
    with pytest.raises(ZeroDivisionError):
        FieldElem(0, 5).inverse()


@given(st.sampled_from(PRIMES), st.integers(0, 100), st.integers(0, 100), st.integers(0, 100))
def test_projection_matches_definition(p, a, b, r):
    g = (FieldElem(a % p, p), FieldElem(b % p, p))
    assert int(project(FieldElem(r % p, p), g)) == naive_proj(r % p, (a, b), p)
    assert int(project(INF, g)) == b % p


def _pi(r, g, p):
    return naive_proj(r, g, p) if not is_inf(r) else g[1] % p


@pytest.mark.parametrize("p", [5, 7, 11])
def test_dual_identity_on_every_pair(p):
    """s*pi_inf(g) + pi_-1(g') = x pi_r(g) + y pi_r'(g') + z (pi_0(g) - pi_0(g')) for all g, g'."""
    rng = random.Random(p)
    for _ in range(10):
        nu = NuParams.model(rng.randrange(1, p), p)
        r = FieldElem(rng.randrange(p), p)
        try:
            x, y, z, rp = dual_coefficients(nu, r)
        except ExceptionalSlopeError:
            continue
        rpv = rp if is_inf(rp) else int(rp)
        for a in range(p):
            for b in range(p):
                for a2 in range(p):
                    for b2 in range(p):
                        lhs = (int(nu.s) * b + (a2 - b2)) % p
                        rhs = (int(x) * _pi(int(r), (a, b), p) + int(y) * _pi(rpv, (a2, b2), p)
                               + int(z) * (a - a2)) % p
                        assert lhs == rhs


def test_exceptional_slopes_raise():
    nu = NuParams.model(2, 7)
    with pytest.raises(ExceptionalSlopeError):
        dual_slope(nu, FieldElem(0, 7))
    with pytest.raises(ExceptionalSlopeError):
        dual_slope(nu, INF)


def test_generic_report_names_collision():
    nu = NuParams.model(1, 7)
    rep = check_generic_slopes(nu, [FieldElem(1, 7), FieldElem(1, 7)])
    assert not rep.ok and "collides" in rep.violation


@pytest.mark.parametrize("p", [5, 7])
def test_moebius_maps_fixing_minus_one(p):
    maps = Moebius.all_fixing_minus_one(p)
    # stabiliser of a point of the projective line in PGL(2, p)
    assert len(maps) == p * (p - 1)
    images = set()
    for L in maps:
        assert L.fixes_minus_one()
        img = tuple(slope_key(moebius_apply(L, r)) for r in GF(p).slopes())
        assert len(set(img)) == p + 1  # a bijection of P^1(F_p)
        images.add(img)
    assert len(images) == len(maps)


@settings(max_examples=50)
@given(st.integers(0, 10 ** 6))
def test_random_moebius_is_invertible(seed):
    L = Moebius.random_fixing_minus_one(11, random.Random(seed))
    assert L.fixes_minus_one()
    assert L.a * L.d - L.b * L.c != 0
