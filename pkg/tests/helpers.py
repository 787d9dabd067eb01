"""Shared generators and brute-force oracles for the test suite."""

import itertools
import random

from kakeya_lab.configs import Config
from kakeya_lab.slope_field import INF, FieldElem, is_inf


def random_config(p, rng: random.Random, size=None):
    """A random G in F_p^2 with pi_(-1) injective: one point on some lines a - b = c."""
    size = rng.randint(1, p) if size is None else size
    cs = rng.sample(range(p), size)
    pts = []
    for c in cs:
        b = rng.randrange(p)
        pts.append(((b + c) % p, b))
    return Config(p, pts)


def naive_proj(r, g, p):
    """pi_r(a, b) = a + r b, and pi_inf(a, b) = b, computed directly."""
    a, b = g
    if is_inf(r):
        return b % p
    return (a + int(r) * b) % p


def naive_count(G, r):
    return len({naive_proj(r, g, G.p) for g in G.points})


def brute_max_config(p, R, N):
    """Largest G (pi_(-1) injective) with #pi_r(G) <= N for every r, by full enumeration.

    Each line a - b = c holds at most one point: choose b or nothing per line.
    """
    best = 0
    for choice in itertools.product(range(p + 1), repeat=p):
        pts = [((b + c) % p, b) for c, b in enumerate(choice) if b < p]
        if len(pts) <= best:
            continue
        if all(len({naive_proj(r, g, p) for g in pts}) <= N for r in R):
            best = len(pts)
    return best


def field_slopes(p, tokens):
    return [INF if t == "inf" else FieldElem(t % p, p) for t in tokens]
