"""Finite configurations G in Z x Z and the combinatorics built on them.

Z is F_p^d (``p`` prime) or, in rational mode (``p=None``), the rationals;
the latter is only used for instances produced from grid geometry.  Points
are kept in the order given; every algorithm that needs a canonical order
sorts by field values explicitly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Sequence

import numpy as np

from .slope_field import (
    INF,
    FieldElem,
    NuParams,
    SlopeError,
    is_proper,
    parse_slope,
    slope_key,
    slope_to_json,
)


class ConfigError(ValueError):
    """Invalid configuration (bad modulus, duplicate points, pi_{-1} collision)."""


# ---------------------------------------------------------------------------
# keys and fibres
# ---------------------------------------------------------------------------


def _slope_int(r, p):
    if isinstance(r, FieldElem):
        if r.p != p:
            raise SlopeError(f"modulus mismatch: {r.p} vs {p}")
        return r.value
    return int(Fraction(r).numerator * pow(Fraction(r).denominator, -1, p)) % p


def fiber_index(keys) -> tuple[np.ndarray, np.ndarray]:
    """Canonical fibre ids of a key list.

    Returns ``(ids, counts)`` where fibres are numbered in increasing key order
    and ``counts[ids[i]]`` is the size of the fibre of element ``i``.
    """
    if isinstance(keys, np.ndarray) and keys.dtype != object:
        if keys.shape[0] == 0:
            return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64)
        if keys.ndim == 1:
            _, inv, counts = np.unique(keys, return_inverse=True, return_counts=True)
        else:
            _, inv, counts = np.unique(keys, axis=0, return_inverse=True, return_counts=True)
        return inv.reshape(-1).astype(np.int64), counts.astype(np.int64)
    keys = list(keys)
    order = {k: i for i, k in enumerate(sorted(set(keys)))}
    ids = np.fromiter((order[k] for k in keys), dtype=np.int64, count=len(keys))
    counts = np.bincount(ids, minlength=len(order)).astype(np.int64)
    return ids, counts


def fiber_sizes(keys) -> np.ndarray:
    """Size of the fibre containing each element."""
    ids, counts = fiber_index(keys)
    return counts[ids]


def image_size(keys) -> int:
    return int(fiber_index(keys)[1].shape[0])


def joint_keys(*key_arrays) -> np.ndarray:
    """Stack integer key arrays column-wise so fibres are joint fibres."""
    cols = []
    for k in key_arrays:
        k = np.asarray(k)
        cols.append(k.reshape(k.shape[0], -1))
    return np.concatenate(cols, axis=1)


def _as_keys(X, f):
    if callable(f):
        return [f(x) for x in X]
    if len(f) != len(X):
        raise ValueError("key array length differs from the set")
    return f


# ---------------------------------------------------------------------------
# Config
# ---------------------------------------------------------------------------


class Config:
    """A finite set G of pairs ``(a, b)`` with ``pi_{-1}`` injective.

    ``multiplicity`` relaxes injectivity to fibres of size at most that value;
    it is 1 for genuine configurations.
    """

    def __init__(self, p: int | None, points: Iterable, d: int = 1, *, multiplicity: int = 1):
        from .slope_field import is_prime

        if p is not None:
            if not is_prime(p) or p == 2:
                raise ConfigError(f"modulus must be an odd prime, got {p}")
        self.p = p
        self.d = int(d)
        if self.d < 1:
            raise ConfigError("dimension must be >= 1")
        self.multiplicity = int(multiplicity)
        pts = []
        for g in points:
            a, b = g
            pts.append((self._norm(a), self._norm(b)))
        self.points: tuple = tuple(pts)
        seen = {}
        for i, g in enumerate(self.points):
            if g in seen:
                raise ConfigError(f"duplicate point {self._fmt(g)} (indices {seen[g]}, {i})")
            seen[g] = i
        self._check_injective()

    # -- element handling ---------------------------------------------------
    def _norm(self, v):
        if self.d == 1:
            if isinstance(v, (list, tuple)):
                if len(v) != 1:
                    raise ConfigError(f"expected a scalar coordinate, got {v}")
                v = v[0]
            return self._scalar(v)
        if not isinstance(v, (list, tuple)) or len(v) != self.d:
            raise ConfigError(f"expected a {self.d}-vector, got {v}")
        return tuple(self._scalar(x) for x in v)

    def _scalar(self, x):
        if isinstance(x, FieldElem):
            if self.p is None or x.p != self.p:
                raise ConfigError(f"modulus mismatch for coordinate {x}")
            return x.value
        if self.p is None:
            q = Fraction(x)
            return q.numerator if q.denominator == 1 else q
        if isinstance(x, bool) or int(x) != x:
            raise ConfigError(f"non-integer coordinate {x!r}")
        return int(x) % self.p

    def _fmt(self, g):
        return json.dumps([_coord_json(g[0]), _coord_json(g[1])])

    def _check_injective(self):
        if not self.points:
            return
        keys = self.proj_keys(-1 if self.p is None else FieldElem(self.p - 1, self.p))
        groups: dict = {}
        for i, k in enumerate(_hashable(keys)):
            groups.setdefault(k, []).append(i)
        for idx in groups.values():
            if len(idx) > self.multiplicity:
                i, j = idx[0], idx[1]
                raise ConfigError(
                    f"pi_(-1) is not injective: points {self._fmt(self.points[i])} and "
                    f"{self._fmt(self.points[j])} have the same a - b"
                )

    # -- container protocol ---------------------------------------------------
    def __len__(self) -> int:
        return len(self.points)

    def __iter__(self):
        return iter(self.points)

    def __eq__(self, other):
        return (isinstance(other, Config) and other.p == self.p and other.d == self.d
                and set(other.points) == set(self.points))

    def __hash__(self):
        return hash((self.p, self.d, frozenset(self.points)))

    def __repr__(self) -> str:
        return f"Config(p={self.p}, d={self.d}, n={len(self)})"

    @property
    def size(self) -> int:
        return len(self.points)

    def sorted(self) -> "Config":
        return Config(self.p, sorted(self.points), self.d, multiplicity=self.multiplicity)

    def subset(self, indices) -> "Config":
        return Config(self.p, [self.points[int(i)] for i in indices], self.d, multiplicity=self.multiplicity)

    # -- arrays and projections -----------------------------------------------
    def array(self) -> np.ndarray:
        """Integer array of shape ``(n, 2, d)`` (F_p mode only)."""
        if self.p is None:
            raise ConfigError("array() needs a finite field")
        n = len(self.points)
        out = np.zeros((n, 2, self.d), dtype=np.int64)
        for i, (a, b) in enumerate(self.points):
            out[i, 0] = a
            out[i, 1] = b
        return out

    def proj_values(self, r) -> np.ndarray:
        """Componentwise ``pi_r`` values, shape ``(n, d)`` (F_p mode)."""
        arr = self.array()
        if r is INF:
            return arr[:, 1, :].copy()
        rv = _slope_int(r, self.p)
        return (arr[:, 0, :] + rv * arr[:, 1, :]) % self.p

    def proj_keys(self, r):
        """One hashable/sortable key per point for ``pi_r``.

        F_p mode returns an int64 array (vectors encoded base p); rational mode
        returns a list of Fractions (or tuples of them).
        """
        if self.p is not None:
            return encode(self.proj_values(r), self.p)
        out = []
        for a, b in self.points:
            if self.d == 1:
                out.append(Fraction(b) if r is INF else Fraction(a) + Fraction(r) * Fraction(b))
            else:
                out.append(tuple(Fraction(y) if r is INF else Fraction(x) + Fraction(r) * Fraction(y)
                                 for x, y in zip(a, b)))
        return out

    def proj_count(self, r) -> int:
        return image_size(self.proj_keys(r)) if self.points else 0

    def max_proj(self, R) -> int:
        return max((self.proj_count(r) for r in R), default=0)

    def proj_image(self, r) -> list:
        keys = self.proj_keys(r)
        if self.p is None:
            return sorted(set(keys))
        return sorted(set(int(k) for k in keys))

    # -- serialization ----------------------------------------------------------
    def to_json(self) -> dict:
        return {
            "p": self.p,
            "d": self.d,
            "points": [[_coord_json(a), _coord_json(b)] for a, b in self.points],
        }

    def dumps(self) -> str:
        return dumps(self.to_json())

    @classmethod
    def from_json(cls, obj: dict, *, multiplicity: int = 1) -> "Config":
        if not isinstance(obj, dict):
            raise ConfigError("config must be a JSON object")
        for key in ("p", "points"):
            if key not in obj:
                raise ConfigError(f"missing field {key!r}")
        p = obj["p"]
        d = obj.get("d", 1)
        if p is not None and (not isinstance(p, int) or isinstance(p, bool)):
            raise ConfigError(f"field 'p' must be an integer, got {p!r}")
        if not isinstance(d, int) or isinstance(d, bool):
            raise ConfigError(f"field 'd' must be an integer, got {d!r}")
        pts = obj["points"]
        if not isinstance(pts, list):
            raise ConfigError("field 'points' must be a list")
        parsed = []
        for i, g in enumerate(pts):
            if not isinstance(g, list) or len(g) != 2:
                raise ConfigError(f"points[{i}] must be a pair [a, b]")
            a, b = (_coord_from_json(x, p, f"points[{i}]") for x in g)
            parsed.append((a, b))
        return cls(p, parsed, d, multiplicity=multiplicity)

    @classmethod
    def loads(cls, text: str) -> "Config":
        return cls.from_json(json.loads(text))


def _coord_json(x):
    if isinstance(x, tuple):
        return [_coord_json(v) for v in x]
    if isinstance(x, Fraction):
        return x.numerator if x.denominator == 1 else f"{x.numerator}/{x.denominator}"
    return int(x)


def _coord_from_json(x, p, where):
    if isinstance(x, list):
        return tuple(_coord_from_json(v, p, where) for v in x)
    if isinstance(x, bool):
        raise ConfigError(f"{where}: boolean coordinate")
    if isinstance(x, int):
        if p is not None and not 0 <= x < p:
            raise ConfigError(f"{where}: coordinate {x} outside [0, {p})")
        return x
    if isinstance(x, str) and p is None:
        return Fraction(x)
    raise ConfigError(f"{where}: bad coordinate {x!r}")


def _hashable(keys):
    if isinstance(keys, np.ndarray):
        if keys.ndim == 1:
            return keys.tolist()
        return [tuple(row) for row in keys.tolist()]
    return list(keys)


def encode(values: np.ndarray, p: int) -> np.ndarray:
    """Encode rows of F_p^d as single integers (base p)."""
    values = np.asarray(values, dtype=np.int64)
    if values.ndim == 1:
        return values
    d = values.shape[1]
    if d == 1:
        return values[:, 0].copy()
    if p ** d >= 2 ** 62:
        raise ConfigError("p^d too large for integer keys")
    w = p ** np.arange(d, dtype=np.int64)
    return values @ w


def dumps(obj) -> str:
    """Canonical JSON text: sorted keys, two-space indent, trailing newline."""
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


# ---------------------------------------------------------------------------
# segments and corners
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SegmentFamily:
    """Ordered pairs ``(g, g')`` with equal ``pi_{r0}``, as index pairs into ``base``."""

    base: Config
    r0: object
    pairs: np.ndarray  # (m, 2) int64, lexicographic

    def __len__(self) -> int:
        return int(self.pairs.shape[0])

    def segments(self) -> list:
        pts = self.base.points
        return [(pts[i], pts[j]) for i, j in self.pairs.tolist()]

    def subset(self, mask) -> "SegmentFamily":
        return SegmentFamily(self.base, self.r0, self.pairs[np.asarray(mask)])

    def proj_pair_keys(self, r, r2) -> np.ndarray:
        """Keys of ``pi_{r (x) r2}`` on each segment, shape ``(m, 2)``."""
        k1 = _point_keys(self.base, r)
        k2 = _point_keys(self.base, r2)
        return joint_keys(k1[self.pairs[:, 0]], k2[self.pairs[:, 1]])

    def gamma_keys(self, r, which: int) -> np.ndarray:
        k = _point_keys(self.base, r)
        return k[self.pairs[:, which]]


@dataclass(frozen=True)
class CornerFamily:
    """Triples ``(g1, g2, g3)`` with ``g1 ~_{pi_r1} g2 ~_{pi_r2} g3`` (index triples)."""

    base: Config
    r1: object
    r2: object
    triples: np.ndarray  # (m, 3)

    def __len__(self) -> int:
        return int(self.triples.shape[0])

    def corners(self) -> list:
        pts = self.base.points
        return [(pts[i], pts[j], pts[k]) for i, j, k in self.triples.tolist()]


_KEY_CACHE_ATTR = "_proj_key_cache"


def _point_keys(G: Config, r) -> np.ndarray:
    cache = G.__dict__.setdefault(_KEY_CACHE_ATTR, {})
    k = slope_key(r)
    if k not in cache:
        keys = G.proj_keys(r)
        if not isinstance(keys, np.ndarray):
            keys = fiber_index(keys)[0]
        cache[k] = keys
    return cache[k]


def _groups(keys) -> list[np.ndarray]:
    ids, counts = fiber_index(keys)
    order = np.argsort(ids, kind="stable")
    bounds = np.concatenate([[0], np.cumsum(counts)])
    return [order[bounds[i]:bounds[i + 1]] for i in range(len(counts))]


def build_segments(G: Config, r0) -> SegmentFamily:
    if not is_proper(r0):
        raise SlopeError("r0 must be proper")
    if len(G) == 0:
        return SegmentFamily(G, r0, np.zeros((0, 2), dtype=np.int64))
    chunks = []
    for grp in _groups(_point_keys(G, r0)):
        a, b = np.meshgrid(grp, grp, indexing="ij")
        chunks.append(np.stack([a.ravel(), b.ravel()], axis=1))
    pairs = np.concatenate(chunks).astype(np.int64)
    pairs = pairs[np.lexsort((pairs[:, 1], pairs[:, 0]))]
    return SegmentFamily(G, r0, pairs)


def build_corners(G: Config, r1, r2) -> CornerFamily:
    if not (is_proper(r1) and is_proper(r2)):
        raise SlopeError("corner slopes must be proper")
    if slope_key(r1) == slope_key(r2):
        raise SlopeError("corner slopes must differ")
    n = len(G)
    if n == 0:
        return CornerFamily(G, r1, r2, np.zeros((0, 3), dtype=np.int64))
    k1, k2 = _point_keys(G, r1), _point_keys(G, r2)
    g1 = {int(i): grp for grp in _groups(k1) for i in grp}
    g2 = {int(i): grp for grp in _groups(k2) for i in grp}
    chunks = []
    for j in range(n):
        a, c = np.meshgrid(g1[j], g2[j], indexing="ij")
        chunks.append(np.stack([a.ravel(), np.full(a.size, j), c.ravel()], axis=1))
    tri = np.concatenate(chunks).astype(np.int64)
    tri = tri[np.lexsort((tri[:, 2], tri[:, 1], tri[:, 0]))]
    return CornerFamily(G, r1, r2, tri)


# ---------------------------------------------------------------------------
# nu and mu
# ---------------------------------------------------------------------------


def _pi(r, g, p):
    from .slope_field import project

    return project(r, g, p)


def _as_int(v):
    if isinstance(v, FieldElem):
        return v.value
    if isinstance(v, tuple):
        return tuple(_as_int(x) for x in v)
    return v


def eval_nu(nu: NuParams, seg, p: int | None = None):
    """``s * pi_{r_inf}(g) + pi_{-1}(g')`` for one segment ``(g, g')``."""
    g, g2 = seg
    p = p if p is not None else nu.p
    minus_one = FieldElem(p - 1, p) if p else Fraction(-1)
    s = nu.s
    a = _pi(nu.r_inf, g, p)
    b = _pi(minus_one, g2, p)
    if isinstance(a, tuple):
        return tuple(_as_int(s * x + y) for x, y in zip(a, b))
    return _as_int(s * a + b)


def eval_mu(r3, corner, p: int | None = None):
    """``pi_{r3}(g1) + pi_{-1}(g3)`` for one corner."""
    g1, _g2, g3 = corner
    mod = p if p is not None else (r3.p if isinstance(r3, FieldElem) else None)
    minus_one = FieldElem(mod - 1, mod) if mod else Fraction(-1)
    a = _pi(r3, g1, mod)
    b = _pi(minus_one, g3, mod)
    if isinstance(a, tuple):
        return tuple(_as_int(x + y) for x, y in zip(a, b))
    return _as_int(a + b)


def nu_keys(nu: NuParams, V: SegmentFamily) -> np.ndarray:
    """Vectorised ``nu`` over a segment family (F_p mode), encoded keys."""
    G = V.base
    p = G.p
    if p is None:
        raise ConfigError("nu_keys needs a finite field")
    s = _slope_int(nu.s, p)
    A = G.proj_values(nu.r_inf)
    B = G.proj_values(FieldElem(p - 1, p))
    vals = (s * A[V.pairs[:, 0]] + B[V.pairs[:, 1]]) % p
    return encode(vals, p)


def mu_keys(r3, C: CornerFamily) -> np.ndarray:
    G = C.base
    p = G.p
    A = G.proj_values(r3)
    B = G.proj_values(FieldElem(p - 1, p))
    return encode((A[C.triples[:, 0]] + B[C.triples[:, 2]]) % p, p)


# ---------------------------------------------------------------------------
# popularity
# ---------------------------------------------------------------------------


def _check_codomain(counts, codomain_size):
    if int(codomain_size) < len(counts):
        raise ValueError(
            f"codomain size {codomain_size} is smaller than the image size {len(counts)}"
        )


def popular_mask(keys, codomain_size: int) -> np.ndarray:
    """Mask of ``X^{<f>}``: fibre size at least ``#X / (2 #Y)``, ties kept."""
    ids, counts = fiber_index(keys)
    _check_codomain(counts, codomain_size)
    n = ids.shape[0]
    return 2 * int(codomain_size) * counts[ids] >= n


def popular_refine(X: Sequence, f, codomain_size: int) -> list:
    keys = _as_keys(X, f)
    mask = popular_mask(keys, codomain_size)
    return [x for x, m in zip(X, mask) if m]


def strong_threshold_ok(fiber: int, n: int, codomain_size: int, N: int, M: int) -> bool:
    """``fiber >= N^{-100/M} n / #Y`` decided exactly as ``(fiber #Y)^M N^100 >= n^M``."""
    return (fiber * codomain_size) ** M * N ** 100 >= n ** M


def strong_mask(keys, N: int, M: int, codomain_size: int) -> np.ndarray:
    """Mask of ``X^{<<f>>}``; verifies the strong refinement property on the output."""
    if int(N) < 2 or int(M) < 1:
        raise ValueError(f"strong refinement needs N >= 2 and M >= 1 (got N={N}, M={M})")
    ids, counts = fiber_index(keys)
    _check_codomain(counts, codomain_size)
    n = int(ids.shape[0])
    keep_fiber = np.array([strong_threshold_ok(int(c), n, int(codomain_size), int(N), int(M))
                           for c in counts], dtype=bool)
    mask = keep_fiber[ids] if n else np.zeros(0, dtype=bool)
    removed = n - int(mask.sum())
    # #(X \ X^<<f>>) <= N^{-100/M} #X
    if removed ** M * N ** 100 > n ** M:
        raise AssertionError("strong refinement property violated")
    return mask


def strong_refine(X: Sequence, f, N: int, M: int, codomain_size: int) -> list:
    keys = _as_keys(X, f)
    mask = strong_mask(keys, N, M, codomain_size)
    return [x for x, m in zip(X, mask) if m]


def count_congruent_pairs(X: Sequence, f, codomain_size: int | None = None) -> int:
    """``#{(x1, x2) : f(x1) = f(x2)}``."""
    keys = _as_keys(X, f)
    counts = fiber_index(keys)[1]
    if codomain_size is not None:
        _check_codomain(counts, codomain_size)
    return int((counts.astype(object) ** 2).sum()) if len(counts) else 0


def check_determined(F, fs: Sequence, X: Sequence | None = None) -> bool:
    """True iff every joint fibre of ``fs`` lies inside a fibre of ``F`` on ``X``.

    Maps are callables evaluated on ``X`` or precomputed key arrays.
    """
    if X is None:
        fk = F
        fsk = list(fs)
    else:
        fk = _as_keys(X, F)
        fsk = [_as_keys(X, f) for f in fs]
    ids = [fiber_index(k)[0] for k in fsk]
    fid = fiber_index(fk)[0]
    if fid.shape[0] == 0:
        return True
    joint = fiber_index(joint_keys(*ids))[0] if ids else np.zeros_like(fid)
    pairs = fiber_index(joint_keys(joint, fid))[1]
    return len(pairs) == len(fiber_index(joint)[1])


def slopes_from_json(tokens, p) -> list:
    out = []
    for t in tokens:
        r = parse_slope(t, p)
        out.append(r)
    return out


def slopes_to_json(rs) -> list:
    return [slope_to_json(r) for r in rs]
