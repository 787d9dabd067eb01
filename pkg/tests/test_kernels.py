import json
import os
import subprocess
import sys

import numpy as np
from hypothesis import given, settings, strategies as st

from kakeya_lab import kernels
from kakeya_lab._accel import backend_name


def _brute_quad(h, lo, hi, W):
    """#{(k, l)}: all four heights pairwise separated and t_k, t_l in the slope window of (t_i, t_j)."""
    from fractions import Fraction
    n = len(h)
    sep = lambda a, b: lo <= abs(a - b) <= hi
    out = np.zeros((n, n), dtype=np.int64)
    for i in range(n):
        for j in range(n):
            if not sep(h[i], h[j]):
                continue
            for k in range(n):
                for l in range(n):
                    q = [h[i], h[j], h[k], h[l]]
                    if not all(sep(q[a], q[b]) for a in range(4) for b in range(a + 1, 4)):
                        continue
                    ok = True
                    for t in (h[k], h[l]):
                        r = abs(Fraction(t - h[i], h[j] - t))
                        ok &= Fraction(1, W) <= r <= W
                    out[i, j] += ok
    return out


@settings(max_examples=25, deadline=None)
@given(st.lists(st.integers(-40, 40), min_size=0, max_size=14, unique=True))
def test_quad_counts_backends_and_oracle(hs):
    h = np.array(sorted(hs), dtype=np.int64)
    a = kernels.quad_counts(h, 4, 40, 4)
    b = kernels.quad_counts(h, 4, 40, 4, force_numpy=True)
    assert np.array_equal(a, b)
    assert np.array_equal(a, _brute_quad(h.tolist(), 4, 40, 4))


@settings(max_examples=25, deadline=None)
@given(st.lists(st.tuples(st.integers(-20, 20), st.integers(-20, 20)), min_size=1, max_size=30))
def test_ball_counts_backends_and_oracle(pts):
    P = np.array(pts, dtype=np.int64)
    radii2 = np.array([400, 100, 25, 4, 1])
    a = kernels.ball_counts(P, radii2)
    b = kernels.ball_counts(P, radii2, force_numpy=True)
    assert np.array_equal(a, b)
    for q, r2 in enumerate(radii2):
        for i, x in enumerate(pts):
            assert a[q, i] == sum(1 for y in pts if (x[0] - y[0]) ** 2 + (x[1] - y[1]) ** 2 <= r2)


_SCRIPT = """
import json
from kakeya_lab._accel import backend_name
from kakeya_lab.sd_engine import extremal_search
from kakeya_lab.slope_field import INF, FieldElem
R = [FieldElem(0, 7), FieldElem(1, 7), FieldElem(2, 7), INF]
r = extremal_search(7, R, 3, "branch_and_bound")
print(json.dumps({"backend": backend_name(), "result": r.to_json()}))
"""


def _run(flag):
    env = dict(os.environ, KAKEYA_LAB_NO_NUMBA=flag)
    out = subprocess.run([sys.executable, "-c", _SCRIPT], env=env, capture_output=True, text=True, check=True)
    return json.loads(out.stdout)


def test_numba_switch_gives_identical_search():
    fast, slow = _run("0"), _run("1")
    assert slow["backend"] == "numpy"
    assert fast["result"] == slow["result"]


def test_backend_name():
    assert backend_name() in ("numba", "numpy")
