"""Replayable proof certificates.

A certificate is an ordered list of steps.  Each step records the integer (or
rational) counts it uses and one inequality between two monomials in those
counts, e.g. ``fiber >= V^2 * 8^-1 * N^-4``.  Monomials may contain numeric
bases, which is how explicit constants enter.  Inequalities are decided
exactly whenever the exponents have small denominators; otherwise with
60-digit logarithms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import reduce
from typing import Any, Iterable, Sequence, Union

import mpmath

Number = Union[int, Fraction]
Base = Union[str, int, Fraction]
Monomial = tuple[tuple[Base, Fraction], ...]

_EXACT_DENOM_LIMIT = 2000
# "~" records a measured relation whose constant the argument leaves implicit;
# it always holds and exists to carry the realised constant.
_RELS = ("<=", ">=", "<", ">", "==", "~")


def _as_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, str):
        return Fraction(x)
    if isinstance(x, float):
        if not math.isfinite(x):
            raise ValueError(f"non-finite value {x}")
        return Fraction(x)
    return Fraction(int(x))


def mono(*terms) -> Monomial:
    """Build a monomial from ``(base, exponent)`` pairs or bare bases."""
    out = []
    for t in terms:
        if isinstance(t, tuple):
            base, e = t
        else:
            base, e = t, 1
        if not isinstance(base, str):
            base = _as_fraction(base)
        out.append((base, _as_fraction(e)))
    return tuple(out)


def _resolve(m: Monomial, counts: dict) -> list[tuple[Fraction, Fraction]]:
    out = []
    for base, e in m:
        v = _as_fraction(counts[base]) if isinstance(base, str) else _as_fraction(base)
        if v < 0:
            raise ValueError(f"negative base {base}={v}")
        out.append((v, e))
    return out


def _side_zero(terms) -> bool | None:
    """True if the side is 0, None if it is +inf, False otherwise."""
    zero = False
    for v, e in terms:
        if v == 0:
            if e > 0:
                zero = True
            elif e < 0:
                return None
    return zero


def compare_monomials(lhs: Sequence, rhs: Sequence) -> int:
    """Sign of ``lhs - rhs`` for resolved monomials ``[(value, exponent)]``."""
    zl, zr = _side_zero(lhs), _side_zero(rhs)
    if zl is None or zr is None:
        if zl is None and zr is None:
            return 0
        return 1 if zl is None else -1
    if zl or zr:
        return (0 if zl and zr else (-1 if zl else 1))
    # ratio lhs/rhs as a product of powers of positive rationals
    terms = [(v, e) for v, e in lhs if v != 1 and e != 0]
    terms += [(v, -e) for v, e in rhs if v != 1 and e != 0]
    if not terms:
        return 0
    L = reduce(lambda a, b: a * b // math.gcd(a, b), (e.denominator for _, e in terms), 1)
    if L <= _EXACT_DENOM_LIMIT and all(abs(e * L) <= 4000 for _, e in terms):
        num, den = 1, 1
        for v, e in terms:
            k = int(e * L)
            if k >= 0:
                num *= v.numerator ** k
                den *= v.denominator ** k
            else:
                num *= v.denominator ** (-k)
                den *= v.numerator ** (-k)
        return (num > den) - (num < den)
    with mpmath.workdps(60):
        s = mpmath.fsum(mpmath.mpf(e.numerator) / e.denominator
                        * mpmath.log(mpmath.mpf(v.numerator) / v.denominator) for v, e in terms)
        if abs(s) < mpmath.mpf(10) ** -45:
            return 0
        return 1 if s > 0 else -1


def monomial_value(terms) -> float:
    zero = _side_zero(terms)
    if zero is None:
        return math.inf
    if zero:
        return 0.0
    return math.exp(sum(float(e) * math.log(v.numerator / v.denominator if v.denominator != 1 else v.numerator)
                        for v, e in terms if v != 1))


def _holds(sign: int, rel: str) -> bool:
    return {"<=": sign <= 0, ">=": sign >= 0, "<": sign < 0, ">": sign > 0, "==": sign == 0, "~": True}[rel]


def _fmt_base(b) -> str:
    if isinstance(b, str):
        return b
    return str(b)


def format_monomial(m: Monomial) -> str:
    if not m:
        return "1"
    parts = []
    for b, e in m:
        if e == 1:
            parts.append(_fmt_base(b))
        else:
            parts.append(f"{_fmt_base(b)}^({e})" if e.denominator != 1 or e < 0 else f"{_fmt_base(b)}^{e}")
    return " * ".join(parts)


@dataclass
class Step:
    desc: str
    counts: dict[str, Number]
    lhs: Monomial
    rel: str
    rhs: Monomial
    kind: str = "proven"
    note: str = ""
    ok: bool = field(default=False, init=False)
    constant: float = field(default=math.nan, init=False)

    def __post_init__(self):
        if self.rel not in _RELS:
            raise ValueError(f"unknown relation {self.rel}")
        self.evaluate()

    def evaluate(self) -> bool:
        lhs = _resolve(self.lhs, self.counts)
        rhs = _resolve(self.rhs, self.counts)
        self.ok = _holds(compare_monomials(lhs, rhs), self.rel)
        # realised constant: lhs divided by the count part of rhs
        count_part = [(v, e) for (b, _), (v, e) in zip(self.rhs, rhs) if isinstance(b, str)]
        denom = monomial_value(count_part)
        num = monomial_value(lhs)
        if denom == 0 or not math.isfinite(denom):
            self.constant = math.nan
        else:
            self.constant = num / denom
        return self.ok

    @property
    def inequality(self) -> str:
        return f"{format_monomial(self.lhs)} {self.rel} {format_monomial(self.rhs)}"

    def to_json(self) -> dict:
        return {
            "desc": self.desc,
            "kind": self.kind,
            "counts": {k: _num_json(v) for k, v in self.counts.items()},
            "lhs": [[_base_json(b), _num_json(e)] for b, e in self.lhs],
            "rel": self.rel,
            "rhs": [[_base_json(b), _num_json(e)] for b, e in self.rhs],
            "inequality": self.inequality,
            "constant": None if math.isnan(self.constant) else _float_json(self.constant),
            "ok": self.ok,
            "note": self.note,
        }

    @classmethod
    def from_json(cls, d: dict) -> "Step":
        counts = {k: _num_from_json(v) for k, v in d["counts"].items()}
        lhs = tuple((_base_from_json(b), _as_fraction(e)) for b, e in d["lhs"])
        rhs = tuple((_base_from_json(b), _as_fraction(e)) for b, e in d["rhs"])
        return cls(d["desc"], counts, lhs, d["rel"], rhs, d.get("kind", "proven"), d.get("note", ""))


def _float_json(x: float):
    return float(f"{x:.12g}")


def _num_json(v):
    if isinstance(v, bool):
        return v
    if isinstance(v, int):
        return v
    q = _as_fraction(v)
    return q.numerator if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def _num_from_json(v):
    if isinstance(v, str):
        q = Fraction(v)
        return q.numerator if q.denominator == 1 else q
    return v


def _base_json(b):
    return b if isinstance(b, str) else {"value": _num_json(b)}


def _base_from_json(b):
    if isinstance(b, dict):
        return _as_fraction(b["value"])
    return b


@dataclass
class Certificate:
    name: str
    steps: list[Step] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)
    data: dict[str, Any] = field(default_factory=dict)

    def add(self, desc: str, counts: dict, lhs, rel: str, rhs, kind: str = "proven", note: str = "") -> Step:
        st = Step(desc, dict(counts), _mono_arg(lhs), rel, _mono_arg(rhs), kind, note)
        self.steps.append(st)
        return st

    def measure(self, desc: str, counts: dict, lhs, rhs, note: str = "") -> Step:
        return self.add(desc, counts, lhs, "~", rhs, kind="measured", note=note)

    def identity(self, desc: str, counts: dict, lhs: str, rhs: str, note: str = "") -> Step:
        return self.add(desc, counts, mono(lhs), "==", mono(rhs), kind="identity", note=note)

    @property
    def valid(self) -> bool:
        return all(s.ok for s in self.steps)

    @property
    def verdict(self) -> str:
        return "valid" if self.valid else "refuted"

    def failing_step(self) -> Step | None:
        return next((s for s in self.steps if not s.ok), None)

    def step(self, desc_prefix: str) -> Step:
        for s in self.steps:
            if s.desc.startswith(desc_prefix):
                return s
        raise KeyError(desc_prefix)

    def to_json(self) -> dict:
        fail = self.failing_step()
        return {
            "name": self.name,
            "verdict": self.verdict,
            "failing_step": None if fail is None else fail.desc,
            "steps": [s.to_json() for s in self.steps],
            "notes": list(self.notes),
            "data": _jsonable(self.data),
        }

    @classmethod
    def from_json(cls, d: dict) -> "Certificate":
        return cls(d["name"], [Step.from_json(s) for s in d["steps"]], list(d.get("notes", [])), dict(d.get("data", {})))


def _mono_arg(m) -> Monomial:
    if isinstance(m, str):
        return mono(m)
    if isinstance(m, tuple) and m and isinstance(m[0], tuple):
        return mono(*m)
    if isinstance(m, (list, tuple)):
        return mono(*m)
    return mono(m)


def replay(cert_json: dict) -> str:
    """Recompute every step of a serialized certificate; return the verdict."""
    return Certificate.from_json(cert_json).verdict


def _jsonable(x):
    from .slope_field import FieldElem, Infinity, slope_to_json

    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (FieldElem, Infinity)):
        return slope_to_json(x)
    if isinstance(x, Fraction):
        return _num_json(x)
    if isinstance(x, float):
        return _float_json(x) if math.isfinite(x) else str(x)
    if hasattr(x, "item"):
        return _jsonable(x.item())
    return x


def all_ok(steps: Iterable[Step]) -> bool:
    return all(s.ok for s in steps)
