"""SD instances: a configuration, a slope set and an optional projection cap."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

from ..certificate import compare_monomials, _as_fraction
from ..configs import Config, ConfigError
from ..slope_field import SlopeError, is_proper, parse_slope, slope_key, slope_to_json


class InstanceError(ValueError):
    """Invalid SD instance (improper slope, cap violation, degenerate data)."""


@dataclass
class SdInstance:
    G: Config
    R: list
    cap: int | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        for r in self.R:
            if not is_proper(r):
                raise InstanceError(f"slope {slope_to_json(r)} is not proper")
        keys = [slope_key(r) for r in self.R]
        if len(set(keys)) != len(keys):
            raise InstanceError("duplicate slopes in R")
        if self.cap is not None:
            if int(self.cap) < 1:
                raise InstanceError("cap must be >= 1")
            for r in self.R:
                c = self.G.proj_count(r)
                if c > self.cap:
                    raise InstanceError(
                        f"#pi_r(G) = {c} exceeds cap {self.cap} for slope r = {slope_to_json(r)}"
                    )

    @property
    def tolerance(self) -> int:
        """Allowed pi_{-1} multiplicity (1 for genuine configurations)."""
        return self.G.multiplicity

    def proj_counts(self) -> dict:
        return {str(slope_to_json(r)): self.G.proj_count(r) for r in self.R}

    def max_proj(self) -> int:
        return self.G.max_proj(self.R)

    def to_json(self) -> dict:
        out = self.G.to_json()
        out["slopes"] = [slope_to_json(r) for r in self.R]
        out["cap"] = self.cap
        if self.G.multiplicity != 1:
            out["multiplicity"] = self.G.multiplicity
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "SdInstance":
        if not isinstance(obj, dict):
            raise InstanceError("instance must be a JSON object")
        mult = obj.get("multiplicity", 1)
        G = Config.from_json(obj, multiplicity=mult)
        toks = obj.get("slopes")
        if toks is None:
            raise InstanceError("missing field 'slopes'")
        if not isinstance(toks, list):
            raise InstanceError("field 'slopes' must be a list")
        R = []
        for i, t in enumerate(toks):
            try:
                R.append(parse_slope(t, G.p))
            except SlopeError as exc:
                raise InstanceError(f"slopes[{i}]: {exc}") from exc
        cap = obj.get("cap")
        if cap is not None and (not isinstance(cap, int) or isinstance(cap, bool)):
            raise InstanceError(f"field 'cap' must be an integer or null, got {cap!r}")
        return cls(G, R, cap)


def empirical_exponent(inst: SdInstance) -> float:
    """``log #G / log max_r #pi_r(G)``."""
    m = inst.max_proj()
    if m <= 1:
        raise InstanceError("degenerate instance: every projection has at most one value")
    return math.log(len(inst.G)) / math.log(m)


def verify_sd(inst: SdInstance, alpha, C=1) -> bool:
    """``#G <= C * (max_r #pi_r(G))^alpha``, decided exactly for rational inputs.

    In tolerance mode the left side counts pi_{-1} classes, so fibres of size
    up to the allowed multiplicity count once.
    """
    n = len(inst.G)
    if inst.tolerance > 1:
        n = inst.G.proj_count(-1 if inst.G.p is None else inst.G.p - 1)
    if n == 0:
        return True
    m = inst.max_proj()
    lhs = [(Fraction(n), Fraction(1))]
    rhs = [(_as_fraction(C), Fraction(1)), (Fraction(m), _as_fraction(alpha))]
    return compare_monomials(lhs, rhs) <= 0
