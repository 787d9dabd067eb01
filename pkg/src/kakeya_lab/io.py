"""Experiment configs, reports and instance files."""

from __future__ import annotations

import csv
import hashlib
import io as _io
import json
import os
from dataclasses import asdict, dataclass, field

from .certificate import _jsonable
from .configs import ConfigError, dumps
from .kakeya_grid.geometry import GridError, LineFamily
from .kakeya_grid.shading import Shading
from .rng import PRNG_NAME
from .sd_engine.instance import InstanceError, SdInstance
from .sd_engine.search import DEFAULT_BUDGET
from .slope_field import SlopeError

FORMATS = ("json", "csv")


class InputError(ValueError):
    """Malformed or invariant-violating input; the CLI maps it to exit code 2."""


@dataclass
class ExperimentConfig:
    command: str
    params: dict = field(default_factory=dict)
    inputs: list = field(default_factory=list)
    seed: int = 0
    budget: int = DEFAULT_BUDGET
    format: str = "json"

    def __post_init__(self):
        if self.format not in FORMATS:
            raise InputError(f"format must be one of {FORMATS}, got {self.format!r}")
        if self.seed is None:
            self.seed = 0
        if self.budget is None:
            self.budget = DEFAULT_BUDGET

    def canonical(self) -> str:
        return json.dumps(_jsonable(asdict(self)), sort_keys=True, separators=(",", ":"))

    def hash(self) -> str:
        return hashlib.sha256(self.canonical().encode()).hexdigest()


@dataclass
class Report:
    config: ExperimentConfig
    payload: dict
    certificates: list = field(default_factory=list)
    wall_clock: float = 0.0
    exit_code: int = 0

    def to_json(self) -> dict:
        return {
            "command": self.config.command,
            "config": _jsonable(asdict(self.config)),
            "config_hash": self.config.hash(),
            "prng": PRNG_NAME,
            "payload": _jsonable(self.payload),
            "payload_hash": payload_hash(self.payload),
            "certificates": list(self.certificates),
            "wall_clock": self.wall_clock,
            "exit_code": self.exit_code,
        }


def payload_hash(payload) -> str:
    text = json.dumps(_jsonable(payload), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()


def _read_json(path):
    if not os.path.exists(path):
        raise InputError(f"{path}: no such file")
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as e:
        raise InputError(f"{path}: invalid JSON at line {e.lineno}, column {e.colno}: {e.msg}") from None


def load_instance(path, shading_path=None):
    """Read an SD instance, or a line family with an optional shading.

    A file with a ``lines`` field is a line family; its shading comes from
    ``shading_path`` or an inline ``shading`` object.  Everything else is read
    as an SD instance (a configuration plus ``slopes`` and ``cap``).
    """
    obj = _read_json(path)
    if not isinstance(obj, dict):
        raise InputError(f"{path}: top level must be a JSON object")
    try:
        if "lines" in obj:
            F = LineFamily.from_json(obj)
            sh = obj.get("shading")
            if shading_path is not None:
                sh = _read_json(shading_path)
            Y = Shading.from_json(F, sh) if sh is not None else None
            return F, Y
        if "slopes" not in obj:
            obj = dict(obj, slopes=[])
        return SdInstance.from_json(obj)
    except (ConfigError, InstanceError, SlopeError, GridError) as e:
        raise InputError(f"{path}: {e}") from None


def save_instance(obj, path):
    """Canonical JSON; loading and saving again reproduces the bytes."""
    if isinstance(obj, tuple):
        F, Y = obj
        data = F.to_json()
        if Y is not None:
            data["shading"] = Y.to_json()
    else:
        data = obj.to_json()
    with open(path, "w") as fh:
        fh.write(dumps(data))


def rows_csv(columns, rows) -> str:
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([r.get(c, "") for c in columns])
    return buf.getvalue()


def _flat_rows(payload):
    """Table view of a payload: its ``rows`` list, else one row of scalars."""
    rows = payload.get("rows")
    if isinstance(rows, list) and rows and isinstance(rows[0], dict):
        cols = list(payload.get("columns") or rows[0].keys())
        return cols, rows
    scalars = {k: v for k, v in payload.items() if not isinstance(v, (dict, list))}
    return sorted(scalars), ([scalars] if scalars else [])


def render(report: Report, fmt: str = "json") -> str:
    if fmt == "json":
        return dumps(report.to_json())
    if fmt == "csv":
        cols, rows = _flat_rows(_jsonable(report.payload))
        return rows_csv(cols, rows)
    raise InputError(f"unknown format {fmt!r}")


def emit_report(report: Report, fmt: str = "json", path=None) -> str:
    text = render(report, fmt)
    if path is None or path == "-":
        return text
    with open(path, "w") as fh:
        fh.write(text)
    return text
