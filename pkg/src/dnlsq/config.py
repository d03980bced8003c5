"""Run configuration: JSON documents validated against a fixed schema.

A config has six sections (lattice, soliton, quantum, integration,
experiment, output). Missing keys take the defaults below, unknown keys are
rejected, and ``--set section.key=value`` overrides are applied before
validation. The schema is documented in ``docs/config.md``.
"""
from __future__ import annotations

import copy
import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import jsonschema

from .core import DEFAULT_N_SITES, DEFAULT_STEP, SystemParams
from .errors import ConfigError
from .soliton import SolitonKind

MODES = ("soliton", "propagate", "enmap", "sweep")
FORMATS = ("csv", "json", "sites", "snapshot")

DEFAULTS = {
    "lattice": {"n_sites": DEFAULT_N_SITES, "boundary": "open"},
    "soliton": {"kind": "twisted", "omega": 10.0},
    "quantum": {"L": 0.01, "gamma": 0.0},
    "integration": {"z_max": 1.5, "step": DEFAULT_STEP, "output_stride": 10,
                    "adaptive": False},
    "experiment": {"mode": "propagate", "pair": None, "sweep_grid": None,
                   "err_cap": 0.1, "workers": 1},
    "output": {"directory": "out", "formats": ["csv", "json"]},
}

_num = {"type": "number"}
_pos = {"type": "number", "exclusiveMinimum": 0}
_nonneg = {"type": "number", "minimum": 0}


def _section(props, required=()):
    return {"type": "object", "properties": props, "required": list(required),
            "additionalProperties": False}


SCHEMA = {
    "$schema": "http://json-schema.org/draft-07/schema#",
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "lattice": _section({
            "n_sites": {"type": "integer", "minimum": 2},
            "boundary": {"const": "open"},
        }),
        "soliton": _section({"kind": {"type": "string"}, "omega": _num}),
        "quantum": _section({"L": _nonneg, "gamma": _nonneg}),
        "integration": _section({
            "z_max": _pos,
            "step": _pos,
            "output_stride": {"type": "integer", "minimum": 1},
            "adaptive": {"type": "boolean"},
        }),
        "experiment": _section({
            "mode": {"enum": list(MODES)},
            "pair": {"oneOf": [
                {"type": "null"},
                {"type": "array", "items": {"type": "integer"}, "minItems": 2, "maxItems": 2},
            ]},
            "sweep_grid": {"oneOf": [
                {"type": "null"},
                _section({
                    "L": {"type": "array", "items": _nonneg, "minItems": 1},
                    "gamma": {"type": "array", "items": _nonneg, "minItems": 1},
                }, required=("L", "gamma")),
            ]},
            "err_cap": _pos,
            "workers": {"type": "integer", "minimum": 1},
        }),
        "output": _section({
            "directory": {"type": "string", "minLength": 1},
            "formats": {"type": "array", "items": {"enum": list(FORMATS)},
                        "uniqueItems": True},
        }),
    },
}


def _merge(base: dict, extra: dict) -> dict:
    out = copy.deepcopy(base)
    for key, val in extra.items():
        if isinstance(val, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], val)
        else:
            out[key] = copy.deepcopy(val)
    return out


def parse_override(text: str) -> tuple[list[str], object]:
    """Split ``section.key=value``; the value is parsed as JSON when possible."""
    if "=" not in text:
        raise ConfigError(f"override {text!r} is not of the form section.key=value")
    path, raw = text.split("=", 1)
    keys = [k for k in path.strip().split(".") if k]
    if not keys:
        raise ConfigError(f"override {text!r} has an empty key")
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return keys, value


def apply_overrides(doc: dict, overrides) -> dict:
    doc = copy.deepcopy(doc)
    for item in overrides or ():
        keys, value = parse_override(item)
        node = doc
        for k in keys[:-1]:
            node = node.setdefault(k, {})
            if not isinstance(node, dict):
                raise ConfigError(f"override {item!r} descends into a non-object")
        node[keys[-1]] = value
    return doc


@dataclass(frozen=True)
class RunConfig:
    """A validated configuration with all defaults filled in."""

    data: dict

    def __getitem__(self, section: str) -> dict:
        return self.data[section]

    @property
    def mode(self) -> str:
        return self.data["experiment"]["mode"]

    @property
    def kind(self) -> SolitonKind:
        return SolitonKind.parse(self.data["soliton"]["kind"])

    def system_params(self, **changes) -> SystemParams:
        d = self.data
        p = SystemParams(
            n_sites=d["lattice"]["n_sites"],
            omega=float(d["soliton"]["omega"]),
            quantum_scale=float(d["quantum"]["L"]),
            absorption=float(d["quantum"]["gamma"]),
            z_max=float(d["integration"]["z_max"]),
            step=float(d["integration"]["step"]),
        )
        return p.with_(**changes) if changes else p

    def canonical_json(self) -> str:
        return json.dumps(self.data, sort_keys=True, separators=(",", ":"))

    def hash(self) -> str:
        """Digest of the keys that affect results.

        The output section and the worker count are left out, so the same
        computation hashes the same wherever and however it is run.
        """
        d = {k: v for k, v in self.data.items() if k != "output"}
        d["experiment"] = {k: v for k, v in d["experiment"].items() if k != "workers"}
        text = json.dumps(d, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()[:16]

    def with_(self, overrides) -> "RunConfig":
        return build_config(apply_overrides(self.data, overrides))


def build_config(doc: dict) -> RunConfig:
    """Validate ``doc`` (partial documents are completed with DEFAULTS)."""
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    try:
        jsonschema.validate(doc, SCHEMA)
    except jsonschema.ValidationError as exc:
        where = ".".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"{where}: {exc.message}") from None
    data = _merge(DEFAULTS, doc)
    jsonschema.validate(data, SCHEMA)
    _check_semantics(data)
    return RunConfig(data)


def _check_semantics(d: dict):
    try:
        SolitonKind.parse(d["soliton"]["kind"])
    except ValueError as exc:
        raise ConfigError(f"soliton.kind: {exc}") from None
    n = d["lattice"]["n_sites"]
    pair = d["experiment"]["pair"]
    if pair is not None:
        k, l = pair
        if not (0 <= k < n and 0 <= l < n) or k == l:
            raise ConfigError(f"experiment.pair: need two distinct sites in 0..{n - 1}, got {pair}")
    if d["experiment"]["mode"] == "sweep" and d["experiment"]["sweep_grid"] is None:
        raise ConfigError("experiment.sweep_grid is required in sweep mode")
    integ = d["integration"]
    if integ["step"] > integ["z_max"]:
        raise ConfigError("integration.step must not exceed integration.z_max")


def load_config(path, overrides=()) -> RunConfig:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {p}: {exc.strerror}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{p}: invalid JSON ({exc})") from None
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    return build_config(apply_overrides(doc, overrides))
