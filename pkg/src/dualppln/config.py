"""
Run configuration: JSON document, validated against a versioned schema
before anything is computed. Omitted sections and keys take the shipped
design-point defaults.
"""

from __future__ import annotations

import copy
import hashlib
import json
import math
from dataclasses import dataclass
from pathlib import Path

import jsonschema

from .errors import SchemaError
from .grating import PolingDesign
from .material import CONGRUENT_LN, MODELS, MaterialConstants, constants_from_config, model_from_config
from .waveguide import WaveguideGeometry

SCHEMA_VERSION = 1

_NUM = {"type": "number"}
_POS = {"type": "number", "exclusiveMinimum": 0}
_RANGE = {"type": "array", "items": _NUM, "minItems": 2, "maxItems": 2}
_ORDER = {"type": "array", "items": {"type": "integer"}, "minItems": 2, "maxItems": 2}
_TERMS = {
    "type": "object",
    "additionalProperties": False,
    "properties": {k: _NUM for k in ("a1", "a2", "a3", "a4", "a5", "a6", "b1", "b2", "b3", "b4", "t_ref", "t_shift")},
}
_AXIS = {
    "type": "object",
    "additionalProperties": False,
    "required": ["range", "steps"],
    "properties": {"range": _RANGE, "steps": {"type": "integer", "minimum": 1}},
}


def _section(props, required=()):
    return {"type": "object", "additionalProperties": False, "properties": props, "required": list(required)}


SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "additionalProperties": False,
    "required": ["schema_version", "waves"],
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "material": _section({
            "sellmeier": {"enum": sorted(MODELS)},
            "overrides": _section({"ordinary": _TERMS, "extraordinary": _TERMS}),
            "wavelength_range": _RANGE,
            "temperature_range": _RANGE,
            "d31": _POS,
            "gamma51": _POS,
        }),
        "geometry": _section({
            "width_um": _POS,
            "depth_um": _POS,
            "dn_max": {"type": "number", "minimum": 0, "exclusiveMaximum": 0.1},
            "lateral_diffusion_um": _POS,
        }),
        "poling": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "periods_um": {"type": "array", "items": _POS, "minItems": 2, "maxItems": 2},
                "solve": {"const": True},
                "duty": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
                         "minItems": 2, "maxItems": 2},
                "length_cm": _POS,
                "orders": {"type": "array", "items": _ORDER, "minItems": 3, "maxItems": 3},
                "coincidence_cutoff": {"type": ["integer", "null"], "minimum": 1},
            },
            "oneOf": [{"required": ["periods_um"]}, {"required": ["solve"]}],
        },
        "waves": _section({
            "pump_um": _POS,
            "signal_um": _POS,
            "temperature_C": _NUM,
        }, required=("pump_um", "signal_um", "temperature_C")),
        "eo": _section({
            "field_V_per_m": {"oneOf": [{"type": "number", "minimum": 0}, {"const": "solve"}]},
            "eta_target": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
            "length_cm": _POS,
            "delta_rad_per_m": {"oneOf": [_NUM, {"const": "design"}]},
            "F_EO": {"oneOf": [_POS, {"const": "overlap"}]},
            "kappa_calibration": _section({"kappa_rad_per_m": _POS, "at_field_V_per_m": _POS},
                                          required=("kappa_rad_per_m", "at_field_V_per_m")),
            "trace_points": {"type": "integer", "minimum": 2},
        }),
        "spectrum": _section({
            "sinc": {"enum": ["physical", "normalized"]},
            "points": {"type": "integer", "minimum": 11},
            "zeros": _POS,
            "dip_zeros": _POS,
            "dip_points_per_zero": {"type": "integer", "minimum": 4},
            "tau_points": {"type": "integer", "minimum": 3},
            "tau_span": _POS,
        }),
        "state": _section({
            "weighting": {"enum": ["integrated", "perfect"]},
            "impurity": {"type": "boolean"},
            "geometry_sweep": {"type": "array", "items": _POS, "minItems": 1},
        }),
        "sweep": _section({
            "kind": {"enum": ["pump", "temperature"]},
            "signal_um": _AXIS,
            "second": _AXIS,
            "eo_field_V_per_m": _AXIS,
            "eo_length_cm": _AXIS,
        }),
        "output": _section({
            "directory": {"type": "string", "minLength": 1},
            "formats": {"type": "array", "items": {"enum": ["csv", "json", "svg"]}, "uniqueItems": True},
        }),
    },
}

DEFAULTS = {
    "schema_version": SCHEMA_VERSION,
    "material": {"sellmeier": CONGRUENT_LN.name, "d31": 4.6, "gamma51": 32.6},
    "geometry": {"width_um": 10.0, "depth_um": 10.0, "dn_max": 0.003, "lateral_diffusion_um": 5.0},
    "poling": {"duty": [0.5, 0.5], "length_cm": 5.0, "orders": [[3, 1], [3, -1], [1, 1]],
               "coincidence_cutoff": None},
    "waves": {"pump_um": 0.7335, "signal_um": 1.6568, "temperature_C": 25.0},
    "eo": {"field_V_per_m": 4.5e5, "eta_target": 0.9958, "length_cm": 3.0, "delta_rad_per_m": 0.0,
           "F_EO": "overlap", "trace_points": 201},
    "spectrum": {"sinc": "physical", "points": 4001, "zeros": 8.0, "dip_zeros": 400.0,
                 "dip_points_per_zero": 16, "tau_points": 601, "tau_span": 3.0},
    "state": {"weighting": "integrated", "impurity": False, "geometry_sweep": [0.8, 1.0, 1.2]},
    "sweep": {
        "kind": "pump",
        "signal_um": {"range": [1.55, 1.75], "steps": 201},
        "second": {"range": [0.70, 0.77], "steps": 201},
        "eo_field_V_per_m": {"range": [0.0, 1.0e6], "steps": 101},
        "eo_length_cm": {"range": [1.0, 5.0], "steps": 5},
    },
    "output": {"directory": "dualppln_out", "formats": ["csv", "json", "svg"]},
}

DEFAULT_PERIODS = (25.84, 154.96)
TEMPERATURE_SECOND_AXIS = {"range": [20.0, 120.0], "steps": 201}


def _merge(base, extra):
    out = copy.deepcopy(base)
    for k, v in extra.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


@dataclass(frozen=True)
class RunConfig:
    """Validated configuration with defaults applied."""

    raw: dict

    def section(self, name) -> dict:
        return self.raw[name]

    @property
    def digest(self) -> str:
        return hashlib.sha256(json.dumps(self.raw, sort_keys=True).encode()).hexdigest()

    @property
    def model(self):
        return model_from_config(self.raw["material"])

    @property
    def constants(self) -> MaterialConstants:
        return constants_from_config(self.raw["material"])

    @property
    def geometry(self) -> WaveguideGeometry:
        g = self.raw["geometry"]
        return WaveguideGeometry(g["width_um"], g["depth_um"], g["dn_max"], g["lateral_diffusion_um"])

    @property
    def waves(self):
        w = self.raw["waves"]
        return w["pump_um"], w["signal_um"], w["temperature_C"]

    @property
    def orders(self):
        return tuple(tuple(o) for o in self.raw["poling"]["orders"])

    @property
    def solve_periods(self) -> bool:
        return bool(self.raw["poling"].get("solve", False))

    def poling(self, periods=None) -> PolingDesign:
        p = self.raw["poling"]
        p1, p2 = periods if periods is not None else p["periods_um"]
        return PolingDesign(p1, p2, p["duty"][0], p["duty"][1], p["length_cm"])


def _check_axis(axis, path):
    lo, hi = axis["range"]
    if not (math.isfinite(lo) and math.isfinite(hi)):
        raise SchemaError("axis bounds must be finite", path + ("range",))
    if axis["steps"] > 1 and not hi > lo:
        raise SchemaError(f"axis range [{lo}, {hi}] has zero or negative width", path + ("range",))
    if axis["steps"] == 1 and lo != hi:
        raise SchemaError("a one-step axis needs lo == hi", path + ("range",))


def validate(doc) -> RunConfig:
    """Schema-check ``doc``, apply defaults and run the semantic checks."""
    if not isinstance(doc, dict):
        raise SchemaError("configuration must be a JSON object")
    validator = jsonschema.Draft202012Validator(SCHEMA)
    errors = sorted(validator.iter_errors(doc), key=lambda e: (len(e.absolute_path), list(map(str, e.absolute_path))))
    if errors:
        err = errors[0]
        path = tuple(err.absolute_path)
        if err.validator == "required":
            missing = [k for k in err.validator_value if k not in err.instance]
            path = path + tuple(missing[:1])
        msg = err.message
        if err.validator == "oneOf" and path == ("poling",):
            msg = "poling needs exactly one of 'periods_um' or 'solve'"
        raise SchemaError(msg, path)
    if doc.get("sweep", {}).get("kind") == "temperature" and "second" not in doc.get("sweep", {}):
        doc = _merge(doc, {"sweep": {"second": TEMPERATURE_SECOND_AXIS}})
    raw = _merge(DEFAULTS, doc)
    if "periods_um" not in raw["poling"] and "solve" not in raw["poling"]:
        raw["poling"]["periods_um"] = list(DEFAULT_PERIODS)
    if "periods_um" in raw["poling"]:
        p1, p2 = raw["poling"]["periods_um"]
        if not p1 < p2:
            raise SchemaError("need period1 < period2", ("poling", "periods_um"))
    for name in ("signal_um", "second", "eo_field_V_per_m", "eo_length_cm"):
        _check_axis(raw["sweep"][name], ("sweep", name))
    for key in ("wavelength_range", "temperature_range"):
        if key in raw["material"]:
            lo, hi = raw["material"][key]
            if not hi > lo:
                raise SchemaError("range has zero or negative width", ("material", key))
    lam_p, lam_s, _ = raw["waves"]["pump_um"], raw["waves"]["signal_um"], raw["waves"]["temperature_C"]
    if not lam_s > lam_p:
        raise SchemaError("signal wavelength must exceed the pump wavelength", ("waves", "signal_um"))
    return RunConfig(raw)


def load_config(path) -> RunConfig:
    """Read and validate a JSON config file (OSError propagates for I/O trouble)."""
    text = Path(path).read_text(encoding="utf-8")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"not valid JSON: {exc}") from exc
    return validate(doc)


def example_config() -> dict:
    """The shipped design-point configuration."""
    return {
        "schema_version": SCHEMA_VERSION,
        "material": {"sellmeier": CONGRUENT_LN.name, "d31": 4.6, "gamma51": 32.6},
        "geometry": {"width_um": 10.0, "depth_um": 10.0, "dn_max": 0.003, "lateral_diffusion_um": 5.0},
        "poling": {"periods_um": [25.84, 154.96], "duty": [0.5, 0.5], "length_cm": 5.0,
                   "orders": [[3, 1], [3, -1], [1, 1]]},
        "waves": {"pump_um": 0.7335, "signal_um": 1.6568, "temperature_C": 25.0},
        "eo": {"field_V_per_m": 4.5e5, "eta_target": 0.9958, "length_cm": 3.0, "delta_rad_per_m": 0.0,
               "F_EO": "overlap"},
        "output": {"directory": "dualppln_out", "formats": ["csv", "json", "svg"]},
    }
