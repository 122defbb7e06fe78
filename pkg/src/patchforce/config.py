"""Run configuration: JSON with unit-suffixed keys, normalised to SI.

A key such as ``"d_um": [1, 2]`` is stored as ``"d_m": [1e-6, 2e-6]``.  Keys
without a recognised unit suffix (counts, seeds, dimensionless numbers,
names) are kept as given.  Builders below turn blocks into module inputs and
report problems with the JSON path of the offending field.
"""

from __future__ import annotations

import copy
import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DomainError
from .spectra import BandLimitedSpectrum, GaussianSpectrum, TabulatedSpectrum

# suffix -> (canonical suffix, factor to SI); matched longest first
UNITS = {
    "_m": ("_m", 1.0),
    "_cm": ("_m", 1e-2),
    "_mm": ("_m", 1e-3),
    "_um": ("_m", 1e-6),
    "_nm": ("_m", 1e-9),
    "_V": ("_V", 1.0),
    "_mV": ("_V", 1e-3),
    "_per_m": ("_per_m", 1.0),
    "_per_cm": ("_per_m", 1e2),
    "_per_mm": ("_per_m", 1e3),
    "_per_um": ("_per_m", 1e6),
    "_m2": ("_m2", 1.0),
    "_cm2": ("_m2", 1e-4),
    "_mm2": ("_m2", 1e-6),
    "_um2": ("_m2", 1e-12),
    "_N": ("_N", 1.0),
    "_nN": ("_N", 1e-9),
    "_pN": ("_N", 1e-12),
    "_V_per_m": ("_V_per_m", 1.0),
    "_mV_per_um": ("_V_per_m", 1e3),
    "_mV_per_mm": ("_V_per_m", 1.0),
    "_V_per_m2": ("_V_per_m2", 1.0),
    "_mV_per_mm2": ("_V_per_m2", 1e3),
    "_mV_per_um2": ("_V_per_m2", 1e9),
}
_SUFFIXES = sorted(UNITS, key=len, reverse=True)


class ConfigError(DomainError):
    def __init__(self, path, message):
        super().__init__(f"{path}: {message}")
        self.path = path


def split_unit(key):
    """``"d_um"`` -> ``("d", "_um")``; ``(key, None)`` when there is no unit."""
    for suffix in _SUFFIXES:
        if key.endswith(suffix) and len(key) > len(suffix):
            return key[: -len(suffix)], suffix
    return key, None


def _scale(value, factor, path):
    if isinstance(value, bool):
        raise ConfigError(path, "expected a number, got a boolean")
    if isinstance(value, (int, float)):
        return float(value) * factor
    if isinstance(value, list):
        return [_scale(v, factor, f"{path}[{i}]") for i, v in enumerate(value)]
    raise ConfigError(path, f"expected a number or list of numbers, got {type(value).__name__}")


def to_si(obj, path="$"):
    """Recursively rename unit-suffixed keys to their SI suffix and scale values."""
    if isinstance(obj, list):
        return [to_si(v, f"{path}[{i}]") for i, v in enumerate(obj)]
    if not isinstance(obj, dict):
        return obj
    out = {}
    for key, value in obj.items():
        sub = f"{path}.{key}"
        base, suffix = split_unit(key)
        if suffix is None or isinstance(value, dict):
            new_key, new_value = key, to_si(value, sub)
        else:
            canonical, factor = UNITS[suffix]
            new_key, new_value = base + canonical, _scale(value, factor, sub)
        if new_key in out:
            raise ConfigError(sub, f"duplicates {new_key!r} after unit normalisation")
        out[new_key] = new_value
    return out


@dataclass(frozen=True)
class RunConfig:
    command: str
    params: dict = field(default_factory=dict)
    base_dir: str = "."

    @classmethod
    def from_dict(cls, raw, command=None, base_dir="."):
        if not isinstance(raw, dict):
            raise ConfigError("$", "configuration must be a JSON object")
        raw = copy.deepcopy(raw)
        cmd = raw.pop("command", command)
        if command is not None and cmd != command:
            raise ConfigError("$.command", f"config is for {cmd!r}, not {command!r}")
        return cls(cmd, to_si(raw), str(base_dir))

    @classmethod
    def load(cls, path, command=None):
        path = Path(path)
        try:
            raw = json.loads(path.read_text(encoding="utf-8"))
        except FileNotFoundError:
            raise ConfigError(str(path), "config file not found") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(str(path), f"invalid JSON ({exc})") from None
        return cls.from_dict(raw, command, path.parent)

    def to_dict(self):
        return {"command": self.command, **copy.deepcopy(self.params)}

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    def config_hash(self):
        return hashlib.sha256(self.to_json().encode("utf-8")).hexdigest()[:16]

    def with_params(self, **updates):
        params = copy.deepcopy(self.params)
        params.update(updates)
        return RunConfig(self.command, params, self.base_dir)

    def __eq__(self, other):
        if not isinstance(other, RunConfig):
            return NotImplemented
        return self.to_json() == other.to_json()

    __hash__ = None

    def resolve(self, name):
        p = Path(name)
        return p if p.is_absolute() else Path(self.base_dir) / p


# --- typed accessors -------------------------------------------------------

def block(params, key, path="$", required=True):
    if key not in params:
        if required:
            raise ConfigError(f"{path}.{key}", "required block is missing")
        return None
    value = params[key]
    if not isinstance(value, dict):
        raise ConfigError(f"{path}.{key}", "expected an object")
    return value


def number(params, key, path="$", default=None, positive=False, nonnegative=False):
    sub = f"{path}.{key}"
    if key not in params:
        if default is None:
            raise ConfigError(sub, "required field is missing")
        return default
    value = params[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
        raise ConfigError(sub, f"expected a finite number, got {value!r}")
    if positive and not value > 0:
        raise ConfigError(sub, f"must be > 0, got {value}")
    if nonnegative and not value >= 0:
        raise ConfigError(sub, f"must be >= 0, got {value}")
    return float(value)


def integer(params, key, path="$", default=None, minimum=None):
    sub = f"{path}.{key}"
    if key not in params:
        if default is None:
            raise ConfigError(sub, "required field is missing")
        return default
    value = params[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)) or value != int(value):
        raise ConfigError(sub, f"expected an integer, got {value!r}")
    if minimum is not None and value < minimum:
        raise ConfigError(sub, f"must be >= {minimum}, got {value}")
    return int(value)


def number_list(params, key, path="$", default=None):
    sub = f"{path}.{key}"
    if key not in params:
        if default is None:
            raise ConfigError(sub, "required field is missing")
        return np.asarray(default, dtype=float)
    value = params[key]
    if not isinstance(value, list):
        raise ConfigError(sub, "expected a list of numbers")
    if not value:
        raise ConfigError(sub, "list is empty")
    for i, v in enumerate(value):
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
            raise ConfigError(f"{sub}[{i}]", f"expected a finite number, got {v!r}")
    return np.asarray(value, dtype=float)


def separations(params, path="$", default=None):
    """Either ``d_m`` (explicit list) or ``d_min_m``/``d_max_m``/``points`` (log spaced)."""
    if "d_m" in params:
        d = number_list(params, "d_m", path)
    elif "d_min_m" in params or "d_max_m" in params:
        lo = number(params, "d_min_m", path, positive=True)
        hi = number(params, "d_max_m", path, positive=True)
        pts = integer(params, "points", path, default=20, minimum=1)
        if hi < lo:
            raise ConfigError(f"{path}.d_max_m", "must be >= d_min_m")
        d = np.geomspace(lo, hi, pts)
    elif default is not None:
        d = np.asarray(default, dtype=float)
    else:
        raise ConfigError(f"{path}.d_m", "required field is missing (or give d_min/d_max/points)")
    if np.any(d <= 0):
        raise ConfigError(f"{path}.d_m", "separations must be > 0")
    d = np.unique(d)
    return d


def build_spectrum(spec, path, cfg: RunConfig):
    variant = spec.get("variant")
    try:
        if variant == "gaussian":
            return GaussianSpectrum(number(spec, "v0_V", path, nonnegative=True),
                                    number(spec, "lambda_m", path, positive=True))
        if variant == "band_limited":
            k_min = number(spec, "k_min_per_m", path, nonnegative=True)
            k_max = number(spec, "k_max_per_m", path, positive=True)
            if "vrms_V" in spec:
                return BandLimitedSpectrum(number(spec, "vrms_V", path, nonnegative=True), k_min, k_max)
            return BandLimitedSpectrum.from_plate_amplitude(
                number(spec, "plate_amplitude_V", path, nonnegative=True), k_min, k_max)
        if variant == "tabulated":
            from .io import read_spectrum_csv

            if not isinstance(spec.get("file"), str):
                raise ConfigError(f"{path}.file", "expected a CSV path")
            single = bool(spec.get("single_plate", False))
            try:
                return read_spectrum_csv(cfg.resolve(spec["file"]), single_plate=single)
            except FileNotFoundError:
                raise ConfigError(f"{path}.file", f"file not found: {spec['file']}") from None
    except ConfigError:
        raise
    except DomainError as exc:
        raise ConfigError(path, str(exc)) from None
    raise ConfigError(f"{path}.variant", f"expected gaussian, band_limited or tabulated, got {variant!r}")
