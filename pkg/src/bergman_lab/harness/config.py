"""Experiment configuration: plain-text ``key = value`` files overridden by flags."""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field

from ..gaf import DEFAULT_DEGREE, DEFAULT_WINDOW

NORM_MODES = ("paper", "calibrated", "oracle")


@dataclass
class ExperimentConfig:
    name: str = "verify-all"
    master_seed: int = 7
    samples: int = 2000
    degree: int = DEFAULT_DEGREE
    window: float = DEFAULT_WINDOW
    region_center: complex = 0j
    region_radius: float = 0.4
    r_start: float = 1.0
    r_step: float = 0.25
    r_margin: float = 0.01
    grid_radial: int = 12
    grid_angular: int = 24
    norm_mode: str = "oracle"
    psi_method: str = "extrapolate"
    off_center_q: complex = 0.4 + 0j
    calibration_seed_offset: int = 1000003
    conditional_samples: int = 1000
    out: str | None = None
    format: str = "json"
    cache_dir: str | None = None
    extra: dict = field(default_factory=dict)

    def validate(self):
        if self.samples < 2:
            raise ValueError("samples must be >= 2")
        if self.degree < 1:
            raise ValueError("degree must be >= 1")
        if not 0.0 < self.window < 1.0:
            raise ValueError("window must lie in (0, 1)")
        if not self.region_radius > 0 or abs(self.region_center) + self.region_radius >= self.window:
            raise ValueError("region B must lie strictly inside the observation window")
        if self.r_step <= 0 or self.r_start < 0 or not 0 <= self.r_margin < self.window:
            raise ValueError("invalid R-grid parameters")
        if self.grid_radial < 1 or self.grid_angular < 1:
            raise ValueError("grid resolution must be >= 1")
        if self.norm_mode not in NORM_MODES:
            raise ValueError(f"norm_mode must be one of {NORM_MODES}")
        if self.psi_method not in ("extrapolate", "tail_mean"):
            raise ValueError("psi_method must be 'extrapolate' or 'tail_mean'")
        if self.format not in ("json", "csv"):
            raise ValueError("format must be json or csv")
        if abs(self.off_center_q) >= self.window:
            raise ValueError("off-center q must lie inside the window")
        return self

    @property
    def grid_shape(self):
        return (self.grid_radial, self.grid_angular)

    def to_dict(self):
        d = dataclasses.asdict(self)
        for k in ("region_center", "off_center_q"):
            d[k] = [d[k].real, d[k].imag]
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        for k in ("region_center", "off_center_q"):
            if k in d and isinstance(d[k], (list, tuple)):
                d[k] = complex(*d[k])
        return cls(**d).validate()

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))

    def replace(self, **changes):
        return dataclasses.replace(self, **changes).validate()


_FIELDS = {f.name: f for f in dataclasses.fields(ExperimentConfig)}


def _coerce(name, raw):
    f = _FIELDS[name]
    typ = f.type if isinstance(f.type, str) else getattr(f.type, "__name__", str(f.type))
    raw = raw.strip()
    if "complex" in typ:
        return complex(raw.replace(" ", ""))
    if typ == "int":
        return int(raw)
    if typ == "float":
        v = float(raw)
        if not math.isfinite(v):
            raise ValueError(f"{name} must be finite")
        return v
    if "None" in typ and raw.lower() in ("", "none"):
        return None
    return raw


def parse_config_text(text, base=None):
    """Parse ``key = value`` lines (``#`` comments) on top of ``base``."""
    cfg = base or ExperimentConfig()
    changes = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in _FIELDS or key == "extra":
            raise ValueError(f"line {lineno}: unknown key {key!r}")
        changes[key] = _coerce(key, value)
    return dataclasses.replace(cfg, **changes).validate()


def format_config_text(cfg):
    lines = []
    for name, f in _FIELDS.items():
        if name == "extra":
            continue
        v = getattr(cfg, name)
        if isinstance(v, complex):
            v = f"{v.real!r}{v.imag:+}j"
        elif isinstance(v, float):
            v = repr(v)
        lines.append(f"{name} = {'' if v is None else v}")
    return "\n".join(lines) + "\n"
