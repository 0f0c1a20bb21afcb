"""Run configuration: plain-text ``key = value`` files plus command-line overrides."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional

from .errors import ConfigError

EXPERIMENTS = ("poisson", "convergence", "steklov", "grayscott")

# per-experiment defaults for keys left unset
_DEFAULTS = {
    "poisson": {"surface": "hemisphere", "dx": [0.05], "kappa": 1.0},
    "convergence": {"surface": "hemisphere", "dx": [0.1, 0.05, 0.025], "kappa": 1.0},
    "steklov": {"surface": "hemisphere", "dx": [0.1, 0.05, 0.025], "kappa": 0.0},
    # dx = 0.05 under-resolves the v pattern scale sqrt(Dv / (F + k)) ~ 0.025
    "grayscott": {"surface": "mobius", "dx": [0.025], "kappa": 0.0},
}


@dataclass
class RunConfig:
    experiment: str = "convergence"
    surface: Optional[str] = None
    radius: float = 1.0
    center_radius: float = 1.0
    half_width: float = 0.35
    dx: Optional[List[float]] = None
    kappa: Optional[float] = None
    conormal: str = "approx"
    method: str = "direct"
    backend: str = "auto"
    # Steklov
    n_eigs: int = 7
    shift: float = -0.1
    # Gray-Scott
    F: float = 0.010
    k: float = 0.042
    Du: float = 8e-5
    Dv: Optional[float] = None
    T: Optional[float] = None
    dt: float = 1.0
    n_patches: int = 8
    patch_radius: float = 0.1
    snapshot_times: Optional[List[float]] = None
    record_every: int = 10
    # output
    out: str = "out"
    seed: int = 42
    dump_matrices: bool = False
    vtk: bool = False

    def resolved(self) -> "RunConfig":
        """Copy with experiment-dependent defaults filled in and values validated."""
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}; choose from {', '.join(EXPERIMENTS)}")
        cfg = dataclasses.replace(self)
        for key, value in _DEFAULTS[cfg.experiment].items():
            if getattr(cfg, key) is None:
                setattr(cfg, key, value)
        if cfg.T is None:
            # presets of the two published runs
            cfg.T = 4000.0 if cfg.kappa == 0 else 10000.0
        if cfg.Dv is None:
            cfg.Dv = 0.4 * cfg.Du
        if cfg.snapshot_times is None:
            cfg.snapshot_times = [cfg.T * i / 4 for i in range(1, 5)] if cfg.experiment == "grayscott" else []
        if not cfg.dx or any(d <= 0 for d in cfg.dx):
            raise ConfigError("dx must be a non-empty list of positive values")
        if cfg.conormal not in ("approx", "analytic"):
            raise ConfigError("conormal must be 'approx' or 'analytic'")
        if cfg.method not in ("direct", "iterative"):
            raise ConfigError("method must be 'direct' or 'iterative'")
        return cfg

    def as_lines(self) -> List[str]:
        lines = []
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            if isinstance(v, list):
                v = ", ".join(repr(x) for x in v)
            lines.append(f"{f.name} = {v}")
        return lines


_FIELDS = {f.name: f for f in dataclasses.fields(RunConfig)}


def _parse_value(name: str, text: str):
    kind = str(_FIELDS[name].type)
    text = text.strip()
    if kind.startswith("Optional") and (text.lower() == "none" or (not text and "List" not in kind)):
        return None
    try:
        if "List[float]" in kind:
            return [float(t) for t in text.replace(",", " ").split()]
        if "bool" in kind:
            if text.lower() in ("1", "true", "yes", "on"):
                return True
            if text.lower() in ("0", "false", "no", "off"):
                return False
            raise ValueError(text)
        if "int" in kind:
            return int(text)
        if "float" in kind:
            return float(text)
    except ValueError as exc:
        raise ConfigError(f"bad value for {name}: {text!r}") from exc
    return text


def parse_config_text(text: str, base: Optional[RunConfig] = None) -> RunConfig:
    cfg = dataclasses.replace(base) if base is not None else RunConfig()
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in _FIELDS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        setattr(cfg, key, _parse_value(key, value))
    return cfg


def load_config(path, base: Optional[RunConfig] = None) -> RunConfig:
    return parse_config_text(Path(path).read_text(), base)


def apply_overrides(cfg: RunConfig, **overrides) -> RunConfig:
    cfg = dataclasses.replace(cfg)
    for key, value in overrides.items():
        if value is None:
            continue
        if key not in _FIELDS:
            raise ConfigError(f"unknown key {key!r}")
        setattr(cfg, key, value)
    return cfg
