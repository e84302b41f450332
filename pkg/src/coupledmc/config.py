"""Flat key-value experiment configuration.

Config files are plain text: one ``key = value`` per line, ``#`` comments,
dotted sections (``model.sigma = 1.0``).  Command-line flags override file
values.  Models, observables and couplings are referenced by name:

    potentials    gaussian(sigma), double_well(a, b), cauchy
    observables   linear, quadratic, mixed(c1, c2), norm_sq(scale),
                  norm_sq_plus_linear(c1, c2)
    couplings     independent, synchronous, mirror, symmetric, poisson,
                  observable_grad (pairs); pairwise_fixed / pairwise_sorted
                  (ensembles); independent, mirror_flip, symmetric_flip,
                  poisson_flip (zigzag)
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from . import models
from .errors import ConfigurationError

__all__ = ["ExperimentConfig", "parse_config_text", "load_config"]

EXPERIMENTS = (
    "poisson",
    "delta-sigma",
    "langevin",
    "zigzag",
    "variance-sweep",
    "sort-compare",
    "ot-compare",
    "spectral",
)


def parse_config_text(text: str) -> dict[str, str]:
    """Parse ``key = value`` lines; later duplicates win."""
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out


@dataclass
class ExperimentConfig:
    """Typed view over the flat key-value mapping."""

    experiment: str
    values: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigurationError(
                f"unknown experiment {self.experiment!r}; choose from {EXPERIMENTS}"
            )

    # -- raw access ---------------------------------------------------
    def get(self, key: str, default=None) -> Optional[str]:
        return self.values.get(key, default)

    def get_float(self, key: str, default: Optional[float] = None) -> float:
        raw = self.values.get(key)
        if raw is None:
            if default is None:
                raise ConfigurationError(f"missing config key {key!r}")
            return default
        try:
            return float(raw)
        except ValueError as exc:
            raise ConfigurationError(f"key {key!r}: not a number: {raw!r}") from exc

    def get_int(self, key: str, default: Optional[int] = None) -> int:
        value = self.get_float(key, None if default is None else float(default))
        if value != int(value):
            raise ConfigurationError(f"key {key!r}: expected integer, got {value}")
        return int(value)

    def get_positive(self, key: str, default: Optional[float] = None) -> float:
        value = self.get_float(key, default)
        if value <= 0:
            raise ConfigurationError(f"key {key!r}: must be positive, got {value}")
        return value

    def get_list(self, key: str, default: Optional[str] = None) -> list[str]:
        raw = self.values.get(key, default)
        if raw is None:
            raise ConfigurationError(f"missing config key {key!r}")
        return [item.strip() for item in raw.split(",") if item.strip()]

    def get_float_list(self, key: str, default: Optional[str] = None) -> list[float]:
        return [float(v) for v in self.get_list(key, default)]

    # -- resolution ----------------------------------------------------
    def build_model(self):
        kind = self.get("model.kind", "gaussian")
        grid = self.get_int("model.grid", 2001)
        if kind == "gaussian":
            return models.build_gaussian_model(
                sigma=self.get_positive("model.sigma", 1.0),
                domain_halfwidth=self.get_positive("model.halfwidth", 8.0),
                grid_size=grid,
            )
        if kind == "double_well":
            return models.build_double_well_model(
                a=self.get_positive("model.a", 1.0),
                b=self.get_float("model.b", 2.0),
                domain_halfwidth=(
                    self.get_positive("model.halfwidth") if "model.halfwidth" in self.values else None
                ),
                grid_size=grid,
            )
        if kind == "cauchy":
            return models.build_cauchy_model(
                domain_halfwidth=self.get_positive("model.halfwidth", 2000.0),
                grid_size=self.get_int("model.grid", 400001),
            )
        if kind == "gaussian_nd":
            return models.build_gaussian_model_nd(
                dim=self.get_int("model.dim", 10), sigma=self.get_positive("model.sigma", 1.0)
            )
        raise ConfigurationError(f"unknown model kind {kind!r}")

    def build_observable(self, model):
        kind = self.get("observable.kind", "linear")
        if isinstance(model, models.TargetModelND):
            if kind == "norm_sq":
                return models.norm_sq_observable(model, scale=self.get_float("observable.scale", 0.5))
            if kind == "norm_sq_plus_linear":
                return models.norm_sq_plus_linear_observable(
                    model,
                    c1=self.get_float("observable.c1", 5.0),
                    c2=self.get_float("observable.c2", 1.0),
                )
            raise ConfigurationError(f"observable {kind!r} not defined for d-dimensional targets")
        if kind == "linear":
            return models.linear_observable(model)
        if kind == "quadratic":
            return models.quadratic_observable(model)
        if kind == "mixed":
            return models.mixed_observable(
                model, c1=self.get_float("observable.c1", 1.0), c2=self.get_float("observable.c2", -1.0)
            )
        raise ConfigurationError(f"unknown observable kind {kind!r}")

    def config_hash(self) -> str:
        canon = "\n".join(f"{k} = {self.values[k]}" for k in sorted(self.values))
        payload = f"experiment = {self.experiment}\n{canon}"
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:16]


def load_config(
    path: Optional[str],
    experiment: Optional[str] = None,
    overrides: Optional[dict[str, str]] = None,
) -> ExperimentConfig:
    """Load a config file (optional) and apply overrides on top."""
    values: dict[str, str] = {}
    if path is not None:
        p = Path(path)
        if not p.is_file():
            raise ConfigurationError(f"config file not found: {p}")
        values.update(parse_config_text(p.read_text(encoding="utf-8")))
    if overrides:
        values.update(overrides)
    exp = experiment or values.get("experiment")
    if exp is None:
        raise ConfigurationError("no experiment selected (config key 'experiment' or subcommand)")
    values.pop("experiment", None)
    return ExperimentConfig(experiment=exp, values=values)
