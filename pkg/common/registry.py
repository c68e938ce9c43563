# common/registry.py
from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, List

import numpy as np

from common.errors import ArgumentError, ConfigError
from common.models import ManifoldDescriptor, diagnose

DEFAULT_PRESETS = Path(__file__).resolve().parent.parent / "data" / "manifolds.json"

MetricFn = Callable[..., np.ndarray]


# ---------- Named custom metrics (code lives here, configs only name them) ----------

@dataclass(frozen=True)
class MetricEntry:
    name: str
    fn: MetricFn                      # (x[..., n], **params) -> g[..., n, n]
    defaults: Dict[str, float] = field(default_factory=dict)
    description: str = ""

    def __call__(self, x: np.ndarray, **params: float) -> np.ndarray:
        return self.fn(np.asarray(x, dtype=float), **{**self.defaults, **params})


_METRICS: Dict[str, MetricEntry] = {}


def register_metric(name: str, defaults: Dict[str, float] | None = None, description: str = ""):
    def deco(fn: MetricFn) -> MetricFn:
        _METRICS[name] = MetricEntry(name, fn, dict(defaults or {}), description)
        return fn
    return deco


def get_metric(name: str) -> MetricEntry:
    try:
        return _METRICS[name]
    except KeyError:
        raise ArgumentError(f"unknown metric '{name}' (known: {', '.join(list_metrics())})") from None


def list_metrics() -> List[str]:
    return sorted(_METRICS)


@register_metric("gaussian-bump", defaults={"bump": 0.5},
                 description="conformal, phi = 1 + bump*exp(-|x|^2)")
def _gaussian_bump(x: np.ndarray, bump: float) -> np.ndarray:
    n = x.shape[-1]
    phi = 1.0 + bump * np.exp(-np.sum(x * x, axis=-1))
    return phi[..., None, None] * np.eye(n)


@register_metric("anisotropic", defaults={"stretch": 1.0},
                 description="diagonal, g_ii = 1 + stretch*x_(i+1)^2")
def _anisotropic(x: np.ndarray, stretch: float) -> np.ndarray:
    n = x.shape[-1]
    diag = 1.0 + stretch * np.roll(x, -1, axis=-1) ** 2
    g = np.zeros(x.shape + (n,))
    idx = np.arange(n)
    g[..., idx, idx] = diag
    return g


# ---------- Manifold presets (JSON file) ----------

def registry_path() -> Path:
    """NONDEG_REGISTRY_PATH overrides the bundled data/manifolds.json."""
    return Path(os.getenv("NONDEG_REGISTRY_PATH") or DEFAULT_PRESETS)


def load_presets() -> Dict[str, dict]:
    """Return { preset_name: manifold descriptor, ... }."""
    path = registry_path()
    if not path.exists():
        return {}
    try:
        with path.open("r", encoding="utf-8") as f:
            data = json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigError(f"cannot read manifold registry {path}: {e}") from e
    if not isinstance(data, dict):
        raise ConfigError(f"manifold registry {path} must hold a JSON object")
    return {str(k): dict(v) for k, v in data.items()}


def save_presets(data: Dict[str, dict]) -> None:
    path = registry_path()
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as f:
        json.dump(data, f, ensure_ascii=False, indent=2, sort_keys=True)
        f.write("\n")


def get_preset(name: str) -> dict:
    presets = load_presets()
    if name not in presets:
        raise ArgumentError(f"unknown manifold preset '{name}' (known: {', '.join(sorted(presets))})")
    return presets[name]


def register_preset(name: str, descriptor: dict) -> Dict[str, dict]:
    """Add or replace one preset after validating it."""
    errs = diagnose(ManifoldDescriptor, descriptor, "manifold")
    if descriptor.get("kind") == "custom" and descriptor.get("metric") and not errs:
        get_metric(descriptor["metric"])
    if errs:
        raise ArgumentError(f"invalid manifold preset '{name}': " + "; ".join(errs))
    presets = load_presets()
    presets[name] = dict(descriptor)
    save_presets(presets)
    return presets
