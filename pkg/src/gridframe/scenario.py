"""Scenario files: a signal configuration plus run length and estimator settings."""

from __future__ import annotations

from dataclasses import dataclass

from .adaptive import DEFAULT_MU
from .errors import ConfigError
from .io import config_from_dict
from .signal_model import ThreePhaseConfig

OUTPUT_KINDS = ("raw", "clarke", "park", "trace", "covariance", "circularity")


@dataclass(frozen=True)
class Scenario:
    config: ThreePhaseConfig
    duration: int
    mu: float = DEFAULT_MU
    initial_h: complex = 0j
    initial_g: complex = 0j
    outputs: tuple[str, ...] = ("raw",)

    def __post_init__(self):
        if self.duration <= 0:
            raise ConfigError(f"duration must be positive, got {self.duration}")
        if not self.outputs:
            raise ConfigError("scenario must request at least one output")
        bad = [o for o in self.outputs if o not in OUTPUT_KINDS]
        if bad:
            raise ConfigError(f"unknown outputs {bad}; choose from {OUTPUT_KINDS}")
        if not self.mu > 0:
            raise ConfigError(f"mu must be positive, got {self.mu}")


def _complex(v, name: str) -> complex:
    if isinstance(v, dict):
        return complex(float(v.get("re", 0.0)), float(v.get("im", 0.0)))
    if isinstance(v, (list, tuple)) and len(v) == 2:
        return complex(float(v[0]), float(v[1]))
    if isinstance(v, (int, float)):
        return complex(v)
    raise ConfigError(f"{name}: expected a number, [re, im] or {{re, im}}")


def scenario_from_dict(d: dict) -> Scenario:
    """Accepts ``{"config": {...}, "duration": N, ...}`` or a flat config with ``duration``."""
    if not isinstance(d, dict):
        raise ConfigError("scenario must be a JSON object")
    cfg = config_from_dict(d["config"] if "config" in d else d)
    if "duration" not in d:
        raise ConfigError("scenario: missing key 'duration'")
    est = d.get("estimator", {}) or {}
    try:
        return Scenario(
            config=cfg,
            duration=int(d["duration"]),
            mu=float(est.get("mu", DEFAULT_MU)),
            initial_h=_complex(est.get("initial_h", 0.0), "estimator.initial_h"),
            initial_g=_complex(est.get("initial_g", 0.0), "estimator.initial_g"),
            outputs=tuple(d.get("outputs", ("raw",))),
        )
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"malformed scenario: {exc}") from None
