"""Second-order circularity of alpha-beta voltages and balance verdicts."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError

DEFAULT_THRESHOLD = 0.02


@dataclass(frozen=True)
class CircularityReport:
    covariance: float
    pseudo_covariance: complex
    circularity_coefficient: float
    ellipse_axes: tuple[float, float]

    def as_dict(self) -> dict:
        return {
            "covariance": self.covariance,
            "pseudo_re": self.pseudo_covariance.real,
            "pseudo_im": self.pseudo_covariance.imag,
            "coefficient": self.circularity_coefficient,
            "ellipse_major": self.ellipse_axes[0],
            "ellipse_minor": self.ellipse_axes[1],
        }


class BalanceState(str, enum.Enum):
    BALANCED = "Balanced"
    UNBALANCED = "Unbalanced"


@dataclass(frozen=True)
class BalanceVerdict:
    state: BalanceState
    vuf_magnitude: float
    notes: str = ""

    def as_dict(self) -> dict:
        return {"state": self.state.value, "vuf_magnitude": self.vuf_magnitude}


def circularity(s) -> CircularityReport:
    """Covariance E|s|^2, pseudo-covariance E[s^2] and |E[s^2]| / E|s|^2.

    The ellipse axes are the semi-axes of the trajectory traced by a
    two-sequence signal: sqrt(cov +/- |pseudo|).
    """
    z = np.asarray(getattr(s, "samples", s), dtype=complex).reshape(-1)
    if z.size < 2:
        raise ConfigError("circularity needs at least two samples")
    cov = float(np.mean(np.abs(z) ** 2))
    if cov <= 0.0:
        raise ConfigError("circularity is undefined for an all-zero series")
    pseudo = complex(np.mean(z * z))
    mag = abs(pseudo)
    major = math.sqrt(cov + mag)
    minor = math.sqrt(max(cov - mag, 0.0))
    return CircularityReport(cov, pseudo, mag / cov, (major, minor))


def classify(kappa, threshold: float = DEFAULT_THRESHOLD) -> BalanceVerdict:
    """Balanced iff |kappa| <= threshold."""
    if not 0.0 < threshold < 1.0:
        raise ConfigError(f"threshold must be in (0, 1), got {threshold}")
    mag = abs(getattr(kappa, "kappa", kappa))
    if mag <= threshold:
        return BalanceVerdict(BalanceState.BALANCED, mag)
    notes = f"kappa angle {math.degrees(np.angle(getattr(kappa, 'kappa', kappa))):.1f} deg"
    if mag >= 1.0:
        notes += "; |kappa| >= 1, negative sequence dominates"
    return BalanceVerdict(BalanceState.UNBALANCED, mag, notes)
