"""Synthetic three-phase voltages, voltage sags and phasor representation.

Phase voltages are

    va = Va cos(theta_k + phi_a)
    vb = Vb cos(theta_k + phi_b - 2pi/3)
    vc = Vc cos(theta_k + phi_c + 2pi/3)

where theta_k is the accumulated phase, equal to omega*k while the frequency is
constant. Phasors carry the RMS factor 1/sqrt(2).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .errors import ConfigError

# phase offsets of the a, b, c conductors
PHASE_OFFSETS = np.array([0.0, -2.0 * np.pi / 3.0, 2.0 * np.pi / 3.0])


class SagType(str, enum.Enum):
    C = "C"
    D = "D"


@dataclass(frozen=True)
class SagSpec:
    sag_type: SagType
    depth: float
    start_index: int
    end_index: int

    def __post_init__(self):
        try:
            object.__setattr__(self, "sag_type", SagType(self.sag_type))
        except ValueError:
            raise ConfigError(f"unknown sag type {self.sag_type!r}") from None
        if not 0.0 < self.depth <= 1.0:
            raise ConfigError(f"sag depth must be in (0, 1], got {self.depth}")
        if self.start_index < 0 or self.start_index >= self.end_index:
            raise ConfigError(
                f"sag interval [{self.start_index}, {self.end_index}) is empty or negative"
            )


@dataclass(frozen=True)
class FrequencyEvent:
    start_index: int
    new_frequency: float


@dataclass(frozen=True)
class ThreePhaseConfig:
    """Amplitudes, phases and timing of a synthetic three-phase signal.

    Frequencies are in Hz; `omega` gives the normalised angular frequency in
    rad/sample.
    """

    amplitudes: tuple[float, float, float] = (1.0, 1.0, 1.0)
    phases: tuple[float, float, float] = (0.0, 0.0, 0.0)
    sample_rate: float = 1000.0
    base_frequency: float = 50.0
    frequency_events: tuple[FrequencyEvent, ...] = ()
    sag_events: tuple[SagSpec, ...] = ()
    noise_variance: float = 0.0

    def __post_init__(self):
        amps = tuple(float(a) for a in self.amplitudes)
        phases = tuple(float(p) for p in self.phases)
        if len(amps) != 3 or len(phases) != 3:
            raise ConfigError("amplitudes and phases must have three entries")
        object.__setattr__(self, "amplitudes", amps)
        object.__setattr__(self, "phases", phases)
        object.__setattr__(self, "frequency_events", tuple(self.frequency_events))
        object.__setattr__(self, "sag_events", tuple(self.sag_events))

        if not all(math.isfinite(a) and a > 0 for a in amps):
            raise ConfigError(f"amplitudes must be positive, got {amps}")
        if not all(math.isfinite(p) for p in phases):
            raise ConfigError("phases must be finite")
        if not (math.isfinite(self.sample_rate) and self.sample_rate > 0):
            raise ConfigError(f"sample_rate must be positive, got {self.sample_rate}")
        self._check_frequency(self.base_frequency)
        last = -1
        for ev in self.frequency_events:
            if ev.start_index < 0:
                raise ConfigError("frequency event indices must be non-negative")
            if ev.start_index < last:
                raise ConfigError("frequency events must be sorted by start_index")
            last = ev.start_index
            self._check_frequency(ev.new_frequency)
        if not (math.isfinite(self.noise_variance) and self.noise_variance >= 0):
            raise ConfigError("noise_variance must be non-negative")

    def _check_frequency(self, f: float) -> None:
        if not (math.isfinite(f) and 0.0 < f < self.sample_rate / 2.0):
            raise ConfigError(
                f"frequency {f} Hz gives omega outside (0, pi) at fs={self.sample_rate} Hz"
            )

    @property
    def omega(self) -> float:
        return 2.0 * np.pi * self.base_frequency / self.sample_rate

    def complex_amplitudes(self) -> np.ndarray:
        """Peak-amplitude phasors V_i exp(j(phi_i + offset_i))."""
        return np.asarray(self.amplitudes) * np.exp(1j * (np.asarray(self.phases) + PHASE_OFFSETS))

    def with_complex_amplitudes(self, p: Sequence[complex]) -> "ThreePhaseConfig":
        p = np.asarray(p, dtype=complex)
        return replace(
            self,
            amplitudes=tuple(np.abs(p).tolist()),
            phases=tuple((np.angle(p) - PHASE_OFFSETS).tolist()),
        )


@dataclass(frozen=True)
class SampleSeries:
    """Rows of (va, vb, vc) starting at sample `start_index`."""

    samples: np.ndarray
    start_index: int = 0

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=float).reshape(-1, 3)
        if not np.all(np.isfinite(s)):
            raise ConfigError("sample series contains non-finite values")
        s.setflags(write=False)
        object.__setattr__(self, "samples", s)

    def __len__(self) -> int:
        return self.samples.shape[0]

    @property
    def k(self) -> np.ndarray:
        return np.arange(self.start_index, self.start_index + len(self))


@dataclass(frozen=True)
class PhasorVector:
    phasors: np.ndarray
    normalized: np.ndarray = field(init=False)

    def __post_init__(self):
        v = np.asarray(self.phasors, dtype=complex).reshape(3)
        norm = v / v[0]
        norm[0] = 1.0
        object.__setattr__(self, "phasors", v)
        object.__setattr__(self, "normalized", norm)


def balanced_config(amplitude: float = 1.0, **kwargs) -> ThreePhaseConfig:
    return ThreePhaseConfig(amplitudes=(amplitude,) * 3, phases=(0.0, 0.0, 0.0), **kwargs)


def config_from_ratios(delta_b: complex, delta_c: complex, amplitude: float = 1.0,
                       **kwargs) -> ThreePhaseConfig:
    """Configuration whose normalised phasor vector is (1, delta_b, delta_c)."""
    p = amplitude * np.array([1.0, delta_b, delta_c], dtype=complex)
    base = ThreePhaseConfig(**kwargs)
    return base.with_complex_amplitudes(p)


def apply_sag(config: ThreePhaseConfig, sag: SagSpec) -> ThreePhaseConfig:
    """Return the amplitudes/phases active while `sag` is in force.

    Type C keeps phase a and scales the b/c components in quadrature to it by
    the depth; Type D scales phase a by the depth together with the in-phase
    parts of b and c. Both are evaluated in the frame of the pre-sag phase-a
    phasor, which for phi_a = 0 is the usual real/imaginary split.
    """
    sag_type = SagType(sag.sag_type)
    d = sag.depth
    if d == 1.0:
        return config
    p = config.complex_amplitudes()
    ref = np.exp(1j * np.angle(p[0]))
    q = p / ref
    if sag_type is SagType.C:
        q[1:] = q[1:].real + 1j * d * q[1:].imag
    else:
        q[0] = d * q[0]
        q[1:] = d * q[1:].real + 1j * q[1:].imag
    return config.with_complex_amplitudes(q * ref)


def phasor_vector(config: ThreePhaseConfig) -> PhasorVector:
    return PhasorVector(config.complex_amplitudes() / np.sqrt(2.0))


def accumulated_phase(config: ThreePhaseConfig, n: int) -> np.ndarray:
    """theta_k for k = 0..n-1, continuous across frequency events."""
    k = np.arange(n, dtype=float)
    theta = np.empty(n)
    boundaries = [(0, config.base_frequency)] + [
        (ev.start_index, ev.new_frequency) for ev in config.frequency_events
    ]
    base_phase = 0.0
    for i, (start, f) in enumerate(boundaries):
        stop = boundaries[i + 1][0] if i + 1 < len(boundaries) else n
        w = 2.0 * np.pi * f / config.sample_rate
        lo, hi = min(start, n), min(stop, n)
        theta[lo:hi] = base_phase + w * (k[lo:hi] - start)
        base_phase += w * (stop - start)
    return theta


def synth(config: ThreePhaseConfig, n: int, rng: np.random.Generator | None = None) -> SampleSeries:
    """Sample the configured three-phase voltage for k = 0..n-1.

    Additive white Gaussian noise is added only when `config.noise_variance`
    is positive; `rng` defaults to an unseeded generator in that case.
    """
    if n < 0:
        raise ConfigError(f"sample count must be non-negative, got {n}")
    theta = accumulated_phase(config, n)

    amps = np.tile(np.asarray(config.amplitudes), (n, 1))
    phases = np.tile(np.asarray(config.phases), (n, 1))
    for sag in config.sag_events:
        if sag.depth == 1.0:
            continue
        sagged = apply_sag(config, sag)
        lo, hi = min(sag.start_index, n), min(sag.end_index, n)
        amps[lo:hi] = sagged.amplitudes
        phases[lo:hi] = sagged.phases

    s = amps * np.cos(theta[:, None] + phases + PHASE_OFFSETS)
    if config.noise_variance > 0:
        rng = rng if rng is not None else np.random.default_rng()
        s = s + rng.normal(0.0, math.sqrt(config.noise_variance), size=s.shape)
    return SampleSeries(s)
