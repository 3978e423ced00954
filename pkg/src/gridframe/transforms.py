"""Static Clarke, Park and symmetrical-component transforms.

Conventions
-----------
* The Clarke matrix is the power-invariant (orthonormal) one, with the
  sqrt(2/3) prefactor, so ``clarke_complex`` of a balanced unit system is
  sqrt(3/2) exp(j omega k).
* Sequence phasors from ``sequence_from_waveform`` satisfy

      s_k = (V+ exp(j omega k) + conj(V-) exp(-j omega k)) / sqrt(2)

  while ``symmetrical`` works on RMS phasors and therefore returns those
  values divided by sqrt(2).
* With a = exp(-j 2pi/3) the DFT row (1, a, a^2) annihilates a balanced
  phasor vector, so it is labelled *negative* and (1, a^2, a) *positive*.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .signal_model import PHASE_OFFSETS, PhasorVector, SampleSeries, ThreePhaseConfig

SQRT2 = np.sqrt(2.0)
SQRT3 = np.sqrt(3.0)
A = np.exp(-2j * np.pi / 3.0)

CLARKE_MATRIX = np.sqrt(2.0 / 3.0) * np.array([
    [SQRT2 / 2, SQRT2 / 2, SQRT2 / 2],
    [1.0, -0.5, -0.5],
    [0.0, SQRT3 / 2, -SQRT3 / 2],
])
REDUCED_CLARKE = CLARKE_MATRIX[1:]
CLARKE_VECTOR = np.sqrt(2.0 / 3.0) * np.array([1.0, A, np.conj(A)])

# rows: zero, positive, negative
SYMMETRICAL_MATRIX = np.array([
    [1, 1, 1],
    [1, A ** 2, A],
    [1, A, A ** 2],
]) / SQRT3

for _m in (CLARKE_MATRIX, REDUCED_CLARKE, CLARKE_VECTOR, SYMMETRICAL_MATRIX):
    _m.setflags(write=False)


@dataclass(frozen=True)
class ClarkeOutput:
    v0: np.ndarray
    valpha: np.ndarray
    vbeta: np.ndarray
    start_index: int = 0

    def as_array(self) -> np.ndarray:
        return np.column_stack([self.v0, self.valpha, self.vbeta])


@dataclass(frozen=True)
class ComplexSeries:
    samples: np.ndarray
    start_index: int = 0

    def __post_init__(self):
        z = np.asarray(self.samples, dtype=complex).reshape(-1)
        if not np.all(np.isfinite(z)):
            raise ConfigError("complex series contains non-finite values")
        object.__setattr__(self, "samples", z)

    def __len__(self) -> int:
        return self.samples.shape[0]

    @property
    def k(self) -> np.ndarray:
        return np.arange(self.start_index, self.start_index + len(self))


@dataclass(frozen=True)
class SequencePhasors:
    zero: complex
    positive: complex
    negative: complex

    @property
    def vuf(self) -> complex:
        return self.negative / self.positive

    def as_dict(self) -> dict:
        return {name: {"re": float(np.real(v)), "im": float(np.imag(v))}
                for name, v in (("zero", self.zero), ("positive", self.positive),
                                ("negative", self.negative))}


def _rows(s) -> tuple[np.ndarray, int]:
    if isinstance(s, SampleSeries):
        return s.samples, s.start_index
    return np.asarray(s, dtype=float).reshape(-1, 3), 0


def clarke_full(s: SampleSeries) -> ClarkeOutput:
    x, k0 = _rows(s)
    y = x @ CLARKE_MATRIX.T
    return ClarkeOutput(y[:, 0], y[:, 1], y[:, 2], k0)


def clarke_reduced(s: SampleSeries) -> np.ndarray:
    """(N, 2) array of (v_alpha, v_beta)."""
    x, _ = _rows(s)
    return x @ REDUCED_CLARKE.T


def clarke_complex(s: SampleSeries) -> ComplexSeries:
    """Complex alpha-beta voltage c^H s_k."""
    x, k0 = _rows(s)
    return ComplexSeries(x @ np.conj(CLARKE_VECTOR), k0)


def park_matrix(theta: float) -> np.ndarray:
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, s], [-s, c]])


def park(alpha_beta, theta) -> np.ndarray:
    """Rotate (v_alpha, v_beta) rows clockwise by theta_k, giving (v_d, v_q)."""
    ab = np.asarray(alpha_beta, dtype=float).reshape(-1, 2)
    theta = np.asarray(theta, dtype=float).reshape(-1)
    if ab.shape[0] != theta.shape[0]:
        raise ConfigError(
            f"park: {ab.shape[0]} alpha-beta samples but {theta.shape[0]} angles"
        )
    c, s = np.cos(theta), np.sin(theta)
    vd = c * ab[:, 0] + s * ab[:, 1]
    vq = -s * ab[:, 0] + c * ab[:, 1]
    return np.column_stack([vd, vq])


def park_complex(x: ComplexSeries, omega0: float) -> ComplexSeries:
    """v_k = exp(-j omega0 k) s_k, the complex form of ``park`` with theta_k = omega0 k."""
    return ComplexSeries(np.exp(-1j * omega0 * x.k) * x.samples, x.start_index)


def symmetrical(v: PhasorVector) -> SequencePhasors:
    p = v.phasors if isinstance(v, PhasorVector) else np.asarray(v, dtype=complex)
    zero, pos, neg = SYMMETRICAL_MATRIX @ p
    return SequencePhasors(complex(zero), complex(pos), complex(neg))


def sequence_from_amplitudes(amplitudes, phases) -> SequencePhasors:
    """Sequence phasors of the waveform with the given peak amplitudes and phases.

    Zero amplitudes are allowed here (single-phase and open-conductor cases).
    """
    amps = np.asarray(amplitudes, dtype=float)
    phases = np.asarray(phases, dtype=float)
    pos = np.sum(amps * np.exp(1j * phases)) / SQRT3
    neg_conj = np.sum(amps * np.exp(-1j * (phases - PHASE_OFFSETS))) / SQRT3
    zero = np.sum(amps * np.exp(1j * (phases + PHASE_OFFSETS))) / SQRT3
    return SequencePhasors(complex(zero), complex(pos), complex(np.conj(neg_conj)))


def sequence_from_waveform(config: ThreePhaseConfig) -> SequencePhasors:
    return sequence_from_amplitudes(config.amplitudes, config.phases)


def fm_demodulate(x: ComplexSeries, omega0: float, lpf_window: int | None = None):
    """Frequency deviation from nominal via fixed-frequency demodulation.

    Returns ``(k, delta_omega)``; the first output corresponds to the sample at
    which two consecutive filtered values are available.
    """
    if lpf_window is None:
        lpf_window = max(1, int(round(2.0 * np.pi / omega0)))
    if lpf_window < 1:
        raise ConfigError("lpf_window must be at least 1")
    n = len(x)
    if lpf_window >= n:
        raise ConfigError(f"lpf_window {lpf_window} needs more than {n} samples")
    y = x.samples * np.exp(-1j * omega0 * x.k)
    u = np.convolve(y, np.full(lpf_window, 1.0 / lpf_window), mode="valid")
    dw = np.angle(u[1:] * np.conj(u[:-1]))
    k = x.k[lpf_window:]
    return k, dw
