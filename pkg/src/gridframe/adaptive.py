"""Self-balancing Clarke and Park transforms driven by an ACLMS tracker.

The complex alpha-beta voltage of any (possibly unbalanced) three-phase system
obeys the widely linear autoregression

    s_k = conj(h) s_{k-1} + conj(g) conj(s_{k-1})

whose coefficients encode both the system frequency and the voltage
unbalance factor kappa = V-/V+. ACLMS adapts (h, g) sample by sample; the
frequency and kappa are then read off in closed form and used to strip the
negative sequence (adaptive Clarke) and demodulate at the tracked frequency
(adaptive Park).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigError, DivergenceError, ImbalanceOverflowError
from .signal_model import SampleSeries
from .transforms import ComplexSeries, clarke_complex

DEFAULT_MU = 0.01
G_EPS = 1e-8


@dataclass(frozen=True)
class WlarState:
    h: complex = 0j
    g: complex = 0j
    mu: float = DEFAULT_MU
    prev_sample: complex | None = None
    sample_index: int = 0

    def __post_init__(self):
        if not (math.isfinite(self.mu) and self.mu > 0):
            raise ConfigError(f"learning rate must be positive, got {self.mu}")


@dataclass(frozen=True)
class Vuf:
    kappa: complex
    low_confidence: bool = False

    @property
    def magnitude(self) -> float:
        return abs(self.kappa)

    @property
    def physical(self) -> bool:
        """True when the negative sequence is weaker than the positive one."""
        return abs(self.kappa) < 1.0


@dataclass(frozen=True)
class FrequencyEstimate:
    omega: float
    low_confidence: bool = False


def aclms_step(state: WlarState, s_k: complex) -> tuple[WlarState, complex]:
    """One ACLMS update; returns the new state and the a-priori error.

    The first sample only primes the regressor (error 0, weights unchanged).
    """
    if state.prev_sample is None:
        return replace(state, prev_sample=complex(s_k), sample_index=state.sample_index + 1), 0j
    x = state.prev_sample
    h, g = state.h, state.g
    err = s_k - (h.conjugate() * x + g.conjugate() * x.conjugate())
    h = h + state.mu * x * err.conjugate()
    g = g + state.mu * x.conjugate() * err.conjugate()
    if not (np.isfinite(h) and np.isfinite(g)):
        raise DivergenceError(state.sample_index)
    new = WlarState(h=h, g=g, mu=state.mu, prev_sample=complex(s_k),
                    sample_index=state.sample_index + 1)
    return new, err


def _discriminant(h: complex, g: complex) -> tuple[float, bool]:
    d = h.imag ** 2 - abs(g) ** 2
    if d < 0:
        return 0.0, True
    return math.sqrt(d), False


def extract_frequency(h: complex, g: complex) -> FrequencyEstimate:
    """Frequency in rad/sample from the WLAR weights, in [0, pi]."""
    root, clamped = _discriminant(h, g)
    omega = math.atan2(root, h.real)
    return FrequencyEstimate(omega, clamped or root == 0.0)


def extract_vuf(h: complex, g: complex) -> Vuf:
    """kappa = j (Im h + sqrt(Im^2 h - |g|^2)) / conj(g).

    Evaluated through the equivalent j g / (Im h - sqrt(...)) when Im h <= 0,
    which avoids cancellation near balance.
    """
    h, g = complex(h), complex(g)
    root, clamped = _discriminant(h, g)
    if abs(g) < G_EPS:
        return Vuf(0j, clamped)
    if h.imag <= 0:
        den = h.imag - root
        kappa = 1j * g / den if den != 0 else 0j
    else:
        kappa = 1j * (h.imag + root) / g.conjugate()
    return Vuf(complex(kappa), clamped or abs(kappa) >= 1.0)


def wlar_weights(omega: float, kappa: complex) -> tuple[complex, complex]:
    """(h, g) consistent with frequency `omega` and unbalance factor `kappa`.

    Solves exp(j omega) = conj(h) + conj(g) kappa and
    exp(-j omega) = conj(h) + conj(g) / conj(kappa).
    """
    k2 = abs(kappa) ** 2
    if k2 >= 1.0:
        raise ImbalanceOverflowError(f"|kappa| = {math.sqrt(k2)} >= 1")
    sw = math.sin(omega)
    g_conj = -2j * sw * np.conj(kappa) / (1.0 - k2)
    h_conj = np.exp(1j * omega) + 2j * sw * k2 / (1.0 - k2)
    return complex(np.conj(h_conj)), complex(np.conj(g_conj))


def adaptive_clarke(s_k, kappa: complex):
    """sqrt(2) (s - conj(kappa) conj(s)) / (1 - |kappa|^2); works on scalars or arrays."""
    k2 = abs(kappa) ** 2
    if k2 >= 1.0:
        raise ImbalanceOverflowError(
            f"|kappa| = {math.sqrt(k2):.6g} >= 1, negative sequence dominates"
        )
    return math.sqrt(2.0) * (s_k - np.conj(kappa) * np.conj(s_k)) / (1.0 - k2)


def demodulation_phase(omega_hat, start_index: int = 0) -> np.ndarray:
    """theta_k accumulated from per-sample frequency estimates.

    The first sample is anchored at omega_0 * k_0 so that a constant estimate
    reproduces omega * k exactly.
    """
    w = np.asarray(omega_hat, dtype=float).reshape(-1)
    if w.size == 0:
        return w.copy()
    theta = np.empty_like(w)
    theta[0] = w[0] * start_index
    theta[1:] = theta[0] + np.cumsum(w[1:])
    return theta


def adaptive_park(m_bar, omega_hat, start_index: int = 0) -> np.ndarray:
    """Rotate adaptive-Clarke output by the accumulated estimated phase."""
    m_bar = np.asarray(m_bar, dtype=complex).reshape(-1)
    theta = demodulation_phase(omega_hat, start_index)
    if theta.shape != m_bar.shape:
        raise ConfigError("adaptive_park: frequency trace and signal lengths differ")
    return np.exp(-1j * theta) * m_bar


@dataclass
class EstimatorTrace:
    k: np.ndarray
    h: np.ndarray
    g: np.ndarray
    omega: np.ndarray
    kappa: np.ndarray
    m_bar: np.ndarray
    m_tilde: np.ndarray
    phase: np.ndarray
    low_confidence: np.ndarray
    sample_rate: float | None = None
    final_state: WlarState | None = field(default=None, repr=False)

    def __len__(self) -> int:
        return self.k.shape[0]

    @property
    def frequency_hz(self) -> np.ndarray:
        if self.sample_rate is None:
            return np.full(len(self), np.nan)
        return self.omega * self.sample_rate / (2.0 * np.pi)


def run_pipeline(s: SampleSeries | ComplexSeries, mu: float = DEFAULT_MU,
                 sample_rate: float | None = None,
                 initial: WlarState | None = None,
                 kappa_max: float = 0.999) -> EstimatorTrace:
    """Track frequency and imbalance over a series and apply the adaptive transforms.

    Per sample: complex Clarke voltage, ACLMS update, closed-form frequency and
    kappa from the updated weights, then adaptive Clarke and adaptive Park.
    kappa estimates at or beyond `kappa_max` (possible during the initial
    transient) are radially clipped before balancing and flagged.
    """
    if not (math.isfinite(mu) and mu > 0):
        raise ConfigError(f"learning rate must be positive, got {mu}")
    z = s if isinstance(s, ComplexSeries) else clarke_complex(s)
    n = len(z)
    state = initial if initial is not None else WlarState(mu=mu, sample_index=z.start_index)
    state = replace(state, mu=mu)

    h = np.empty(n, dtype=complex)
    g = np.empty(n, dtype=complex)
    omega = np.empty(n)
    kappa = np.empty(n, dtype=complex)
    m_bar = np.empty(n, dtype=complex)
    low = np.zeros(n, dtype=bool)

    for i, s_k in enumerate(z.samples):
        state, _ = aclms_step(state, complex(s_k))
        f = extract_frequency(state.h, state.g)
        v = extract_vuf(state.h, state.g)
        kap = v.kappa
        flag = f.low_confidence or v.low_confidence
        if abs(kap) >= kappa_max:
            kap = kap / abs(kap) * kappa_max
            flag = True
        h[i], g[i], omega[i], kappa[i] = state.h, state.g, f.omega, kap
        m_bar[i] = adaptive_clarke(s_k, kap)
        low[i] = flag

    phase = demodulation_phase(omega, z.start_index)
    m_tilde = np.exp(-1j * phase) * m_bar
    return EstimatorTrace(z.k, h, g, omega, kappa, m_bar, m_tilde, phase, low,
                          sample_rate, state)
