"""Covariance, 3x3 symmetric eigen-decomposition and PCA of three-phase data."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .signal_model import SampleSeries

SYM_TOL = 1e-12


@dataclass(frozen=True)
class Covariance3:
    entries: np.ndarray

    def __post_init__(self):
        r = np.array(self.entries, dtype=float).reshape(3, 3)
        if not np.allclose(r, r.T, rtol=0.0, atol=SYM_TOL * max(1.0, np.abs(r).max())):
            raise ConfigError("covariance matrix is not symmetric")
        r = 0.5 * (r + r.T)
        r.setflags(write=False)
        object.__setattr__(self, "entries", r)


@dataclass(frozen=True)
class EigenDecomposition:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray  # columns, matching eigenvalues

    def reconstruct(self) -> np.ndarray:
        q = self.eigenvectors
        return q @ np.diag(self.eigenvalues) @ q.T

    def projector(self, r: int) -> np.ndarray:
        q = self.eigenvectors[:, :r]
        return q @ q.T


def empirical_covariance(s: SampleSeries) -> Covariance3:
    """(1/N) sum s_k s_k^T without mean removal."""
    x = s.samples if isinstance(s, SampleSeries) else np.asarray(s, dtype=float).reshape(-1, 3)
    if x.shape[0] == 0:
        raise ConfigError("cannot estimate covariance of an empty series")
    return Covariance3(x.T @ x / x.shape[0])


def analytic_covariance(delta_b: complex, delta_c: complex) -> Covariance3:
    """Limit covariance of a unit phase-a system with imbalance ratios delta_b, delta_c."""
    v = np.array([1.0, delta_b, delta_c], dtype=complex)
    return Covariance3(0.5 * np.real(np.outer(v, np.conj(v))))


def _jacobi(a: np.ndarray, tol: float = 1e-14, max_sweeps: int = 50):
    a = a.copy()
    v = np.eye(3)
    scale = max(np.linalg.norm(a), np.finfo(float).tiny)
    for _ in range(max_sweeps):
        off = np.sqrt(2.0 * (a[0, 1] ** 2 + a[0, 2] ** 2 + a[1, 2] ** 2))
        if off <= tol * scale:
            break
        for p, q in ((0, 1), (0, 2), (1, 2)):
            apq = a[p, q]
            if apq == 0.0:
                continue
            diff = a[q, q] - a[p, p]
            if abs(apq) < 1e-150 * abs(diff):
                t = apq / diff
            else:
                tau = diff / (2.0 * apq)
                t = np.sign(tau) / (abs(tau) + np.sqrt(1.0 + tau * tau)) if tau != 0 else 1.0
            c = 1.0 / np.sqrt(1.0 + t * t)
            s = t * c
            rot = np.eye(3)
            rot[p, p] = rot[q, q] = c
            rot[p, q] = s
            rot[q, p] = -s
            a = rot.T @ a @ rot
            a[p, q] = a[q, p] = 0.0
            v = v @ rot
    return np.diag(a).copy(), v


def _fix_sign(q: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    q = q.copy()
    for i in range(q.shape[1]):
        nz = np.flatnonzero(np.abs(q[:, i]) > tol)
        if nz.size and q[nz[0], i] < 0:
            q[:, i] = -q[:, i]
    return q


def eigen3(r: Covariance3 | np.ndarray) -> EigenDecomposition:
    """Eigen-decomposition of a symmetric 3x3 matrix by cyclic Jacobi rotations.

    Eigenvalues are returned in descending order. Each eigenvector is
    re-orthonormalised by Gram-Schmidt in that order and signed so that its
    first non-negligible component is positive.
    """
    m = r.entries if isinstance(r, Covariance3) else Covariance3(r).entries
    w, v = _jacobi(np.asarray(m))
    order = np.argsort(-w, kind="stable")
    w, v = w[order], v[:, order]
    q = np.zeros_like(v)
    for i in range(3):
        x = v[:, i] - q[:, :i] @ (q[:, :i].T @ v[:, i])
        q[:, i] = x / np.linalg.norm(x)
    return EigenDecomposition(w, _fix_sign(q))


def pca_reduce(x: SampleSeries, r: int) -> np.ndarray:
    """Project each sample onto the top-r principal directions, shape (N, r)."""
    if not 1 <= r <= 3:
        raise ConfigError(f"reduced dimension must be 1, 2 or 3, got {r}")
    data = x.samples if isinstance(x, SampleSeries) else np.asarray(x, dtype=float).reshape(-1, 3)
    eig = eigen3(empirical_covariance(data))
    return data @ eig.eigenvectors[:, :r]


def rank_estimate(r: Covariance3, tol: float = 1e-6) -> int:
    if tol <= 0:
        raise ConfigError("rank tolerance must be positive")
    w = eigen3(r).eigenvalues
    lmax = w[0]
    if lmax <= 0:
        return 0
    return int(np.sum(w > tol * lmax))
