"""Internal model construction and the decentralized adaptive stabilizer.

The controller side needs only a controllable Hurwitz pair (M, N) and the
adaptive law; the mode matrix Phi, the Sylvester solution T and the true
feedforward row Psi are verification-only artifacts kept in a separate
truth structure that the control loop never reads.
"""

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
import scipy.linalg

from .errors import DegenerateRoots, NotHurwitz, SingularSystem, SingularT

_HURWITZ_MARGIN = -1e-9


def _companion(bottom_row):
    s = len(bottom_row)
    m = np.zeros((s, s))
    if s > 1:
        m[:-1, 1:] = np.eye(s - 1)
    m[-1, :] = bottom_row
    return m


def companion_pair(s_dim, char_coeffs):
    """Bottom-row companion (M, N) from characteristic coefficients (constant term first).

    M's characteristic polynomial is lambda^s + c_s lambda^{s-1} + ... + c_1,
    so the bottom row is -char_coeffs and N is the last unit vector.
    Raises NotHurwitz unless every eigenvalue has real part < -1e-9.
    """
    coeffs = np.asarray(char_coeffs, dtype=float)
    if coeffs.shape != (s_dim,):
        raise ValueError(f"expected {s_dim} coefficients, got {coeffs.shape}")
    m = _companion(-coeffs)
    eigs = np.linalg.eigvals(m)
    if np.any(eigs.real >= _HURWITZ_MARGIN):
        raise NotHurwitz(f"max eigenvalue real part {eigs.real.max():.3e}")
    n_vec = np.zeros(s_dim)
    n_vec[-1] = 1.0
    _assert_controllable(m, n_vec)
    return m, n_vec


def _assert_controllable(m, n_vec):
    s = m.shape[0]
    ctrb = np.column_stack([np.linalg.matrix_power(m, k) @ n_vec for k in range(s)])
    _, r, _ = scipy.linalg.qr(ctrb, pivoting=True)
    rank = int(np.sum(np.abs(np.diag(r)) > 1e-9 * max(1.0, abs(r[0, 0]))))
    if rank != s:
        raise ValueError(f"(M, N) not controllable: rank {rank} < {s}")


def phi_gamma(frequencies):
    """Companion (Phi, Gamma) whose modes are the given imaginary-axis frequencies.

    Each omega > 0 contributes the conjugate pair +-j omega; omega == 0
    contributes a constant mode.  For a single sinusoid of frequency sigma
    this yields Phi = [[0, 1], [-sigma^2, 0]] and Gamma = [1, 0].
    """
    freqs = [float(w) for w in frequencies]
    if any(w < 0 for w in freqs):
        raise ValueError("frequencies must be nonnegative")
    if len(set(freqs)) != len(freqs):
        raise DegenerateRoots(f"repeated mode frequencies in {freqs}")
    # polynomial prod over modes: (x) for omega=0, (x^2 + omega^2) otherwise
    poly = np.array([1.0])
    for w in freqs:
        factor = [1.0, 0.0] if w == 0.0 else [1.0, 0.0, w * w]
        poly = np.polymul(poly, factor)
    s = len(poly) - 1
    # x^s = -poly[1] x^{s-1} - ... - poly[s]; bottom row holds ell_1 .. ell_s
    bottom = -poly[1:][::-1]
    phi = _companion(bottom)
    gamma = np.zeros(s)
    gamma[0] = 1.0
    return phi, gamma


def solve_sylvester(m, n_vec, phi, gamma):
    """Solve T Phi - M T = N Gamma by Kronecker vectorization; checks the residual."""
    s = m.shape[0]
    if phi.shape != (s, s):
        raise ValueError("M and Phi must have equal dimension")
    op = np.kron(phi.T, np.eye(s)) - np.kron(np.eye(s), m)
    rhs = np.outer(n_vec, gamma)
    try:
        vec_t = np.linalg.solve(op, rhs.ravel(order="F"))
    except np.linalg.LinAlgError as exc:
        raise SingularSystem("Sylvester operator singular; spectra overlap?") from exc
    t = vec_t.reshape((s, s), order="F")
    res = np.linalg.norm(t @ phi - m @ t - rhs)
    if not np.isfinite(res) or res > 1e-8 * max(1.0, np.linalg.norm(rhs)):
        raise SingularSystem(f"Sylvester residual {res:.3e} too large; spectra overlap?")
    return t


def sylvester_residual(t, m, n_vec, phi, gamma):
    return float(np.linalg.norm(t @ phi - m @ t - np.outer(n_vec, gamma)))


def psi_true(t, gamma=None):
    """Psi = Gamma T^{-1}; Gamma defaults to the first unit row."""
    s = t.shape[0]
    if gamma is None:
        gamma = np.zeros(s)
        gamma[0] = 1.0
    if abs(np.linalg.det(t)) < 1e-12:
        raise SingularT("Sylvester solution is not invertible")
    return gamma @ np.linalg.inv(t)


@dataclass(frozen=True)
class InternalModelSpec:
    """Controller-side internal model data: the controllable Hurwitz pair."""

    s_dim: int
    M: np.ndarray
    N_vec: np.ndarray

    @staticmethod
    def from_coeffs(char_coeffs):
        m, n_vec = companion_pair(len(char_coeffs), char_coeffs)
        return InternalModelSpec(s_dim=len(char_coeffs), M=m, N_vec=n_vec)


@dataclass(frozen=True)
class FeedforwardTruth:
    """Verification-only: exosystem modes, Sylvester solution and true Psi row."""

    Phi: np.ndarray
    Gamma: np.ndarray
    T: np.ndarray
    Psi: np.ndarray
    residual: float

    @staticmethod
    def build(im: InternalModelSpec, frequencies):
        phi, gamma = phi_gamma(frequencies)
        if phi.shape[0] != im.s_dim:
            raise ValueError(
                f"mode count gives order {phi.shape[0]}, internal model has {im.s_dim}")
        t = solve_sylvester(im.M, im.N_vec, phi, gamma)
        return FeedforwardTruth(
            Phi=phi, Gamma=gamma, T=t, Psi=psi_true(t, gamma),
            residual=sylvester_residual(t, im.M, im.N_vec, phi, gamma))


def quartic_plus_one(theta):
    return theta ** 4 + 1.0


RHO_SHAPES = {"quartic_plus_one": quartic_plus_one}


@dataclass(frozen=True)
class TrackerParams:
    gamma: float = 2.0
    rho_name: str = "quartic_plus_one"

    def __post_init__(self):
        if self.gamma < 1.5:
            raise ValueError("gamma must be >= 1.5")
        if self.rho_name not in RHO_SHAPES:
            raise ValueError(f"unknown rho shape {self.rho_name!r}")

    @property
    def rho(self) -> Callable:
        return RHO_SHAPES[self.rho_name]


@dataclass
class TrackerState:
    eta: np.ndarray      # (s,)
    k_gain: float
    psi_hat: np.ndarray  # (s,)


def vartheta(x, y_r, gamma):
    """Filtered tracking error x2 + gamma (x1 - yr)."""
    return x[1] + gamma * (x[0] - y_r)


def control(ts: TrackerState, theta, params: TrackerParams):
    """u = -k rho(theta) theta + psi_hat . eta."""
    return -ts.k_gain * params.rho(theta) * theta + float(ts.psi_hat @ ts.eta)


def tracker_derivative(ts: TrackerState, theta, u, params: TrackerParams,
                       im: InternalModelSpec) -> TrackerState:
    """(eta', k', psi_hat') = (M eta + N u, rho(theta) theta^2, -eta theta)."""
    return TrackerState(
        eta=im.M @ ts.eta + im.N_vec * u,
        k_gain=params.rho(theta) * theta ** 2,
        psi_hat=-ts.eta * theta,
    )
