"""Distributed optimal coordinator: reference generation over unbalanced digraphs.

Per agent i the coordinator runs

    yr_i' = -(1/xi_i^i) grad c_i(yr_i) - beta1 sum_j a_ij (yr_i - yr_j) - beta2 z_i
    z_i'  =  beta1 sum_j a_ij (yr_i - yr_j),        z_i(0) = 0
    xi_i' = -sum_j a_ij (xi_i - xi_j),              xi_i(0) = e_i

The self-component xi_i^i stays positive and converges to rho_i, which
cancels the graph imbalance without knowing the left eigenvector a priori.
"""

from dataclasses import dataclass

import numpy as np

from .costs import ConvexityBounds, build_gradient
from .digraph import Digraph, laplacian
from .errors import InvalidSpectrum, XiUnderflow
from .integrate import rk4_step

XI_FLOOR = 1e-9


@dataclass(frozen=True)
class CoordinatorGains:
    beta1: float
    beta2: float
    delta: float

    def __post_init__(self):
        if self.beta1 <= 0 or self.beta2 <= 0 or self.delta <= 0:
            raise ValueError("gains must be positive")


def select_gains(bounds: ConvexityBounds, rho_min: float, lambda2: float) -> CoordinatorGains:
    """Closed-form gain rule satisfying the three selection inequalities.

    delta = iota^2/(4 varpi), beta2 = 4 delta / rho_min, beta1 = 2 beta2^2/(delta lambda2)
    give margins varpi, 2 delta and beta2^2/delta respectively.
    """
    if lambda2 <= 0 or rho_min <= 0:
        raise InvalidSpectrum(f"need lambda2 > 0 and rho_min > 0, got {lambda2}, {rho_min}")
    varpi, iota = bounds.varpi, bounds.iota_bar
    delta = iota ** 2 / (4.0 * varpi)
    beta2 = 4.0 * delta / rho_min
    beta1 = 2.0 * beta2 ** 2 / (delta * lambda2)
    gains = CoordinatorGains(beta1=beta1, beta2=beta2, delta=delta)
    check_gain_inequalities(gains, bounds, rho_min, lambda2)
    return gains


def check_gain_inequalities(gains, bounds, rho_min, lambda2):
    """Assert 2 varpi - iota^2/(4 delta) > 0, beta2 rho_min - 2 delta > 0, beta1 lambda2 - beta2^2/delta > 0."""
    m1 = 2.0 * bounds.varpi - bounds.iota_bar ** 2 / (4.0 * gains.delta)
    m2 = gains.beta2 * rho_min - 2.0 * gains.delta
    m3 = gains.beta1 * lambda2 - gains.beta2 ** 2 / gains.delta
    if not (m1 > 0 and m2 > 0 and m3 > 0):
        raise InvalidSpectrum(
            f"gain inequalities violated: margins ({m1:.3e}, {m2:.3e}, {m3:.3e})")
    return m1, m2, m3


@dataclass
class CoordinatorState:
    """y_r, z (n,) and xi (n, n) with row i holding agent i's auxiliary vector."""

    y_r: np.ndarray
    z: np.ndarray
    xi: np.ndarray

    @staticmethod
    def initial(y0):
        y0 = np.asarray(y0, dtype=float)
        n = y0.size
        return CoordinatorState(y_r=y0.copy(), z=np.zeros(n), xi=np.eye(n))


def coordinator_derivative(state: CoordinatorState, g: Digraph, cost_list,
                           gains: CoordinatorGains) -> CoordinatorState:
    """Time derivative of the coordinator state (pure function)."""
    big_l = laplacian(g)
    grad_vec = build_gradient(cost_list)
    dy, dz, dxi = _coordinator_rhs(state.y_r, state.z, state.xi, big_l, grad_vec, gains)
    return CoordinatorState(y_r=dy, z=dz, xi=dxi)


def _coordinator_rhs(y_r, z, xi, big_l, grad_vec, gains):
    xi_diag = np.diagonal(xi)
    if np.any(xi_diag < XI_FLOOR):
        raise XiUnderflow(f"min xi_i^i = {xi_diag.min():.3e} below floor {XI_FLOOR}")
    ly = big_l @ y_r
    dy = -grad_vec(y_r) / xi_diag - gains.beta1 * ly - gains.beta2 * z
    dz = gains.beta1 * ly
    dxi = -big_l @ xi
    return dy, dz, dxi


@dataclass
class CoordinatorTrajectory:
    times: np.ndarray
    y_r: np.ndarray   # (m, n)
    z: np.ndarray     # (m, n)
    xi: np.ndarray    # (m, n, n)


def coordinator_only_run(g: Digraph, cost_list, gains: CoordinatorGains, y0,
                         horizon, step, record_every=100) -> CoordinatorTrajectory:
    """Integrate only the coordinator layer with RK4 and a decimated record."""
    big_l = laplacian(g)
    grad_vec = build_gradient(cost_list)
    n = g.n
    y0 = np.asarray(y0, dtype=float)

    def f(t, s):
        y_r, z, xi = s[:n], s[n:2 * n], s[2 * n:].reshape(n, n)
        dy, dz, dxi = _coordinator_rhs(y_r, z, xi, big_l, grad_vec, gains)
        return np.concatenate([dy, dz, dxi.ravel()])

    state = np.concatenate([y0, np.zeros(n), np.eye(n).ravel()])
    n_steps = int(round(horizon / step))
    times = [0.0]
    samples = [state.copy()]
    t = 0.0
    for k in range(1, n_steps + 1):
        state = rk4_step(f, t, state, step)
        t = k * step
        if k % record_every == 0:
            times.append(t)
            samples.append(state.copy())
    arr = np.array(samples)
    return CoordinatorTrajectory(
        times=np.array(times),
        y_r=arr[:, :n],
        z=arr[:, n:2 * n],
        xi=arr[:, 2 * n:].reshape(-1, n, n),
    )
