"""
Vasicek term structure.

The short rate follows ``dr = kappa (theta - r) dt + sigma dW`` under the
pricing measure. Zero-coupon bond prices are ``F(t, r, s) = exp(A - B r)`` with

    B(t, s) = (1 - exp(-kappa (s - t))) / kappa
    A(t, s) = (theta - sigma^2 / (2 kappa^2)) (B - (s - t)) - sigma^2 B^2 / (4 kappa)

Since ``(1 - gamma) r`` is again an OU process with parameters
``(kappa, (1 - gamma) theta, (1 - gamma) sigma)``, the tax-scaled price
``E[exp(-(1 - gamma) int_t^s r) | r(t) = r]`` reuses the same closed form.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .grid import TimeGrid
from .rng import as_generator

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(20)


@dataclass(frozen=True)
class VasicekParams:
    """
    Vasicek parameters.

    ``sigma = 0`` is accepted for deterministic-rate testing.
    """

    kappa: float
    theta: float
    sigma: float
    r0: float

    def __post_init__(self):
        for name in ("kappa", "theta", "sigma", "r0"):
            value = getattr(self, name)
            if not np.isfinite(value):
                raise ValueError(f"{name} must be finite")
            object.__setattr__(self, name, float(value))
        if self.kappa <= 0:
            raise ValueError("kappa must be positive")
        if self.sigma < 0:
            raise ValueError("sigma must be non-negative")

    def scaled(self, factor: float) -> "VasicekParams":
        """Parameters of the process ``factor * r``."""
        return VasicekParams(self.kappa, factor * self.theta, factor * self.sigma, factor * self.r0)

    def mean(self, t):
        """``E[r(t)]`` given ``r(0) = r0``."""
        return self.theta + (self.r0 - self.theta) * np.exp(-self.kappa * np.asarray(t, dtype=float))

    def variance(self, t):
        return self.sigma**2 * -np.expm1(-2 * self.kappa * np.asarray(t, dtype=float)) / (2 * self.kappa)


class BondQuote(NamedTuple):
    value: np.ndarray | float
    rate_sensitivity: np.ndarray | float


def affine_coefficients(params: VasicekParams, tau):
    """``(A, B)`` as functions of time to maturity ``tau = s - t``."""
    tau = np.asarray(tau, dtype=float)
    k = params.kappa
    b = -np.expm1(-k * tau) / k
    a = (params.theta - params.sigma**2 / (2 * k * k)) * (b - tau) - params.sigma**2 * b * b / (4 * k)
    return a, b


def _check_times(t, r, s):
    t = np.asarray(t, dtype=float)
    r = np.asarray(r, dtype=float)
    s = np.asarray(s, dtype=float)
    if not (np.all(np.isfinite(t)) and np.all(np.isfinite(r)) and np.all(np.isfinite(s))):
        raise ValueError("inputs must be finite")
    if np.any(t < 0):
        raise ValueError("t must be non-negative")
    if np.any(s < t):
        raise ValueError("maturity s must not precede t")
    return t, r, s


def bond_price(params: VasicekParams, t, r, s) -> BondQuote:
    """Zero-coupon bond price ``F(t, r, s)`` and its derivative in ``r``."""
    t, r, s = _check_times(t, r, s)
    a, b = affine_coefficients(params, s - t)
    value = np.exp(a - b * r)
    return BondQuote(_scalar(value), _scalar(-b * value))


def bond_price_tax_scaled(params: VasicekParams, gamma: float, t, r, s) -> BondQuote:
    """``F^{1-gamma}(t, r, s) = E[exp(-(1 - gamma) int_t^s r(u) du) | r(t) = r]``."""
    if not 0.0 <= gamma < 1.0:
        raise ValueError("gamma must lie in [0,1)")
    t, r, s = _check_times(t, r, s)
    c = 1.0 - gamma
    a, b = affine_coefficients(params.scaled(c), s - t)
    value = np.exp(a - b * (c * r))
    return BondQuote(_scalar(value), _scalar(-c * b * value))


def _scalar(x):
    return float(x) if np.ndim(x) == 0 else x


def _gauss_legendre(f, lo, hi):
    """Integrate ``f`` over each ``[lo_i, hi_i]`` with a 20-point rule."""
    lo = np.asarray(lo, dtype=float)[..., None]
    hi = np.asarray(hi, dtype=float)[..., None]
    half = 0.5 * (hi - lo)
    x = lo + half * (_GL_NODES + 1.0)
    return np.sum(f(x) * _GL_WEIGHTS, axis=-1) * half[..., 0]


def ou_step_moments(params: VasicekParams, h):
    """
    Exact joint law of one OU step of length ``h``.

    Returns ``(decay, mean_integral_coef, chol)`` where, starting from ``r``:

        r(t+h)      = theta + (r - theta) * decay + sigma dW - kappa I
        int r du    = theta h + (r - theta) * B(h) + I

    and ``(dW, I)`` is centred Gaussian with Cholesky factor ``chol``
    (shape ``(..., 2, 2)``).
    """
    h = np.asarray(h, dtype=float)
    k, sig = params.kappa, params.sigma
    decay = np.exp(-k * h)
    bh = -np.expm1(-k * h) / k

    def bfun(x):
        return -np.expm1(-k * x) / k

    c_wi = _gauss_legendre(bfun, 0.0 * h, h)
    c_ii = _gauss_legendre(lambda x: bfun(x) ** 2, 0.0 * h, h)
    chol = np.zeros(h.shape + (2, 2))
    sqrt_h = np.sqrt(h)
    chol[..., 0, 0] = sqrt_h
    chol[..., 1, 0] = sig * c_wi / sqrt_h
    chol[..., 1, 1] = sig * np.sqrt(np.maximum(c_ii - c_wi**2 / h, 0.0))
    return decay, bh, chol


class ShortRatePaths(NamedTuple):
    """Exact OU paths on a grid; arrays have a leading path axis."""

    rates: np.ndarray  # (P, n+1)
    brownian_increments: np.ndarray  # (P, n)
    integrated_rate: np.ndarray  # (P, n+1), int_0^{t_k} r(u) du


def simulate_short_rate(
    params: VasicekParams, grid: TimeGrid, seed=None, n_paths: int = 1
) -> ShortRatePaths:
    """
    Simulate ``r`` exactly on ``grid``.

    The rate, the Brownian increment and the time integral of the rate over
    each step are drawn from their exact joint Gaussian law, so the
    increments are the ones that generated the path and ``exp(int r)`` is the
    exact savings account at the grid nodes.
    """
    if not isinstance(grid, TimeGrid):
        grid = TimeGrid(np.asarray(grid, dtype=float))
    if n_paths < 1:
        raise ValueError("n_paths must be positive")
    rng = as_generator(seed)
    h = grid.dt
    decay, bh, chol = ou_step_moments(params, h)
    rates = np.empty((n_paths, grid.n + 1))
    integ = np.zeros((n_paths, grid.n + 1))
    dw = np.empty((n_paths, grid.n))
    rates[:, 0] = params.r0
    th, k, sig = params.theta, params.kappa, params.sigma
    for j in range(grid.n):
        z = rng.standard_normal((n_paths, 2))
        dw[:, j] = chol[j, 0, 0] * z[:, 0]
        ii = chol[j, 1, 0] * z[:, 0] + chol[j, 1, 1] * z[:, 1]
        dev = rates[:, j] - th
        rates[:, j + 1] = th + dev * decay[j] + sig * dw[:, j] - k * ii
        integ[:, j + 1] = integ[:, j] + th * h[j] + dev * bh[j] + ii
    return ShortRatePaths(rates, dw, integ)


def bond_variance_integral(params: VasicekParams, grid: TimeGrid, maturity: float) -> np.ndarray:
    """Per-step ``int sigma^2 B(u, maturity)^2 du`` (quadratic variation of log S1)."""
    k = params.kappa

    def integrand(u):
        return (params.sigma * -np.expm1(-k * (maturity - u)) / k) ** 2

    t = grid.times
    return _gauss_legendre(integrand, t[:-1], t[1:])
