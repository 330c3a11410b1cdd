"""
Reference implementations written without the library's numerical kernels.

They reuse only data containers (models, payment specs) and the quadrature
node layout, so agreement with the library is a genuine cross-check.
"""

from __future__ import annotations

import numpy as np
from scipy.integrate import simpson
from scipy.linalg import expm

from taxhedge.hedging import _knots, quadrature_rule


def vasicek_price(kappa, theta, sigma, t, r, s):
    """Textbook Vasicek zero-coupon price and its rate derivative."""
    tau = s - t
    b = (1.0 - np.exp(-kappa * tau)) / kappa
    a = (theta - sigma**2 / (2 * kappa**2)) * (b - tau) - sigma**2 * b**2 / (4 * kappa)
    f = np.exp(a - b * r)
    return f, -b * f, b


def generator(model, u):
    n = model.n_states
    g = np.zeros((n, n))
    for (j, k), f in model.intensities.items():
        g[j, k] = float(f(u))
    g[np.arange(n), np.arange(n)] = -g.sum(axis=1)
    return g


def transition_matrix(model, t, s):
    """Ordinary transition probabilities by exact exponentials between knots."""
    knots = np.unique(np.concatenate([f.knots for f in model.intensities.values()] or [np.zeros(0)]))
    knots = knots[np.isfinite(knots)]
    cuts = np.concatenate([[t], knots[(knots > t) & (knots < s)], [s]])
    p = np.eye(model.n_states)
    for a, b in zip(cuts[:-1], cuts[1:]):
        if b > a:
            p = p @ expm(generator(model, 0.5 * (a + b)) * (b - a))
    return p


def classic_cashflow(model, payments, t, s, sample):
    """``sum_j p_ij(t, s) (b_j + sum_k mu_jk b_jk)`` with rates sampled at ``sample``."""
    n = model.n_states
    c = np.array([float(payments.sojourn_rates[j](sample)) for j in range(n)])
    for (j, k), f in model.intensities.items():
        bjk = payments.transition_payments.get((j, k))
        if bjk is not None:
            c[j] += float(f(sample)) * float(bjk(sample))
    return transition_matrix(model, t, s) @ c


def classic_quantities(scenario, t, r, accumulated_rate, quad_points):
    """
    Classic (no tax, no expense) reserves, bond holding per state, cash
    holding per state and GKW integrands at ``(t, r)``.
    """
    v = scenario.vasicek
    model, payments = scenario.model, scenario.payments
    horizon = model.horizon
    n = model.n_states
    rule = quadrature_rule(t, horizon, _knots(model, payments, scenario.taxexp), quad_points)
    reserves = np.zeros(n)
    num = np.zeros(n)
    for piece in rule.pieces:
        mid = 0.5 * (piece[0] + piece[-1])
        y = np.array([classic_cashflow(model, payments, t, s, mid) for s in piece])
        f, f_r, _ = vasicek_price(v.kappa, v.theta, v.sigma, t, r, piece)
        reserves += simpson(f[:, None] * y, x=piece, axis=0)
        num += simpson(f_r[:, None] * y, x=piece, axis=0)
    f_t, f_r_t, _ = vasicek_price(v.kappa, v.theta, v.sigma, t, r, horizon)
    h1 = num / f_r_t if t < horizon else np.zeros(n)
    s0 = np.exp(accumulated_rate)
    h0 = (reserves - h1 * f_t) / s0
    sar = np.zeros((n, n))
    for j in range(n):
        for k in range(n):
            if j != k:
                bjk = payments.transition_payments.get((j, k))
                sar[j, k] = (float(bjk(t)) if bjk is not None else 0.0) + reserves[k] - reserves[j]
    return dict(reserves=reserves, h1=h1, h0=h0, xi=h1.copy(), v=np.exp(-accumulated_rate) * sar)


def gauss_legendre_reserve(scenario, t, r, nodes=64):
    """
    Reserve and bond holding of state 0 with Gauss-Legendre on each piece.

    Deflated probabilities come from exponentials with the expense rates
    added to the diagonal with the opposite sign (weight exp(+int delta)).
    """
    v = scenario.vasicek
    model, payments, te = scenario.model, scenario.payments, scenario.taxexp
    g = te.gamma
    c = 1.0 - g
    horizon = model.horizon
    knots = _knots(model, payments, te)
    cuts = np.concatenate([[t], knots[(knots > t) & (knots < horizon)], [horizon]])
    x, w = np.polynomial.legendre.leggauss(nodes)
    n = model.n_states

    def modified(u):
        m = generator(model, u)
        m[np.arange(n), np.arange(n)] += np.array([float(d(u)) for d in te.expense_rates])
        return m

    def p_mod(s):
        pts = np.concatenate([[t], knots[(knots > t) & (knots < s)], [s]])
        p = np.eye(n)
        for a, b in zip(pts[:-1], pts[1:]):
            if b > a:
                p = p @ expm(modified(0.5 * (a + b)) * (b - a))
        return p

    res = num = 0.0
    for a, b in zip(cuts[:-1], cuts[1:]):
        mid = 0.5 * (a + b)
        for xi, wi in zip(x, w):
            s = mid + 0.5 * (b - a) * xi
            cvec = np.array([float(payments.sojourn_rates[j](mid)) for j in range(n)])
            for (j, k), f in model.intensities.items():
                bjk = payments.transition_payments.get((j, k))
                if bjk is not None:
                    cvec[j] += float(f(mid)) * float(bjk(mid))
            y = (p_mod(s) @ cvec)[0]
            f_tax, _, bs = vasicek_price(v.kappa, c * v.theta, c * v.sigma, t, c * r, s)
            res += 0.5 * (b - a) * wi * f_tax * y
            num += 0.5 * (b - a) * wi * bs * f_tax * y
    f_t, _, b_t = vasicek_price(v.kappa, v.theta, v.sigma, t, r, horizon)
    return res, num / (b_t * f_t)


def mc_bond_price(kappa, theta, sigma, r0, maturity, scale=1.0, n_paths=1_000_000, steps=200, seed=0, chunk=100_000):
    """
    Monte Carlo ``E[exp(-scale * int_0^maturity r)]`` over exact OU paths,
    integrating each path with the trapezoid rule. Returns (mean, standard error).
    """
    rng = np.random.default_rng(seed)
    h = maturity / steps
    decay = np.exp(-kappa * h)
    sd = sigma * np.sqrt((1.0 - decay**2) / (2.0 * kappa))
    total = total_sq = 0.0
    done = 0
    while done < n_paths:
        m = min(chunk, n_paths - done)
        r = np.full(m, r0)
        integral = np.zeros(m)
        for _ in range(steps):
            nxt = theta + (r - theta) * decay + sd * rng.standard_normal(m)
            integral += 0.5 * h * (r + nxt)
            r = nxt
        x = np.exp(-scale * integral)
        total += x.sum()
        total_sq += (x * x).sum()
        done += m
    mean = total / n_paths
    var = (total_sq - n_paths * mean**2) / (n_paths - 1)
    return mean, np.sqrt(var / n_paths)
