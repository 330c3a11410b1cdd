"""
Finite-state Markov jump processes with piecewise-constant intensities.

Deflated transition probabilities

    p^delta_ij(t, s) = E[1{Z(s) = j} exp(-int_t^s delta_{Z(u)}(u) du) | Z(t) = i]

solve the linear systems

    d/ds p(t, s) = p(t, s) [mu - diag(delta)](s)       (forward)
    d/dt p(t, s) = -[mu - diag(delta)](t) p(t, s)      (backward)

with ``p(t, t) = I``. Both are integrated with classical RK4. Knots of the
intensities and rates are always grid nodes, so each RK4 step sees a constant
generator.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, NamedTuple

import numpy as np
from scipy.linalg import expm

from .functions import PiecewiseConstant, PiecewiseTable, as_function
from .grid import TimeGrid
from .rng import as_generator


@dataclass(frozen=True, eq=False)
class MarkovModel:
    """
    Transition intensities ``mu_jk(t)`` for ``j != k``.

    Parameters
    ----------
    n_states : int
    intensities : mapping ``(j, k) -> PiecewiseConstant | float``
        Missing pairs have zero intensity.
    horizon : float
    state_names : optional labels, used only for reporting.
    """

    n_states: int
    intensities: Mapping[tuple[int, int], PiecewiseConstant]
    horizon: float
    state_names: tuple[str, ...] | None = None
    _table: PiecewiseTable = field(init=False, repr=False)

    def __post_init__(self):
        n = int(self.n_states)
        if n < 1:
            raise ValueError("need at least one state")
        if not self.horizon > 0:
            raise ValueError("horizon must be positive")
        clean = {}
        for (j, k), f in dict(self.intensities).items():
            if not (0 <= j < n and 0 <= k < n) or j == k:
                raise ValueError(f"invalid transition ({j}, {k})")
            f = as_function(f)
            if f.min_value() < 0:
                raise ValueError(f"intensity ({j}, {k}) must be non-negative")
            clean[(int(j), int(k))] = f
        object.__setattr__(self, "n_states", n)
        object.__setattr__(self, "intensities", clean)
        if self.state_names is not None:
            names = tuple(self.state_names)
            if len(names) != n:
                raise ValueError("state_names must have one entry per state")
            object.__setattr__(self, "state_names", names)
        funcs = [
            clean.get((j, k), PiecewiseConstant.zero()) if j != k else PiecewiseConstant.zero()
            for j in range(n)
            for k in range(n)
        ]
        object.__setattr__(self, "_table", PiecewiseTable(funcs, (n, n)))

    def intensity_matrix(self, t) -> np.ndarray:
        """Off-diagonal intensities, zero diagonal; shape ``t.shape + (n, n)``."""
        return self._table(t)

    def generator(self, t) -> np.ndarray:
        m = self.intensity_matrix(t)
        d = m.sum(axis=-1)
        idx = np.arange(self.n_states)
        m[..., idx, idx] = -d
        return m

    def cumulative_intensity(self, t) -> np.ndarray:
        """``int_0^t mu_jk(u) du`` for all pairs, shape ``t.shape + (n, n)``."""
        return self._table.antiderivative(t)

    def breakpoints(self, a: float, b: float) -> np.ndarray:
        return self._table.breakpoints(a, b)

    def exit_rate_bound(self, start: float = 0.0) -> np.ndarray:
        """Per-state upper bound of the total exit intensity on ``[start, horizon]``."""
        tab = self._table
        seg = (tab.knots[1:] > start) & (tab.knots[:-1] < self.horizon)
        totals = tab.values[seg].sum(axis=-1)
        if len(totals) == 0:
            return np.zeros(self.n_states)
        return totals.max(axis=0)


@dataclass(frozen=True, eq=False)
class DeflationSpec:
    """State-wise deflation rates ``delta_j(t)``."""

    state_rates: tuple[PiecewiseConstant, ...]
    _table: PiecewiseTable = field(init=False, repr=False)

    def __post_init__(self):
        rates = tuple(as_function(f) for f in self.state_rates)
        object.__setattr__(self, "state_rates", rates)
        object.__setattr__(self, "_table", PiecewiseTable(rates, (len(rates),)))

    @classmethod
    def zero(cls, n_states: int) -> "DeflationSpec":
        return cls(tuple(PiecewiseConstant.zero() for _ in range(n_states)))

    def __neg__(self) -> "DeflationSpec":
        return DeflationSpec(tuple(-f for f in self.state_rates))

    def __call__(self, t) -> np.ndarray:
        return self._table(t)

    def antiderivative(self, t) -> np.ndarray:
        return self._table.antiderivative(t)

    def breakpoints(self, a: float, b: float) -> np.ndarray:
        return self._table.breakpoints(a, b)


def _check(model: MarkovModel, deflation: DeflationSpec, t: float, s: float, steps: int):
    if len(deflation.state_rates) != model.n_states:
        raise ValueError("deflation must have one rate per state")
    if steps < 1:
        raise ValueError("steps must be at least 1")
    if not (np.isfinite(t) and np.isfinite(s)):
        raise ValueError("t and s must be finite")
    if s < t:
        raise ValueError("s must not precede t")


def _nodes(model, deflation, t, s, steps):
    base = np.linspace(t, s, steps + 1)
    extra = np.concatenate([model.breakpoints(t, s), deflation.breakpoints(t, s)])
    return np.unique(np.concatenate([base, extra]))


def _rk4_propagator(g: np.ndarray, h: float) -> np.ndarray:
    """One RK4 step for ``x' = x g`` with constant ``g``: degree-4 Taylor polynomial."""
    hg = h * g
    n = g.shape[-1]
    eye = np.eye(n)
    # Horner form of I + hg + (hg)^2/2 + (hg)^3/6 + (hg)^4/24
    p = eye + hg / 4.0
    p = eye + (hg @ p) / 3.0
    p = eye + (hg @ p) / 2.0
    return eye + hg @ p


def _modified_generator(model, deflation, t):
    g = model.generator(t)
    idx = np.arange(model.n_states)
    g[..., idx, idx] -= deflation(t)
    return g


def deflated_transitions_forward(
    model: MarkovModel, deflation: DeflationSpec, t: float, s: float, steps: int = 200
) -> np.ndarray:
    """Solve the forward system in ``s`` from ``p(t, t) = I``; returns ``p(t, s)``."""
    _check(model, deflation, t, s, steps)
    nodes = _nodes(model, deflation, t, s, steps)
    p = np.eye(model.n_states)
    for a, b in zip(nodes[:-1], nodes[1:]):
        g = _modified_generator(model, deflation, 0.5 * (a + b))
        p = p @ _rk4_propagator(g, b - a)
    return p


def deflated_transitions_backward(
    model: MarkovModel, deflation: DeflationSpec, t: float, s: float, steps: int = 200
) -> np.ndarray:
    """Solve the backward system in ``t`` from ``p(s, s) = I``; returns ``p(t, s)``."""
    _check(model, deflation, t, s, steps)
    nodes = _nodes(model, deflation, t, s, steps)
    p = np.eye(model.n_states)
    for a, b in zip(nodes[-2::-1], nodes[:0:-1]):
        g = _modified_generator(model, deflation, 0.5 * (a + b))
        # step from b down to a: p(a) = (I + h G + ...) p(b), h = b - a
        hg = (b - a) * g
        p = _rk4_propagator(hg, 1.0) @ p
    return p


def deflated_transitions_along(
    model: MarkovModel, deflation: DeflationSpec, t: float, nodes
) -> np.ndarray:
    """
    One forward sweep from ``t`` reporting ``p(t, s)`` at each of ``nodes``.

    Between knots the generator is constant, so each piece is propagated with
    an exact matrix exponential; equal step lengths on the same piece share
    one exponential. ``nodes`` must be non-decreasing and not precede ``t``.
    Returns shape ``(len(nodes), n, n)``.
    """
    nodes = np.asarray(nodes, dtype=float)
    if len(nodes) and (nodes[0] < t or np.any(np.diff(nodes) < 0)):
        raise ValueError("nodes must be sorted and not precede t")
    if len(deflation.state_rates) != model.n_states:
        raise ValueError("deflation must have one rate per state")
    n = model.n_states
    knots = np.union1d(model._table.knots, deflation._table.knots)
    knots = knots[np.isfinite(knots)]
    out = np.empty((len(nodes), n, n))
    cache: dict = {}
    p = np.eye(n)
    cur = float(t)
    for q, target in enumerate(nodes):
        if target > cur:
            span = np.concatenate([[cur], knots[(knots > cur) & (knots < target)], [target]])
            for a, b in zip(span[:-1], span[1:]):
                seg = int(np.searchsorted(knots, 0.5 * (a + b)))
                key = (seg, round(b - a, 15))
                step = cache.get(key)
                if step is None:
                    step = expm(_modified_generator(model, deflation, 0.5 * (a + b)) * (b - a))
                    cache[key] = step
                p = p @ step
            cur = float(target)
        out[q] = p
    return out


class StatePaths(NamedTuple):
    """
    Simulated state paths.

    ``states[p, k]`` is ``Z(t_k)`` on path ``p``. Jumps are flat arrays sorted
    by path then time.
    """

    states: np.ndarray  # (P, n+1), compact integer dtype
    jump_path: np.ndarray
    jump_time: np.ndarray
    jump_from: np.ndarray
    jump_to: np.ndarray


def simulate_state_path(
    model: MarkovModel, grid: TimeGrid, initial_state: int = 0, seed=None, n_paths: int = 1
) -> StatePaths:
    """
    Simulate ``Z`` on ``[0, grid.horizon]`` by thinning.

    Candidate event times come from a homogeneous Poisson clock at the
    state's maximal exit intensity; a candidate at ``tau`` is accepted with
    probability ``mu_j(tau) / bound_j`` and the target is drawn in proportion
    to ``mu_jk(tau)``. Exact for piecewise-constant intensities.
    """
    if not isinstance(grid, TimeGrid):
        grid = TimeGrid(np.asarray(grid, dtype=float))
    if not (0 <= int(initial_state) < model.n_states) or int(initial_state) != initial_state:
        raise ValueError(f"invalid initial state {initial_state!r}")
    if grid.horizon > model.horizon * (1 + 1e-12):
        raise ValueError("grid extends beyond the model horizon")
    rng = as_generator(seed)
    horizon = grid.horizon
    bound = model.exit_rate_bound()

    n = model.n_states
    cur_state = np.full(n_paths, int(initial_state))
    cur_time = np.zeros(n_paths)
    active = np.arange(n_paths)
    rec_path, rec_time, rec_from, rec_to = [], [], [], []
    while active.size:
        lam = bound[cur_state[active]]
        alive = lam > 0
        active = active[alive]
        lam = lam[alive]
        if not active.size:
            break
        cand = cur_time[active] + rng.exponential(size=active.size) / lam
        u = rng.random(active.size)
        v = rng.random(active.size)
        inside = cand <= horizon
        active, cand, lam, u, v = active[inside], cand[inside], lam[inside], u[inside], v[inside]
        cur_time[active] = cand
        rates = model.intensity_matrix(cand)[np.arange(active.size), cur_state[active]]
        total = rates.sum(axis=-1)
        accept = u * lam < total
        if accept.any():
            idx = active[accept]
            cum = np.cumsum(rates[accept], axis=-1)
            target = (v[accept] * total[accept])[:, None] < cum
            dest = np.argmax(target, axis=-1)
            rec_path.append(idx)
            rec_time.append(cand[accept])
            rec_from.append(cur_state[idx].copy())
            rec_to.append(dest)
            cur_state[idx] = dest

    if rec_path:
        jp = np.concatenate(rec_path)
        jt = np.concatenate(rec_time)
        jf = np.concatenate(rec_from)
        jto = np.concatenate(rec_to)
        order = np.lexsort((jt, jp))
        jp, jt, jf, jto = jp[order], jt[order], jf[order], jto[order]
    else:
        jp = np.zeros(0, dtype=int)
        jt = np.zeros(0)
        jf = np.zeros(0, dtype=int)
        jto = np.zeros(0, dtype=int)

    dtype = np.int8 if n < 128 else np.int32
    states = np.full((n_paths, len(grid)), int(initial_state), dtype=dtype)
    if jp.size:
        # the state from column searchsorted(times, tau, 'left') onwards is the jump's target
        col = np.searchsorted(grid.times, jt, side="left")
        delta = np.zeros((n_paths, len(grid) + 1), dtype=dtype)
        np.add.at(delta, (jp, col), (jto - jf).astype(dtype))
        states += np.cumsum(delta, axis=1, dtype=dtype)[:, :-1]
    return StatePaths(states, jp, jt, jf, jto)
