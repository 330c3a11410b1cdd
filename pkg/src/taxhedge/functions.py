"""
Piecewise-constant functions of time.

Intensities, expense rates and payment rates are all represented as
right-continuous step functions. ``PiecewiseTable`` stacks several of them
onto a common set of knots so that they can be evaluated and integrated for
many times at once.
"""

from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np


class PiecewiseConstant:
    """
    Right-continuous step function.

    The function takes ``values[i]`` on ``[knots[i], knots[i+1])`` and zero
    outside ``[knots[0], knots[-1]]``; at the last knot it keeps the last
    value. The last knot may be ``inf``.

    Parameters
    ----------
    knots : array_like
        Strictly increasing, length ``m + 1``.
    values : array_like
        Finite, length ``m``.
    """

    __slots__ = ("knots", "values", "_cum")

    def __init__(self, knots: Sequence[float], values: Sequence[float]):
        knots = np.asarray(knots, dtype=float)
        values = np.asarray(values, dtype=float)
        if knots.ndim != 1 or values.ndim != 1 or len(knots) != len(values) + 1:
            raise ValueError("need len(knots) == len(values) + 1 >= 2")
        if len(values) == 0:
            raise ValueError("need at least one segment")
        if np.isnan(knots).any() or np.any(np.diff(knots) <= 0):
            raise ValueError("knots must be strictly increasing")
        if not np.all(np.isfinite(values)):
            raise ValueError("values must be finite")
        if not np.isfinite(knots[0]):
            raise ValueError("first knot must be finite")
        self.knots = knots
        self.values = values
        widths = np.diff(knots)[:-1]
        self._cum = np.concatenate([[0.0], np.cumsum(values[:-1] * widths)])

    @classmethod
    def constant(cls, value: float, start: float = 0.0) -> "PiecewiseConstant":
        return cls([start, np.inf], [value])

    @classmethod
    def zero(cls) -> "PiecewiseConstant":
        return cls.constant(0.0)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        m = len(self.values)
        idx = np.searchsorted(self.knots, t, side="right") - 1
        inside = (t >= self.knots[0]) & (t <= self.knots[-1])
        out = self.values[np.clip(idx, 0, m - 1)]
        return np.where(inside, out, 0.0)

    def antiderivative(self, t):
        """Integral from the first knot to ``t``."""
        t = np.asarray(t, dtype=float)
        m = len(self.values)
        tc = np.clip(t, self.knots[0], self.knots[-1])
        idx = np.clip(np.searchsorted(self.knots, tc, side="right") - 1, 0, m - 1)
        return self._cum[idx] + self.values[idx] * (tc - self.knots[idx])

    def integral(self, a, b):
        return self.antiderivative(b) - self.antiderivative(a)

    def breakpoints(self, a: float, b: float) -> np.ndarray:
        """Knots strictly inside ``(a, b)``."""
        k = self.knots
        return k[(k > a) & (k < b)]

    def max_on(self, a: float, b: float) -> float:
        k = self.knots
        hit = (k[1:] > a) & (k[:-1] < b)
        if not hit.any():
            return 0.0
        return float(self.values[hit].max())

    def min_value(self) -> float:
        return float(self.values.min())

    def is_zero(self) -> bool:
        return not np.any(self.values)

    def __neg__(self) -> "PiecewiseConstant":
        return PiecewiseConstant(self.knots, -self.values)

    def __mul__(self, c: float) -> "PiecewiseConstant":
        return PiecewiseConstant(self.knots, self.values * float(c))

    __rmul__ = __mul__

    def __eq__(self, other) -> bool:
        if not isinstance(other, PiecewiseConstant):
            return NotImplemented
        return np.array_equal(self.knots, other.knots) and np.array_equal(
            self.values, other.values
        )

    def __hash__(self):
        return hash((self.knots.tobytes(), self.values.tobytes()))

    def __repr__(self) -> str:
        return f"PiecewiseConstant(knots={self.knots.tolist()}, values={self.values.tolist()})"


def as_function(f) -> PiecewiseConstant:
    """Coerce a number or ``PiecewiseConstant`` to a ``PiecewiseConstant``."""
    if isinstance(f, PiecewiseConstant):
        return f
    if f is None:
        return PiecewiseConstant.zero()
    value = float(f)
    if not np.isfinite(value):
        raise ValueError("rate must be finite")
    return PiecewiseConstant.constant(value)


class PiecewiseTable:
    """
    Several step functions resampled on their common knots.

    ``values`` has shape ``(m, *shape)``; evaluation at an array of times of
    shape ``S`` returns shape ``S + shape``.
    """

    def __init__(self, functions: Iterable[PiecewiseConstant], shape: tuple[int, ...]):
        functions = [as_function(f) for f in functions]
        if len(functions) != int(np.prod(shape)):
            raise ValueError("number of functions does not match shape")
        knots = np.unique(np.concatenate([f.knots for f in functions]))
        if not np.isfinite(knots[-1]):
            knots = knots[np.isfinite(knots)]
            knots = np.append(knots, np.inf)
        if len(knots) < 2:
            knots = np.array([knots[0], np.inf])
        # sample each function at segment left ends (right-continuity)
        left = knots[:-1]
        vals = np.stack([f(left) for f in functions], axis=-1)
        self.knots = knots
        self.shape = tuple(shape)
        self.values = vals.reshape((len(left),) + self.shape)
        widths = np.diff(knots)[:-1]
        steps = self.values[:-1] * widths.reshape((-1,) + (1,) * len(self.shape))
        self._cum = np.concatenate(
            [np.zeros((1,) + self.shape), np.cumsum(steps, axis=0)], axis=0
        )
        self._start = knots[0]

    def _index(self, t):
        m = len(self.knots) - 1
        return np.clip(np.searchsorted(self.knots, t, side="right") - 1, 0, m - 1)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        out = self.values[self._index(t)]
        inside = (t >= self.knots[0]) & (t <= self.knots[-1])
        return np.where(inside.reshape(inside.shape + (1,) * len(self.shape)), out, 0.0)

    def antiderivative(self, t):
        t = np.asarray(t, dtype=float)
        tc = np.clip(t, self.knots[0], self.knots[-1])
        idx = self._index(tc)
        dt = (tc - self.knots[idx]).reshape(tc.shape + (1,) * len(self.shape))
        return self._cum[idx] + self.values[idx] * dt

    def breakpoints(self, a: float, b: float) -> np.ndarray:
        k = self.knots
        return k[(k > a) & (k < b)]
