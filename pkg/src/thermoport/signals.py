"""Input signals for simulations.

A signal maps time to an input vector. Evaluation at ``t`` gives the right
limit; :meth:`Signal.left` gives the left limit, which the integrator uses
at the end of a step so that jumps take effect exactly at breakpoints.
"""

import numpy as np

__all__ = [
    "Signal",
    "Constant",
    "PiecewiseConstant",
    "PiecewiseLinear",
    "Sinusoids",
    "FunctionSignal",
    "random_smooth",
]


class Signal:
    """Base class; subclasses implement ``__call__`` and may override ``left``."""

    n_inputs = 0
    breakpoints = np.empty(0)

    def __call__(self, t):
        raise NotImplementedError

    def left(self, t):
        return self(t)


class Constant(Signal):
    def __init__(self, values):
        self.values = np.atleast_1d(np.asarray(values, dtype=float))
        self.n_inputs = self.values.size

    def __call__(self, t):
        return self.values.copy()


class PiecewiseConstant(Signal):
    """Value ``values[i]`` on ``[times[i], times[i+1])``; the last value holds afterwards.

    Before ``times[0]`` the first value is used.
    """

    def __init__(self, times, values):
        self.times = np.asarray(times, dtype=float)
        v = np.asarray(values, dtype=float)
        self.values = v[:, None] if v.ndim == 1 else v
        if self.times.ndim != 1 or self.times.size != self.values.shape[0]:
            raise ValueError("need one value row per segment start time")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("segment start times must be strictly increasing")
        self.n_inputs = self.values.shape[1]
        self.breakpoints = self.times[1:].copy()

    def _index(self, t, side):
        i = np.searchsorted(self.times, t, side=side) - 1
        return min(max(i, 0), self.times.size - 1)

    def __call__(self, t):
        return self.values[self._index(t, "right")].copy()

    def left(self, t):
        return self.values[self._index(t, "left")].copy()


class PiecewiseLinear(Signal):
    """Continuous linear interpolation between knots, constant outside."""

    def __init__(self, times, values):
        self.times = np.asarray(times, dtype=float)
        v = np.asarray(values, dtype=float)
        self.values = v[:, None] if v.ndim == 1 else v
        if self.times.ndim != 1 or self.times.size != self.values.shape[0]:
            raise ValueError("need one value row per knot")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("knot times must be strictly increasing")
        self.n_inputs = self.values.shape[1]
        self.breakpoints = self.times.copy()

    def __call__(self, t):
        return np.array([np.interp(t, self.times, self.values[:, j]) for j in range(self.n_inputs)])


class Sinusoids(Signal):
    """``u_j(t) = offset_j + sum_k amp_jk sin(2 pi freq_jk t + phase_jk)``."""

    def __init__(self, offsets, amplitudes, frequencies, phases):
        self.offsets = np.atleast_1d(np.asarray(offsets, dtype=float))
        self.amplitudes = np.atleast_2d(np.asarray(amplitudes, dtype=float))
        self.frequencies = np.atleast_2d(np.asarray(frequencies, dtype=float))
        self.phases = np.atleast_2d(np.asarray(phases, dtype=float))
        self.n_inputs = self.offsets.size

    def __call__(self, t):
        arg = 2.0 * np.pi * self.frequencies * t + self.phases
        return self.offsets + np.sum(self.amplitudes * np.sin(arg), axis=1)


class FunctionSignal(Signal):
    """Wrap ``fn(t) -> array``; optional ``left_fn`` and breakpoints."""

    def __init__(self, fn, n_inputs, breakpoints=(), left_fn=None):
        self.fn = fn
        self.left_fn = left_fn
        self.n_inputs = int(n_inputs)
        self.breakpoints = np.asarray(breakpoints, dtype=float)

    def __call__(self, t):
        return np.atleast_1d(np.asarray(self.fn(t), dtype=float))

    def left(self, t):
        if self.left_fn is None:
            return self(t)
        return np.atleast_1d(np.asarray(self.left_fn(t), dtype=float))


def random_smooth(n_inputs, rng, amplitude=1.0, n_terms=3, max_frequency=2.0, offset=0.0):
    """Random smooth signal: a few sinusoids per channel with random phases."""
    amp = amplitude * rng.uniform(0.2, 1.0, size=(n_inputs, n_terms)) / n_terms
    freq = rng.uniform(0.1, max_frequency, size=(n_inputs, n_terms))
    phase = rng.uniform(0.0, 2.0 * np.pi, size=(n_inputs, n_terms))
    off = offset * rng.uniform(-1.0, 1.0, size=n_inputs)
    return Sinusoids(off, amp, freq, phase)
