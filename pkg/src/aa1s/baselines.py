"""Unstabilized acceleration baselines: AA-I-m, AA-II-m and plain KM.

These deliberately keep the fragility of the unmodified methods (no
regularization, no restarts) so benchmark comparisons show what the
stabilization buys.  A numerically singular inner system degrades the
step to a plain fixed-point iteration instead of aborting, which keeps
traces plottable.
"""

from collections import deque

import numpy as np

from .core import STEP_AA, STEP_KM
from .errors import SingularMatrixError
from .linalg import lu_solve


class SlidingMemory:
    """Ring buffers of the last m+1 iterates, map values and residuals."""

    def __init__(self, memory_m):
        self.memory_m = memory_m
        self.xs = deque(maxlen=memory_m + 1)
        self.fs = deque(maxlen=memory_m + 1)
        self.gs = deque(maxlen=memory_m + 1)

    def push(self, x, fx, gx):
        self.xs.append(x)
        self.fs.append(fx)
        self.gs.append(gx)

    @property
    def m_k(self):
        return len(self.xs) - 1

    def differences(self):
        """Columns S = [s_i] and Y = [y_i] of consecutive differences."""
        xs, gs = list(self.xs), list(self.gs)
        S = np.stack([xs[i + 1] - xs[i] for i in range(len(xs) - 1)], axis=1)
        Y = np.stack([gs[i + 1] - gs[i] for i in range(len(gs) - 1)], axis=1)
        return S, Y


def _alphas_from_gammas(gammas):
    m = gammas.shape[0]
    alphas = np.empty(m + 1)
    alphas[0] = gammas[0]
    alphas[1:m] = gammas[1:] - gammas[:-1]
    alphas[m] = 1.0 - gammas[m - 1]
    return alphas


def aa1_weights(S, Y, g):
    """Type-I weights from the small system (S^T Y) gamma = S^T g.

    Returns ``(gammas, alphas)`` with the mixing weights alphas summing
    to one by construction.  Raises SingularMatrixError when S^T Y is
    numerically singular; callers fall back to a plain fixed-point step.
    """
    gammas = np.atleast_1d(lu_solve(S.T @ Y, S.T @ g))
    return gammas, _alphas_from_gammas(gammas)


def aa2_weights(Y, g):
    """Type-II weights from the least-squares problem min ||g - Y gamma||.

    Rank-deficient Y is resolved by the minimum-norm solution.
    """
    gammas = np.linalg.lstsq(Y, g, rcond=None)[0]
    return gammas, _alphas_from_gammas(gammas)


def baseline_step(memory, method, g_k):
    """Next iterate as a weighted combination of the stored map values.

    With an empty memory (or a singular inner system for ``aa1``) the
    step is the plain fixed-point update f(x^k).  Returns the new point
    and the step type actually taken.
    """
    fs = list(memory.fs)
    if memory.m_k == 0:
        return fs[-1].copy(), STEP_KM
    S, Y = memory.differences()
    if method == "aa1":
        try:
            _, alphas = aa1_weights(S, Y, g_k)
        except SingularMatrixError:
            return fs[-1].copy(), STEP_KM
    elif method == "aa2":
        _, alphas = aa2_weights(Y, g_k)
    else:
        raise ValueError(f"unknown baseline method {method!r}")
    x_next = alphas[0] * fs[0]
    for j in range(1, len(alphas)):
        x_next = x_next + alphas[j] * fs[j]
    return x_next, STEP_AA


class BaselineDriver:
    """Plugs AA-I-m / AA-II-m into the core solve loop (m_k = min(m, k))."""

    def __init__(self, ev, config, method):
        self._ev = ev
        self._method = method
        self._memory = SlidingMemory(config.memory_m)

    def init(self, x0, g0):
        self._memory.push(x0, x0 - g0, g0)

    def step(self):
        g_k = self._memory.gs[-1]
        x_next, stype = baseline_step(self._memory, self._method, g_k)
        g_next = self._ev.g(x_next)
        self._memory.push(x_next, x_next - g_next, g_next)
        return x_next, g_next, stype
