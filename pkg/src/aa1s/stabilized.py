"""Stabilized type-I Anderson acceleration (AA-I-S-m).

The accelerator keeps an approximate inverse Jacobian H of the residual
map in factored form H = I + sum_i u_i v_i^T, never materialized.  Each
iteration forms the secant pair from the previous trial point,
orthogonalizes the update direction against the stored memory (with a
restart once the memory is full or the remainder degenerates), applies a
Powell-type damping to the secant difference so the underlying Jacobian
approximation keeps |det B| >= theta_bar^m, performs one Sherman-Morrison
rank-one update of H, and then accepts the accelerated trial point only
if the current residual passes the safeguard test; otherwise the iterate
falls back to a KM step.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .core import STEP_AA, STEP_KM
from .errors import DegenerateDenominatorError, ZeroUpdateError

# relative floor under which the Sherman-Morrison denominator counts as zero
_DENOM_RTOL = 1e-14


def powell_theta(eta, theta_bar):
    """Damping factor phi(eta) in [1 - theta_bar, 1 + theta_bar].

    Returns 1 when |eta| >= theta_bar, else (1 - sign(eta) * theta_bar)
    / (1 - eta) with the convention sign(0) = 1.
    """
    if abs(eta) >= theta_bar:
        return 1.0
    sign = 1.0 if eta >= 0.0 else -1.0
    return (1.0 - sign * theta_bar) / (1.0 - eta)


def safeguard_check(g_norm, n_aa, d, eps, u_bar):
    """True iff g_norm <= D * U_bar * (n_AA + 1)^-(1 + eps)."""
    return g_norm <= d * u_bar * (n_aa + 1) ** (-(1.0 + eps))


class AcceleratorState:
    """Memory of orthonormalized directions and rank-one factors of H.

    ``basis[:m_k]`` holds the unit-norm orthogonalized update directions
    (original norms in ``basis_norms``), ``u_factors/v_factors[:m_k]``
    the rank-one pairs with H = I + sum u_i v_i^T.  The basis and factor
    counts always match; a restart clears both.
    """

    def __init__(self, n, memory_m):
        self.n = n
        self.memory_m = memory_m
        self.basis = np.zeros((memory_m, n))
        self.basis_norms = np.zeros(memory_m)
        self.u_factors = np.zeros((memory_m, n))
        self.v_factors = np.zeros((memory_m, n))
        self.m_k = 0
        self.n_aa = 0
        self.u_bar = 0.0
        self.prev_x = None
        self.prev_g = None
        self.trial_x = None
        self.trial_g = None

    def reset_memory(self):
        self.m_k = 0

    def apply_h(self, w):
        return kernels.apply_rank_one_sum(
            self.u_factors, self.v_factors, self.m_k, w
        )

    def apply_h_transpose(self, w):
        return kernels.apply_rank_one_sum_t(
            self.u_factors, self.v_factors, self.m_k, w
        )

    def reconstruct_h(self):
        """Dense H for debugging; equals apply_h on every basis vector."""
        return np.eye(self.n) + self.u_factors[: self.m_k].T @ self.v_factors[: self.m_k]


@dataclass(frozen=True)
class StepOutcome:
    next_x: np.ndarray
    step_type: str
    restarted: bool
    theta_used: float
    denominator: float


@dataclass
class DebugRecord:
    """Per-iteration invariant data collected in debug mode (small n only)."""

    k: int
    m_k: int
    theta: float
    gamma: float
    restarted: bool
    denominator: float
    shat_norm_sq: float
    det_b: float
    norm_b: float
    hb_error: float
    norm_h: float
    norm_b_fro: float
    norm_h_fro: float
    cond_h: float


@dataclass
class DebugTracker:
    """Maintains the dense Jacobian approximation B alongside H.

    B follows the same regularized rank-one updates as H (reset to the
    identity on restarts), so H_k B_k = I up to rounding; only usable for
    n <= 50.
    """

    n: int
    records: list = field(default_factory=list)

    def __post_init__(self):
        self.B = np.eye(self.n)

    def reset(self):
        self.B = np.eye(self.n)

    def update(self, s, ytilde, shat_unit, shat_norm):
        resid = ytilde - self.B @ s
        self.B += np.outer(resid, shat_unit) / shat_norm

    def record(self, state, k, theta, gamma, restarted, denom, shat_norm_sq):
        H = state.reconstruct_h()
        hb = H @ self.B
        hb_err = np.linalg.norm(hb - np.eye(self.n))
        sign, logdet = np.linalg.slogdet(self.B)
        det = sign * math.exp(logdet) if sign != 0.0 else 0.0
        self.records.append(
            DebugRecord(
                k=k,
                m_k=state.m_k,
                theta=theta,
                gamma=gamma,
                restarted=restarted,
                denominator=denom,
                shat_norm_sq=shat_norm_sq,
                det_b=det,
                norm_b=np.linalg.norm(self.B, 2),
                hb_error=hb_err,
                norm_h=np.linalg.norm(H, 2),
                norm_b_fro=np.linalg.norm(self.B, "fro"),
                norm_h_fro=np.linalg.norm(H, "fro"),
                cond_h=np.linalg.cond(H),
            )
        )


def gram_schmidt_append(state, s, tau):
    """Orthogonalize s against the stored basis, or signal a restart.

    Returns ``(shat_unit, shat_norm, restarted)``.  A restart fires when
    the memory would exceed its cap or the orthogonal remainder falls
    under tau * ||s||; the caller must then have cleared the factor list
    (here: the shared count is reset and the raw s is enrolled).
    """
    s_norm = np.linalg.norm(s)
    if s_norm == 0.0:
        raise ZeroUpdateError("zero update direction; iterate is a fixed point")
    restarted = False
    if state.m_k + 1 > state.memory_m:
        restarted = True
        shat = s
    else:
        shat = kernels.orthogonalize(state.basis, state.m_k, s)
        if np.linalg.norm(shat) < tau * s_norm:
            restarted = True
            shat = s
    if restarted:
        state.reset_memory()
    shat_norm = float(np.linalg.norm(shat))
    idx = state.m_k
    state.basis[idx] = shat / shat_norm
    state.basis_norms[idx] = shat_norm
    return state.basis[idx], shat_norm, restarted


def update_h(state, s, y_raw, shat_unit, shat_norm, g_prev, theta_bar):
    """Powell-damped Sherman-Morrison update of the factored H.

    Computes gamma = shat^T H y / ||shat||^2, theta = phi(gamma), the
    damped secant difference ytilde = theta y + (1 - theta) B s, and
    appends the factor pair realizing
    H' = H + (s - H ytilde) shat^T H / (shat^T H ytilde).
    Returns ``(theta, gamma, ytilde, denominator)`` with the denominator
    normalized by ||shat||.

    The image B s of the underlying Jacobian approximation is available
    matrix-free in both possible states: s itself when the factor list
    is empty (H = B = I, i.e. the first iteration or right after a
    restart), and -g_prev otherwise, where the construction of the trial
    point guarantees s = -H g_prev.  Using the exact image in both cases
    is what keeps the per-update determinant factor of B at theta_bar or
    above; substituting -g_prev unconditionally loses that guarantee on
    restart iterations.
    """
    h_y = state.apply_h(y_raw)
    gamma = float(shat_unit @ h_y) / shat_norm
    theta = powell_theta(gamma, theta_bar)
    bs = s if state.m_k == 0 else -g_prev
    ytilde = theta * y_raw + (1.0 - theta) * bs
    if theta == 1.0:
        h_ytilde = h_y
    else:
        h_ytilde = theta * h_y + (1.0 - theta) * state.apply_h(bs)
    v = state.apply_h_transpose(shat_unit)
    denom = float(v @ ytilde)
    if abs(denom) <= _DENOM_RTOL * np.linalg.norm(ytilde):
        raise DegenerateDenominatorError(
            f"shat^T H ytilde = {denom:.3e} is numerically zero"
        )
    idx = state.m_k
    state.u_factors[idx] = (s - h_ytilde) / denom
    state.v_factors[idx] = v
    state.m_k = idx + 1
    return theta, gamma, ytilde, denom


def aa1s_iteration(state, config, k, x_k, g_k, debug=None):
    """One loop body of the stabilized method (iteration index k >= 1).

    Expects ``state.trial_x``/``state.trial_g`` to hold the accelerated
    trial point produced by the previous iteration and its residual, and
    ``state.prev_x``/``state.prev_g`` the previous iterate.  Produces the
    next iterate and the next trial point (left in ``state.trial_x``; its
    residual is evaluated by the driver).
    """
    s = state.trial_x - state.prev_x
    y = state.trial_g - state.prev_g
    shat_unit, shat_norm, restarted = gram_schmidt_append(state, s, config.tau)
    try:
        theta, gamma, ytilde, denom = update_h(
            state, s, y, shat_unit, shat_norm, state.prev_g, config.theta_bar
        )
    except DegenerateDenominatorError:
        # degrade to a KM step and drop the memory; arbitrary interleaving
        # of KM steps keeps the convergence guarantee intact
        state.reset_memory()
        if debug is not None:
            debug.reset()
        state.prev_x, state.prev_g = x_k, g_k
        state.trial_x = x_k - g_k
        return StepOutcome(
            next_x=x_k - config.alpha * g_k,
            step_type=STEP_KM,
            restarted=True,
            theta_used=1.0,
            denominator=0.0,
        )
    trial_next = x_k - state.apply_h(g_k)
    if safeguard_check(
        float(np.linalg.norm(g_k)),
        state.n_aa,
        config.safeguard_d,
        config.safeguard_eps,
        state.u_bar,
    ):
        next_x = trial_next
        state.n_aa += 1
        step_type = STEP_AA
    else:
        next_x = x_k - config.alpha * g_k
        step_type = STEP_KM
    if debug is not None:
        if restarted:
            debug.reset()
        debug.update(s, ytilde, shat_unit, shat_norm)
        debug.record(state, k, theta, gamma, restarted, denom, shat_norm**2)
    state.prev_x, state.prev_g = x_k, g_k
    state.trial_x = trial_next
    return StepOutcome(
        next_x=next_x,
        step_type=step_type,
        restarted=restarted,
        theta_used=theta,
        denominator=denom * shat_norm,
    )


class Aa1sDriver:
    """Plugs the stabilized accelerator into the core solve loop."""

    def __init__(self, ev, config, debug=False):
        self._ev = ev
        self._config = config
        self._debug_enabled = debug
        self.debug = None
        self._state = None
        self._x = None
        self._g = None
        self._k = 0

    def init(self, x0, g0):
        cfg = self._config
        state = AcceleratorState(x0.shape[0], cfg.memory_m)
        state.u_bar = float(np.linalg.norm(g0))
        state.prev_x, state.prev_g = x0, g0
        x1 = x0 - cfg.alpha * g0
        state.trial_x = x1
        state.trial_g = None  # evaluated lazily on the first step
        self._state = state
        self._x, self._g = x1, None
        if self._debug_enabled:
            if x0.shape[0] > 50:
                raise ValueError("debug invariants limited to n <= 50")
            self.debug = DebugTracker(x0.shape[0])

    def step(self):
        state, cfg = self._state, self._config
        if self._k == 0:
            # initialization step x^1 = f_alpha(x^0), typed KM
            self._k = 1
            self._g = self._ev.g(self._x)
            state.trial_g = self._g
            return self._x, self._g, STEP_KM
        outcome = aa1s_iteration(
            state, cfg, self._k, self._x, self._g, debug=self.debug
        )
        self._k += 1
        state.trial_g = self._ev.g(state.trial_x)
        if outcome.step_type == STEP_AA:
            g_next = state.trial_g
        else:
            g_next = self._ev.g(outcome.next_x)
        self._x, self._g = outcome.next_x, g_next
        return outcome.next_x, g_next, outcome.step_type


def multisecant_rank_one(S, Y):
    """Unregularized inductive rank-one construction of B from (S, Y).

    Starting from the identity, applies B += (y_i - B s_i) shat_i^T /
    (shat_i^T s_i) with shat_i the classical Gram-Schmidt
    orthogonalization of the columns of S.  For full-rank S this equals
    the closed-form minimum-deviation multi-secant Jacobian.
    """
    n, m = S.shape
    B = np.eye(n)
    shats = []
    for i in range(m):
        s = S[:, i]
        shat = s.copy()
        for prev in shats:
            shat = shat - (prev @ s) / (prev @ prev) * prev
        shats.append(shat)
        B = B + np.outer(Y[:, i] - B @ s, shat) / (shat @ s)
    return B
