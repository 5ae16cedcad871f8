"""Hot numeric kernels with numba-compiled and pure-numpy implementations.

Every kernel exists in two variants: a vectorized numpy one and a numba
``@njit`` one.  The module-level names used by the rest of the package
point at the numba variants by default; setting the environment variable
``AA1S_PURE_NUMPY=1`` (or running without numba installed) selects the
numpy fallbacks instead.  ``BACKEND`` records which path is active and
``REGISTRY`` exposes both variants of each kernel for parity tests and
the ``aa1s bench-kernels`` command.
"""

import os

import numpy as np

_DISABLED = os.environ.get("AA1S_PURE_NUMPY", "").lower() in ("1", "true", "yes")

try:
    if _DISABLED:
        raise ImportError("numba disabled via AA1S_PURE_NUMPY")
    from numba import njit

    _HAVE_NUMBA = True
except ImportError:
    _HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]

        def wrap(func):
            return func

        return wrap


# ---------------------------------------------------------------------------
# numpy variants
# ---------------------------------------------------------------------------


def apply_rank_one_sum_numpy(U, V, count, w):
    """(I + sum_i u_i v_i^T) w for the first `count` factor rows."""
    if count == 0:
        return w.copy()
    return w + U[:count].T @ (V[:count] @ w)


def apply_rank_one_sum_t_numpy(U, V, count, w):
    """(I + sum_i v_i u_i^T) w, the transpose of apply_rank_one_sum."""
    if count == 0:
        return w.copy()
    return w + V[:count].T @ (U[:count] @ w)


def orthogonalize_numpy(basis, count, s):
    """Residual of s against `count` orthonormal rows of `basis`."""
    if count == 0:
        return s.copy()
    return s - basis[:count].T @ (basis[:count] @ s)


def soft_threshold_numpy(x, kappa):
    """Componentwise sign(x) * max(|x| - kappa, 0)."""
    return np.sign(x) * np.maximum(np.abs(x) - kappa, 0.0)


def project_soc_numpy(s):
    """Projection onto {(z, t) : ||z||_2 <= t} with t the last entry."""
    t = s[-1]
    nz = np.sqrt(float(np.dot(s[:-1], s[:-1])))
    if nz <= t:
        return s.copy()
    if nz <= -t:
        return np.zeros_like(s)
    out = np.empty_like(s)
    c = 0.5 * (nz + t)
    out[:-1] = (c / nz) * s[:-1]
    out[-1] = c
    return out


def project_simplex_numpy(x):
    """Euclidean projection onto {u >= 0, sum(u) = 1} by sort and threshold."""
    n = x.shape[0]
    u = np.sort(x)[::-1]
    css = np.cumsum(u) - 1.0
    idx = np.arange(1, n + 1)
    cond = u - css / idx > 0.0
    rho = idx[cond][-1]
    lam = css[rho - 1] / rho
    return np.maximum(x - lam, 0.0)


def bellman_backup_numpy(indptr, indices, data, rewards_t, gamma, values):
    """max_a [R(s,a) + gamma * sum_s' P_a(s,s') v(s')] over stacked-CSR P.

    The A transition matrices are stored as one CSR matrix of shape
    (A*S, S) whose row a*S+s holds P_a(s, .); `rewards_t` is R transposed
    to shape (A, S).
    """
    n_actions, n_states = rewards_t.shape
    prods = data * values[indices]
    acc = np.concatenate((np.zeros(1), np.cumsum(prods)))
    row_sums = acc[indptr[1:]] - acc[indptr[:-1]]
    q = rewards_t + gamma * row_sums.reshape(n_actions, n_states)
    return q.max(axis=0)


# ---------------------------------------------------------------------------
# numba variants
# ---------------------------------------------------------------------------


@njit(cache=True)
def apply_rank_one_sum_numba(U, V, count, w):
    n = w.shape[0]
    out = w.copy()
    for i in range(count):
        acc = 0.0
        for j in range(n):
            acc += V[i, j] * w[j]
        for j in range(n):
            out[j] += U[i, j] * acc
    return out


@njit(cache=True)
def apply_rank_one_sum_t_numba(U, V, count, w):
    n = w.shape[0]
    out = w.copy()
    for i in range(count):
        acc = 0.0
        for j in range(n):
            acc += U[i, j] * w[j]
        for j in range(n):
            out[j] += V[i, j] * acc
    return out


@njit(cache=True)
def orthogonalize_numba(basis, count, s):
    n = s.shape[0]
    out = s.copy()
    for i in range(count):
        acc = 0.0
        for j in range(n):
            acc += basis[i, j] * s[j]
        for j in range(n):
            out[j] -= basis[i, j] * acc
    return out


@njit(cache=True)
def soft_threshold_numba(x, kappa):
    out = np.empty_like(x)
    for i in range(x.shape[0]):
        v = abs(x[i]) - kappa
        if v < 0.0:
            v = 0.0
        out[i] = v if x[i] >= 0.0 else -v
    return out


@njit(cache=True)
def project_soc_numba(s):
    n = s.shape[0]
    t = s[n - 1]
    acc = 0.0
    for i in range(n - 1):
        acc += s[i] * s[i]
    nz = np.sqrt(acc)
    if nz <= t:
        return s.copy()
    out = np.zeros_like(s)
    if nz <= -t:
        return out
    c = 0.5 * (nz + t)
    scale = c / nz
    for i in range(n - 1):
        out[i] = scale * s[i]
    out[n - 1] = c
    return out


@njit(cache=True)
def project_simplex_numba(x):
    n = x.shape[0]
    u = np.sort(x)[::-1]
    css = 0.0
    rho = 0
    lam = 0.0
    for i in range(n):
        css += u[i]
        trial = (css - 1.0) / (i + 1)
        if u[i] - trial > 0.0:
            rho = i + 1
            lam = trial
    out = np.empty_like(x)
    for i in range(n):
        v = x[i] - lam
        out[i] = v if v > 0.0 else 0.0
    return out


@njit(cache=True)
def bellman_backup_numba(indptr, indices, data, rewards_t, gamma, values):
    n_actions, n_states = rewards_t.shape
    out = np.empty(n_states)
    for s in range(n_states):
        out[s] = -np.inf
    for a in range(n_actions):
        for s in range(n_states):
            row = a * n_states + s
            acc = rewards_t[a, s]
            for p in range(indptr[row], indptr[row + 1]):
                acc += gamma * data[p] * values[indices[p]]
            if acc > out[s]:
                out[s] = acc
    return out


# ---------------------------------------------------------------------------
# dispatch
# ---------------------------------------------------------------------------

BACKEND = "numba" if _HAVE_NUMBA else "numpy"

REGISTRY = {
    "apply_rank_one_sum": (apply_rank_one_sum_numpy, apply_rank_one_sum_numba),
    "apply_rank_one_sum_t": (apply_rank_one_sum_t_numpy, apply_rank_one_sum_t_numba),
    "orthogonalize": (orthogonalize_numpy, orthogonalize_numba),
    "soft_threshold": (soft_threshold_numpy, soft_threshold_numba),
    "project_soc": (project_soc_numpy, project_soc_numba),
    "project_simplex": (project_simplex_numpy, project_simplex_numba),
    "bellman_backup": (bellman_backup_numpy, bellman_backup_numba),
}

_idx = 1 if _HAVE_NUMBA else 0
apply_rank_one_sum = REGISTRY["apply_rank_one_sum"][_idx]
apply_rank_one_sum_t = REGISTRY["apply_rank_one_sum_t"][_idx]
orthogonalize = REGISTRY["orthogonalize"][_idx]
soft_threshold = REGISTRY["soft_threshold"][_idx]
project_soc = REGISTRY["project_soc"][_idx]
project_simplex = REGISTRY["project_simplex"][_idx]
bellman_backup = REGISTRY["bellman_backup"][_idx]


def warmup():
    """Force JIT compilation of every kernel (no-op on the numpy path)."""
    if not _HAVE_NUMBA:
        return
    U = np.zeros((1, 2))
    V = np.zeros((1, 2))
    w = np.zeros(2)
    apply_rank_one_sum(U, V, 1, w)
    apply_rank_one_sum_t(U, V, 1, w)
    orthogonalize(U, 1, w)
    soft_threshold(w, 0.5)
    project_soc(np.array([0.1, 0.2, 1.0]))
    project_simplex(np.array([0.3, 0.7]))
    bellman_backup(
        np.array([0, 1, 2], dtype=np.int64),
        np.array([0, 1], dtype=np.int64),
        np.array([1.0, 1.0]),
        np.zeros((1, 2)),
        0.9,
        w,
    )
