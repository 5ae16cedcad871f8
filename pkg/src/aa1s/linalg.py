"""Deterministic linear-algebra substrate: seeded PRNG, random matrices,
pivoted LU solves and one-step Sinkhorn-Knopp equilibration.

Dense vectors and matrices are plain float64 numpy arrays; sparse matrices
are scipy CSR arrays.  Randomness comes from :class:`SeededRng`, a
counter-based splitmix64 generator (a 64-bit Weyl sequence passed through
an xorshift-multiply finalizer).  Because each output depends only on the
seed and the draw index, streams are bit-identical across platforms and
can be generated fully vectorized.
"""

import warnings

import numpy as np
import scipy.linalg
import scipy.sparse

from .errors import SingularMatrixError, ZeroColumnError, ZeroRowError

_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_MASK = (1 << 64) - 1


def _mix(z):
    z = (z ^ (z >> np.uint64(30))) * _MIX1
    z = (z ^ (z >> np.uint64(27))) * _MIX2
    return z ^ (z >> np.uint64(31))


class SeededRng:
    """splitmix64 pseudo-random stream with an explicit 64-bit counter.

    The k-th raw draw is ``mix(seed + k * GAMMA)`` over uint64 arithmetic,
    so identical seeds give byte-identical streams everywhere.  Normal
    variates use Box-Muller on pairs of uniforms; a draw of n normals
    always consumes ``2 * ceil(n / 2)`` raw values, which keeps stream
    positions reproducible regardless of batch splits.
    """

    def __init__(self, seed):
        self.seed = int(seed) & _MASK
        self._counter = 0

    def raw(self, n):
        """Next n raw uint64 values."""
        start = self._counter + 1
        ks = np.arange(start, start + n, dtype=np.uint64) * _GAMMA
        ks += np.uint64(self.seed)
        self._counter += n
        return _mix(ks)

    def uniform(self, n):
        """n uniforms in [0, 1) with 53-bit resolution."""
        return (self.raw(n) >> np.uint64(11)) * np.float64(2.0**-53)

    def normal(self, n):
        """n standard normal variates (Box-Muller)."""
        pairs = (n + 1) // 2
        raw = self.raw(2 * pairs)
        # shift into (0, 1] so the log never sees zero
        u1 = ((raw[:pairs] >> np.uint64(11)) + np.uint64(1)) * np.float64(2.0**-53)
        u2 = (raw[pairs:] >> np.uint64(11)) * np.float64(2.0**-53)
        r = np.sqrt(-2.0 * np.log(u1))
        ang = 2.0 * np.pi * u2
        out = np.empty(2 * pairs)
        out[0::2] = r * np.cos(ang)
        out[1::2] = r * np.sin(ang)
        return out[:n]

    def spawn(self, offset):
        """Independent generator for seed + offset (instance repeats)."""
        return SeededRng((self.seed + offset) & _MASK)


def gaussian(rng, shape):
    """Dense matrix (or vector) of i.i.d. standard normals."""
    if np.isscalar(shape):
        return rng.normal(int(shape))
    r, c = shape
    return rng.normal(r * c).reshape(r, c)


def _sparse_from_mask(rng, shape, density, values_fn):
    if not 0.0 < density <= 1.0:
        raise ValueError(f"density must be in (0, 1], got {density}")
    r, c = shape
    mask = rng.uniform(r * c) < density
    nnz = int(mask.sum())
    vals = np.zeros(r * c)
    vals[mask] = values_fn(nnz)
    return scipy.sparse.csr_array(vals.reshape(r, c))


def sparse_gaussian(rng, shape, density):
    """CSR matrix with Bernoulli(density) pattern and standard normal values."""
    return _sparse_from_mask(rng, shape, density, rng.normal)


def sparse_uniform(rng, shape, density):
    """CSR matrix with Bernoulli(density) pattern and uniform [0,1) values."""
    return _sparse_from_mask(rng, shape, density, rng.uniform)


_PIVOT_RTOL = 1e-12


class LuFactor:
    """Pivoted LU factorization with an explicit singularity check.

    Uses LAPACK via scipy; raises :class:`SingularMatrixError` when any
    pivot magnitude falls below ``1e-12 * max|M|``, the double-precision
    headroom appropriate for the small systems solved here.
    """

    def __init__(self, M):
        M = np.asarray(M, dtype=float)
        if M.ndim != 2 or M.shape[0] != M.shape[1]:
            raise ValueError("LU factorization requires a square matrix")
        scale = np.abs(M).max() if M.size else 0.0
        with warnings.catch_warnings():
            # exact singularity is detected below via the pivot threshold
            warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
            self._lu, self._piv = scipy.linalg.lu_factor(M, check_finite=False)
        pivots = np.abs(np.diag(self._lu))
        if scale == 0.0 or pivots.min() <= _PIVOT_RTOL * scale:
            raise SingularMatrixError(
                f"pivot {pivots.min():.3e} below threshold {_PIVOT_RTOL * scale:.3e}"
            )

    def solve(self, b):
        return scipy.linalg.lu_solve((self._lu, self._piv), b, check_finite=False)


def lu_solve(M, b):
    """Solve M x = b by pivoted LU; raises SingularMatrixError on breakdown."""
    return LuFactor(M).solve(np.asarray(b, dtype=float))


def _row_abs_sums(A):
    if scipy.sparse.issparse(A):
        return np.asarray(abs(A).sum(axis=1)).ravel()
    return np.abs(A).sum(axis=1)


def _col_abs_sums(A):
    if scipy.sparse.issparse(A):
        return np.asarray(abs(A).sum(axis=0)).ravel()
    return np.abs(A).sum(axis=0)


def equilibrate(A, b, c=None):
    """One Sinkhorn-Knopp step of diagonal scaling on |A|.

    Returns ``(A_s, b_s, c_s, d, e)`` with ``A_s = D^-1 A E^-1`` where
    ``D = diag(d)`` holds the row absolute sums of A and ``E = diag(e)``
    the column absolute sums of ``D^-1 A``; ``b_s = D^-1 b`` and
    ``c_s = E^-1 c`` when c is given.  Solutions of the scaled system map
    back through ``x = E^-1 x_s``.
    """
    d = _row_abs_sums(A)
    if np.any(d == 0.0):
        raise ZeroRowError("matrix has an all-zero row")
    if scipy.sparse.issparse(A):
        A_left = scipy.sparse.csr_array(A.multiply(1.0 / d[:, None]))
    else:
        A_left = A / d[:, None]
    e = _col_abs_sums(A_left)
    if np.any(e == 0.0):
        raise ZeroColumnError("matrix has an all-zero column after row scaling")
    if scipy.sparse.issparse(A_left):
        A_s = scipy.sparse.csr_array(A_left.multiply(1.0 / e[None, :]))
    else:
        A_s = A_left / e[None, :]
    b_s = np.asarray(b, dtype=float) / d
    c_s = None if c is None else np.asarray(c, dtype=float) / e
    return A_s, b_s, c_s, d, e


def require_finite(x, what="array"):
    """Raise ValueError unless every entry of x is finite."""
    if not np.all(np.isfinite(x)):
        raise ValueError(f"{what} contains non-finite entries")
    return x
