"""Proximal/projection operator toolbox and cone bookkeeping."""

from dataclasses import dataclass

import numpy as np

from . import kernels

BLOCK_KINDS = ("free", "zero", "nonneg", "soc")

# dual cone of each block kind: free* = {0}, {0}* = free, the rest self-dual
_DUAL = {"free": "zero", "zero": "free", "nonneg": "nonneg", "soc": "soc"}


def shrinkage(x, kappa):
    """Soft-thresholding: sign(x_i) * (|x_i| - kappa)_+."""
    if kappa < 0:
        raise ValueError("shrinkage threshold must be nonnegative")
    return kernels.soft_threshold(np.asarray(x, dtype=float), float(kappa))


def project_nonneg(x):
    """Projection onto the nonnegative orthant."""
    return np.maximum(x, 0.0)


def project_soc(s):
    """Projection onto the second-order cone {(z, t): ||z||_2 <= t}.

    The cone axis coordinate t is the last entry.  Three branches: points
    inside the cone are fixed, points inside the polar cone map to zero,
    and the rest project onto the boundary.
    """
    s = np.asarray(s, dtype=float)
    if s.shape[0] < 1:
        raise ValueError("second-order cone needs dimension >= 1")
    if s.shape[0] == 1:
        return project_nonneg(s)
    return kernels.project_soc(s)


def project_simplex(x):
    """Euclidean projection onto the probability simplex (sort-threshold)."""
    x = np.asarray(x, dtype=float)
    if x.shape[0] < 1:
        raise ValueError("simplex projection needs dimension >= 1")
    return kernels.project_simplex(x)


def prox_l2_norm(v):
    """prox of the l2 norm: (1 - 1/||v||_2)_+ v, zero inside the unit ball."""
    v = np.asarray(v, dtype=float)
    nv = np.linalg.norm(v)
    if nv <= 1.0:
        return np.zeros_like(v)
    return (1.0 - 1.0 / nv) * v


@dataclass(frozen=True)
class ConeSpec:
    """Ordered product of cone blocks: free(d) | zero(d) | nonneg(d) | soc(d)."""

    blocks: tuple

    def __post_init__(self):
        for kind, dim in self.blocks:
            if kind not in BLOCK_KINDS:
                raise ValueError(f"unknown cone block kind {kind!r}")
            if dim < 1:
                raise ValueError("cone block dimensions must be >= 1")

    @property
    def dim(self):
        return sum(d for _, d in self.blocks)

    def dual(self):
        return ConeSpec(tuple((_DUAL[kind], d) for kind, d in self.blocks))

    def project(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape[0] != self.dim:
            raise ValueError(f"expected dimension {self.dim}, got {x.shape[0]}")
        out = np.empty_like(x)
        pos = 0
        for kind, d in self.blocks:
            seg = x[pos : pos + d]
            if kind == "free":
                out[pos : pos + d] = seg
            elif kind == "zero":
                out[pos : pos + d] = 0.0
            elif kind == "nonneg":
                out[pos : pos + d] = project_nonneg(seg)
            else:
                out[pos : pos + d] = project_soc(seg)
            pos += d
        return out

    def project_dual(self, x):
        return self.dual().project(x)


def proximal_gradient_map(grad, alpha, prox=None):
    """Fixed-point map x -> prox(x - alpha * grad(x)).

    With ``prox=None`` this is plain gradient descent; with a projection
    it is projected gradient descent; with soft-thresholding it is ISTA.
    """
    if prox is None:
        return lambda x: x - alpha * grad(x)
    return lambda x: prox(x - alpha * grad(x))
