"""The benchmark problem families as fixed-point maps with seeded generators.

Each generator follows the published data recipes (sparse Gaussian data,
feasibility-certified cone programs, row-normalized random MDPs, ...) at
sizes given by a ``sizes`` dict, attaches the recipe's initial point, and
declares the map's norm regime.  Known solutions are attached where the
construction provides them (cone certificates, -A^-1 b for the linear
system, a high-accuracy value-iteration oracle for MDPs).
"""

import csv as _csv
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.sparse
import scipy.special

from . import kernels
from .core import CONTRACTIVE, NONEXPANSIVE, FixedPointProblem, NormRegime
from .linalg import (
    LuFactor,
    SeededRng,
    equilibrate,
    gaussian,
    lu_solve,
    sparse_gaussian,
    sparse_uniform,
)
from .operators import (
    ConeSpec,
    project_nonneg,
    project_simplex,
    project_soc,
    prox_l2_norm,
    shrinkage,
)


# ---------------------------------------------------------------------------
# instance containers
# ---------------------------------------------------------------------------


@dataclass
class ConicProgram:
    """Conic program data with its self-dual homogeneous embedding.

    ``q`` is the skew-symmetric embedding matrix; ``cone`` the cone C of
    the embedding variable u (its dual applies to v).
    """

    A: np.ndarray
    b: np.ndarray
    c: np.ndarray
    cone: ConeSpec
    q: np.ndarray
    certificate_u: np.ndarray
    certificate_v: np.ndarray
    solve_iq: object = None  # prefactorized (I + Q), SCS form only
    subspace_chol: object = None  # prefactorized (I + Q^T Q), AP form only


@dataclass
class MdpInstance:
    """Tabular MDP: stacked CSR transitions (row a*S+s is P_a(s, .))."""

    n_states: int
    n_actions: int
    transitions: scipy.sparse.csr_array
    rewards: np.ndarray  # (S, A)
    gamma: float
    rewards_t: np.ndarray = None  # (A, S), C-contiguous copy for the kernel

    def __post_init__(self):
        if self.rewards_t is None:
            self.rewards_t = np.ascontiguousarray(self.rewards.T)
        self._indptr = self.transitions.indptr.astype(np.int64)
        self._indices = self.transitions.indices.astype(np.int64)
        self._data = self.transitions.data.astype(np.float64)


@dataclass
class HbInstance:
    """Positive-definite linear system with heavy-ball step sizes.

    ``alpha = 4 / (sqrt(L) + sqrt(mu))^2`` and ``beta`` is the squared
    momentum ratio ``((sqrt(L) - sqrt(mu)) / (sqrt(L) + sqrt(mu)))^2``
    so the iteration matrix satisfies rho(T) <= (sqrt(k)-1)/(sqrt(k)+1)
    whenever mu, L bound the spectrum.
    """

    A: np.ndarray
    b: np.ndarray
    mu: float
    L: float

    @property
    def alpha(self):
        return 4.0 / (np.sqrt(self.L) + np.sqrt(self.mu)) ** 2

    @property
    def beta(self):
        r = (np.sqrt(self.L) - np.sqrt(self.mu)) / (np.sqrt(self.L) + np.sqrt(self.mu))
        return r**2

    @property
    def kappa(self):
        return self.L / self.mu

    def iteration_matrix(self):
        n = self.A.shape[0]
        eye = np.eye(n)
        top = np.hstack([(1.0 + self.beta) * eye - self.alpha * self.A, -self.beta * eye])
        bot = np.hstack([eye, np.zeros((n, n))])
        return np.vstack([top, bot])


@dataclass
class ProblemInstance:
    """Generated data plus the ready-to-solve fixed-point problem."""

    family: str
    sizes: dict
    seed: int
    data: object
    problem: FixedPointProblem
    config_overrides: dict = field(default_factory=dict)


# ---------------------------------------------------------------------------
# fixed-point maps
# ---------------------------------------------------------------------------


def gd_map(inst, x):
    """Gradient-descent map x - alpha * grad F(x) for regularized logistic
    regression with the 1/m-scaled objective."""
    z = inst["labels"] * (inst["X"] @ x)
    sig = scipy.special.expit(z)
    grad = inst["X"].T @ (sig * inst["labels"]) / inst["n_samples"] + inst["lam"] * x
    return x - inst["step"] * grad


def pgd_map(inst, x):
    """Projected-gradient map for NNLS: clip(x - alpha (A^T A x - A^T b))."""
    return project_nonneg(x - inst["step"] * (inst["AtA"] @ x - inst["Atb"]))


def ccmg_map(inst, x):
    """Projected-gradient map for the slack-form matrix game LP."""
    m, n = inst["m"], inst["n"]
    u, s, t = x[:m], x[m : m + n], x[m + n]
    r = inst["P"].T @ u + s - t
    gu = inst["P"] @ r
    gs = r
    gt = 1.0 - r.sum()
    step = inst["step"]
    out = np.empty_like(x)
    out[:m] = project_simplex(u - step * gu)
    out[m : m + n] = project_nonneg(s - step * gs)
    out[m + n] = t - step * gt
    return out


def ista_map(inst, x):
    """Shrinkage-thresholded gradient map for elastic net regression."""
    grad = inst["AtA"] @ x - inst["Atb"] + 0.5 * inst["mu"] * x
    return shrinkage(x - inst["step"] * grad, inst["kappa"])


def ap_map(prog, w):
    """Alternating projection onto D = C x C* then the subspace {Qu = v}."""
    d = prog.q.shape[0]
    u, v = w[:d], w[d:]
    pu = prog.cone.project(u)
    pv = prog.cone.project_dual(v)
    rhs = pu + prog.q.T @ pv
    u2 = scipy.linalg.cho_solve(prog.subspace_chol, rhs, check_finite=False)
    return np.concatenate([u2, prog.q @ u2])


def scs_map(prog, w):
    """One splitting step on the homogeneous embedding of a cone program."""
    d = prog.q.shape[0]
    u, v = w[:d], w[d:]
    ut = prog.solve_iq.solve(u + v)
    u2 = prog.cone.project(ut - v)
    v2 = v - ut + u2
    return np.concatenate([u2, v2])


def consensus_map(proxes, z_blocks, alpha=1.0):
    """Consensus splitting step z_i <- z_i + 2 xbar - x_i - zbar.

    ``proxes`` are the prox operators of the block objectives evaluated
    at parameter alpha; generic reference implementation used for tests
    and cross-checks (the facility map below is its vectorized special
    case).
    """
    xs = [prox(z, alpha) for prox, z in zip(proxes, z_blocks)]
    xbar = np.mean(xs, axis=0)
    zbar = np.mean(z_blocks, axis=0)
    return [z + 2.0 * xbar - x - zbar for z, x in zip(z_blocks, xs)]


def facility_map(inst, z):
    """Vectorized consensus step for facility location.

    The block objectives are F_i(x) = ||x - c_i||_2, whose prox is the
    shifted l2-norm prox x_i = c_i + prox_l2(z_i - c_i).
    """
    C = inst["C"]
    m, n = C.shape
    Z = z.reshape(m, n)
    U = Z - C
    norms = np.linalg.norm(U, axis=1)
    scale = np.where(norms > 1.0, 1.0 - 1.0 / np.maximum(norms, 1.0), 0.0)
    X = C + scale[:, None] * U
    Zp = Z + 2.0 * X.mean(axis=0) - X - Z.mean(axis=0)
    return Zp.ravel()


def bellman_op(mdp, values):
    """(T v)_s = max_a [ R(s,a) + gamma * sum_s' P_a(s,s') v_s' ]."""
    return kernels.bellman_backup(
        mdp._indptr, mdp._indices, mdp._data, mdp.rewards_t, mdp.gamma, values
    )


def hb_map(inst, w):
    """Heavy-ball iteration on the stacked state (x', x)."""
    n = inst.A.shape[0]
    xp, xm = w[:n], w[n:]
    xn = xp - inst.alpha * (inst.A @ xp + inst.b) + inst.beta * (xp - xm)
    return np.concatenate([xn, xp])


def hb_spectral_radius(inst):
    """Spectral radius of the heavy-ball iteration matrix.

    T block-diagonalizes over the eigenvalues of the symmetric A into
    2x2 companions [[1+beta-alpha*lam, -beta], [1, 0]], so rho(T) is the
    largest companion-root modulus.  The quadratic is evaluated in
    extended precision with lam clamped to the certified interval
    [mu, L]: the discriminant vanishes exactly at the interval edges, so
    plain double arithmetic (or dense eigvals of T) smears the root
    moduli by ~sqrt(eps) there.
    """
    lams = np.linalg.eigvalsh(inst.A)
    ld = np.longdouble
    mu, L = ld(inst.mu), ld(inst.L)
    s_l, s_mu = np.sqrt(L), np.sqrt(mu)
    alpha = 4.0 / (s_l + s_mu) ** 2
    beta = ((s_l - s_mu) / (s_l + s_mu)) ** 2
    lams = np.clip(lams.astype(ld), mu, L)
    c = 1.0 + beta - alpha * lams
    disc = c * c - 4.0 * beta
    mod = np.where(
        disc <= 0.0,
        np.sqrt(beta),
        (np.abs(c) + np.sqrt(np.maximum(disc, ld(0.0)))) / 2.0,
    )
    return float(mod.max())


# ---------------------------------------------------------------------------
# generators
# ---------------------------------------------------------------------------


def _unit(v):
    return v / np.linalg.norm(v)


def load_csv_dataset(path):
    """CSV rows of n feature columns plus a trailing +-1 label column.

    A single header row is permitted and skipped if its first field does
    not parse as a number.
    """
    with open(path, newline="") as fh:
        rows = list(_csv.reader(fh))
    if not rows:
        raise ValueError(f"empty dataset {path}")
    try:
        float(rows[0][0])
    except ValueError:
        rows = rows[1:]
    arr = np.array([[float(v) for v in row] for row in rows])
    X, y = arr[:, :-1], arr[:, -1]
    if not np.all(np.isin(y, (-1.0, 1.0))):
        raise ValueError("labels must be +-1 in the last column")
    return X, y


def gen_logreg(rng, sizes, csv_path=None):
    """Regularized logistic regression solved by gradient descent."""
    lam = sizes.get("lam", 0.01)
    if csv_path is not None:
        X, y = load_csv_dataset(csv_path)
    else:
        m, n = sizes["m"], sizes["n"]
        X = gaussian(rng, (m, n))
        y = np.where(rng.uniform(m) < 0.5, -1.0, 1.0)
    m, n = X.shape
    lip = np.linalg.norm(X, 2) ** 2 / (4.0 * m)
    step = 2.0 / (lip + lam)
    inst = {
        "X": X,
        "labels": y,
        "lam": lam,
        "step": step,
        "n_samples": m,
        "lipschitz": lip,
    }
    x0 = gaussian(rng, n)
    x0 = 0.001 * _unit(x0)  # small start avoids overflow in the exponentials
    problem = FixedPointProblem(
        n=n,
        f=lambda x: gd_map(inst, x),
        regime=NormRegime(NONEXPANSIVE),
        x0=x0,
        name="gd_logreg",
    )
    return inst, problem


def gen_nnls(rng, sizes):
    """Nonnegative least squares solved by projected gradient descent."""
    m, n = sizes["m"], sizes["n"]
    A = gaussian(rng, (m, n))
    b = gaussian(rng, m)
    AtA = A.T @ A
    step = 1.8 / np.linalg.norm(AtA, 2)
    inst = {"A": A, "b": b, "AtA": AtA, "Atb": A.T @ b, "step": step}
    problem = FixedPointProblem(
        n=n,
        f=lambda x: pgd_map(inst, x),
        regime=NormRegime(NONEXPANSIVE),
        x0=_unit(gaussian(rng, n)),
        name="pgd_nnls",
    )
    return inst, problem


def gen_ccmg(rng, sizes):
    """Convex-concave matrix game in slack form, solved by PGD."""
    m, n = sizes["m"], sizes["n"]
    P = gaussian(rng, (m, n))
    # Lipschitz constant of the quadratic part: ||[P^T, I, -1]||_2^2
    stacked = np.hstack([P.T, np.eye(n), -np.ones((n, 1))])
    step = 1.8 / np.linalg.norm(stacked, 2) ** 2
    inst = {"P": P, "m": m, "n": n, "step": step}
    dim = m + n + 1
    problem = FixedPointProblem(
        n=dim,
        f=lambda x: ccmg_map(inst, x),
        regime=NormRegime(NONEXPANSIVE),
        x0=_unit(gaussian(rng, dim)),
        name="pgd_ccmg",
    )
    return inst, problem


def gen_enr(rng, sizes):
    """Elastic net regression solved by ISTA, 10%-sparse planted signal."""
    m, n = sizes["m"], sizes["n"]
    A = gaussian(rng, (m, n))
    xhat = sparse_gaussian(rng, (n, 1), 0.1).toarray().ravel()
    b = A @ xhat + 0.1 * gaussian(rng, m)
    Atb = A.T @ b
    mu = 0.001 * np.abs(Atb).max()
    AtA = A.T @ A
    lip = np.linalg.norm(AtA, 2) + 0.5 * mu
    step = 1.8 / lip
    inst = {
        "A": A,
        "b": b,
        "AtA": AtA,
        "Atb": Atb,
        "mu": mu,
        "step": step,
        "kappa": 0.5 * step * mu,
    }
    problem = FixedPointProblem(
        n=n,
        f=lambda x: ista_map(inst, x),
        regime=NormRegime(NONEXPANSIVE),
        x0=_unit(gaussian(rng, n)),
        name="ista_enr",
    )
    return inst, problem


def gen_facility(rng, sizes):
    """Facility location by consensus splitting over m distance terms."""
    m, n = sizes["m"], sizes["n"]
    C = sparse_gaussian(rng, (m, n), 0.01).toarray()
    inst = {"C": C, "m": m, "n": n}
    dim = m * n
    problem = FixedPointProblem(
        n=dim,
        f=lambda z: facility_map(inst, z),
        regime=NormRegime(NONEXPANSIVE),
        x0=_unit(gaussian(rng, dim)),
        name="co_facility",
    )
    return inst, problem


def _embedding_dim(m, n):
    return n + m + 1


def gen_lp_sdhe(rng, sizes):
    """Equality-form LP as a homogeneous embedding solved by alternating
    projections; data certified primal and dual feasible, then equilibrated."""
    m, n = sizes["m"], sizes["n"]
    A = sparse_gaussian(rng, (m, n), 0.1)
    zstar = gaussian(rng, n)
    xstar = np.maximum(zstar, 0.0)
    sstar = np.maximum(-zstar, 0.0)
    ystar = gaussian(rng, m)
    b = A @ xstar
    c = A.T @ ystar + sstar
    A_s, b_s, c_s, d, e = equilibrate(A, b, c)
    xstar_s = e * xstar
    sstar_s = sstar / e
    ystar_s = d * ystar
    Ad = A_s.toarray()
    dim = _embedding_dim(m, n)
    q = np.zeros((dim, dim))
    q[:n, n : n + m] = -Ad.T
    q[:n, -1] = c_s
    q[n : n + m, :n] = Ad
    q[n : n + m, -1] = -b_s
    q[-1, :n] = -c_s
    q[-1, n : n + m] = b_s
    cone = ConeSpec((("nonneg", n), ("free", m), ("nonneg", 1)))
    ustar = np.concatenate([xstar_s, ystar_s, [1.0]])
    vstar = q @ ustar
    chol = scipy.linalg.cho_factor(np.eye(dim) + q.T @ q, check_finite=False)
    prog = ConicProgram(
        A=A_s, b=b_s, c=c_s, cone=cone, q=q,
        certificate_u=ustar, certificate_v=vstar, subspace_chol=chol,
    )
    known = np.concatenate([ustar, vstar])
    problem = FixedPointProblem(
        n=2 * dim,
        f=lambda w: ap_map(prog, w),
        regime=NormRegime(NONEXPANSIVE),
        known_solution=known,
        x0=_unit(gaussian(rng, 2 * dim)),
        name="ap_lp",
    )
    return prog, problem


def _scs_data(rng, m, n):
    half = n // 2
    left = sparse_gaussian(rng, (m, half), 0.1).toarray()
    A = np.hstack([left, np.eye(m, n - half)]) + 1e-3 * gaussian(rng, (m, n))
    return A


def _gen_scs(rng, sizes, soc):
    m, n = sizes["m"], sizes["n"]
    A = _scs_data(rng, m, n)
    zstar = gaussian(rng, m)
    if soc:
        sstar = project_soc(zstar)
        ystar = sstar - zstar  # Moreau split: s* in K, y* in K*, s*^T y* = 0
        cone_block = ("soc", m)
    else:
        sstar = np.maximum(zstar, 0.0)
        ystar = np.maximum(-zstar, 0.0)
        cone_block = ("nonneg", m)
    xstar = gaussian(rng, n)
    b = A @ xstar + sstar
    c = -A.T @ ystar
    dim = _embedding_dim(m, n)
    q = np.zeros((dim, dim))
    q[:n, n : n + m] = A.T
    q[:n, -1] = c
    q[n : n + m, :n] = -A
    q[n : n + m, -1] = b
    q[-1, :n] = -c
    q[-1, n : n + m] = -b
    cone = ConeSpec((("free", n), cone_block, ("nonneg", 1)))
    ustar = np.concatenate([xstar, ystar, [1.0]])
    vstar = q @ ustar
    solve_iq = LuFactor(np.eye(dim) + q)
    prog = ConicProgram(
        A=A, b=b, c=c, cone=cone, q=q,
        certificate_u=ustar, certificate_v=vstar, solve_iq=solve_iq,
    )
    known = np.concatenate([ustar, vstar])
    name = "scs_socp" if soc else "scs_lp"
    problem = FixedPointProblem(
        n=2 * dim,
        f=lambda w: scs_map(prog, w),
        regime=NormRegime(NONEXPANSIVE),
        known_solution=known,
        x0=_unit(gaussian(rng, 2 * dim)),
        name=name,
    )
    return prog, problem


def gen_cone_lp(rng, sizes):
    """Feasibility-certified LP in SCS inequality form."""
    return _gen_scs(rng, sizes, soc=False)


def gen_cone_socp(rng, sizes):
    """Feasibility-certified SOCP in SCS inequality form."""
    return _gen_scs(rng, sizes, soc=True)


def gen_mdp(rng, sizes):
    """Random sparse MDP; transitions row-normalized, diagonal jitter
    guards against all-zero rows."""
    S, A, gamma = sizes["S"], sizes["A"], sizes.get("gamma", 0.99)
    blocks = []
    for _ in range(A):
        P = sparse_uniform(rng, (S, S), 0.01) + 0.001 * scipy.sparse.eye_array(S)
        P = scipy.sparse.csr_array(P)
        row_sums = np.asarray(P.sum(axis=1)).ravel()
        P = scipy.sparse.csr_array(P.multiply(1.0 / row_sums[:, None]))
        blocks.append(P)
    transitions = scipy.sparse.csr_array(scipy.sparse.vstack(blocks))
    R = sparse_gaussian(rng, (S, A), 0.01).toarray()
    mdp = MdpInstance(
        n_states=S, n_actions=A, transitions=transitions, rewards=R, gamma=gamma
    )
    oracle = value_iteration_oracle(mdp)
    problem = FixedPointProblem(
        n=S,
        f=lambda v: bellman_op(mdp, v),
        regime=NormRegime(CONTRACTIVE, gamma=gamma, norm="linf"),
        known_solution=oracle,
        x0=np.zeros(S),
        name="vi_mdp",
    )
    return mdp, problem


def value_iteration_oracle(mdp, tol=1e-13, max_iters=20000):
    """Vanilla value iteration run to near machine precision."""
    v = np.zeros(mdp.n_states)
    for _ in range(max_iters):
        tv = bellman_op(mdp, v)
        if np.abs(tv - v).max() <= tol:
            return tv
        v = tv
    raise RuntimeError("value iteration oracle failed to converge")


def gen_hb_linear(rng, sizes, scale=True):
    """Ill-conditioned positive-definite system solved by heavy ball.

    ``scale=True`` applies the one-step equilibration the benchmark uses;
    ``scale=False`` keeps the raw A = B^T B + 0.005 I for which mu=0.005
    and L=||A||_F are certified spectrum bounds.
    """
    n = sizes["n"]
    B = gaussian(rng, (n // 2, n))
    A = B.T @ B + 0.005 * np.eye(n)
    b = gaussian(rng, n)
    if scale:
        A, b, _, _, _ = equilibrate(A, b)
    mu = 0.005
    L = np.linalg.norm(A, "fro")
    inst = HbInstance(A=A, b=b, mu=mu, L=L)
    xsol = lu_solve(A, -b)
    known = np.concatenate([xsol, xsol])
    gamma = (np.sqrt(inst.kappa) - 1.0) / (np.sqrt(inst.kappa) + 1.0)
    problem = FixedPointProblem(
        n=2 * n,
        f=lambda w: hb_map(inst, w),
        regime=NormRegime(CONTRACTIVE, gamma=gamma, norm="jordan"),
        known_solution=known,
        x0=_unit(gaussian(rng, 2 * n)),
        name="hb_linear",
    )
    return inst, problem


# ---------------------------------------------------------------------------
# family registry
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Family:
    name: str
    generator: callable
    default_sizes: dict
    config_overrides: dict = field(default_factory=dict)


FAMILIES = {
    "gd_logreg": Family("gd_logreg", gen_logreg, {"m": 2000, "n": 500}),
    "hb_linear": Family("hb_linear", gen_hb_linear, {"n": 1000}),
    "ap_lp": Family("ap_lp", gen_lp_sdhe, {"m": 500, "n": 1000}),
    "pgd_nnls": Family("pgd_nnls", gen_nnls, {"m": 500, "n": 1000}),
    "pgd_ccmg": Family("pgd_ccmg", gen_ccmg, {"m": 500, "n": 1500}),
    "ista_enr": Family("ista_enr", gen_enr, {"m": 500, "n": 1000}, {"tol": 1e-8}),
    "co_facility": Family("co_facility", gen_facility, {"m": 500, "n": 300}, {"tol": 1e-8}),
    "scs_lp": Family("scs_lp", gen_cone_lp, {"m": 500, "n": 700}),
    "scs_socp": Family("scs_socp", gen_cone_socp, {"m": 500, "n": 700}),
    "vi_mdp": Family("vi_mdp", gen_mdp, {"S": 300, "A": 200, "gamma": 0.99}, {"alpha": 1.0}),
}


def generate(family, seed, sizes=None, **kwargs):
    """Build one seeded instance of a named family."""
    fam = FAMILIES[family]
    merged = dict(fam.default_sizes)
    if sizes:
        merged.update(sizes)
    rng = SeededRng(seed)
    data, problem = fam.generator(rng, merged, **kwargs)
    return ProblemInstance(
        family=family,
        sizes=merged,
        seed=seed,
        data=data,
        problem=problem,
        config_overrides=dict(fam.config_overrides),
    )


def _jsonable_array(a):
    if scipy.sparse.issparse(a):
        a = scipy.sparse.csr_array(a)
        return {
            "format": "csr",
            "shape": list(a.shape),
            "indptr": a.indptr.tolist(),
            "indices": a.indices.tolist(),
            "data": a.data.tolist(),
        }
    return np.asarray(a).tolist()


def instance_to_jsonable(instance):
    """Plain-JSON view of the generated data for inspection on disk."""
    data = instance.data
    if isinstance(data, dict):
        payload = {
            k: _jsonable_array(v) if isinstance(v, np.ndarray) or scipy.sparse.issparse(v) else v
            for k, v in data.items()
        }
    elif isinstance(data, ConicProgram):
        payload = {
            "A": _jsonable_array(data.A),
            "b": _jsonable_array(data.b),
            "c": _jsonable_array(data.c),
            "cone": [list(blk) for blk in data.cone.blocks],
            "q": _jsonable_array(data.q),
            "certificate_u": _jsonable_array(data.certificate_u),
            "certificate_v": _jsonable_array(data.certificate_v),
        }
    elif isinstance(data, MdpInstance):
        payload = {
            "n_states": data.n_states,
            "n_actions": data.n_actions,
            "transitions": _jsonable_array(data.transitions),
            "rewards": _jsonable_array(data.rewards),
            "gamma": data.gamma,
        }
    elif isinstance(data, HbInstance):
        payload = {
            "A": _jsonable_array(data.A),
            "b": _jsonable_array(data.b),
            "mu": data.mu,
            "L": data.L,
            "alpha": data.alpha,
            "beta": data.beta,
        }
    else:
        raise TypeError(f"cannot serialize instance data {type(data)!r}")
    return {
        "family": instance.family,
        "sizes": instance.sizes,
        "seed": instance.seed,
        "x0": _jsonable_array(instance.problem.x0),
        "data": payload,
    }
