"""Named invariant suites behind the ``aa1s verify`` command.

Each suite runs at fixed small sizes with fixed seeds and returns
``(ok, detail)``.  The suites are importable so the test suite and the
CLI share one implementation.
"""

import math

import numpy as np

from . import baselines, kernels, problems, stabilized
from .core import STEP_KM, SolveConfig, run
from .errors import SingularMatrixError
from .linalg import SeededRng, equilibrate, gaussian, lu_solve

_SEED = 456


def _desk_instances(seed=_SEED, families=None):
    sizes = {
        "gd_logreg": {"m": 200, "n": 50},
        "ap_lp": {"m": 50, "n": 100},
        "pgd_nnls": {"m": 50, "n": 100},
        "pgd_ccmg": {"m": 50, "n": 150},
        "ista_enr": {"m": 50, "n": 100},
        "co_facility": {"m": 50, "n": 30},
        "scs_lp": {"m": 50, "n": 70},
        "scs_socp": {"m": 50, "n": 70},
    }
    names = families if families is not None else sizes
    return {name: problems.generate(name, seed, sizes[name]) for name in names}


NONEXPANSIVE_DESK = (
    "gd_logreg",
    "ap_lp",
    "pgd_nnls",
    "pgd_ccmg",
    "ista_enr",
    "co_facility",
    "scs_lp",
    "scs_socp",
)


def suite_lu_roundtrip():
    rng = SeededRng(_SEED)
    for trial in range(25):
        n = 2 + trial % 12
        M = gaussian(rng, (n, n)) + 3.0 * np.eye(n)
        if np.linalg.cond(M) > 1e6:
            continue
        b = gaussian(rng, n)
        x = lu_solve(M, b)
        if np.linalg.norm(M @ x - b) > 1e-8 * (1.0 + np.linalg.norm(b)):
            return False, f"residual too large at trial {trial}"
    try:
        lu_solve(np.zeros((3, 3)), np.zeros(3))
        return False, "no error on singular matrix"
    except SingularMatrixError:
        pass
    return True, "25 random solves within tolerance"


def suite_rng_determinism():
    a = gaussian(SeededRng(_SEED), (40, 7))
    b = gaussian(SeededRng(_SEED), (40, 7))
    if not np.array_equal(a, b):
        return False, "identical seeds gave different streams"
    if SeededRng(_SEED).raw(64).tobytes() != SeededRng(_SEED).raw(64).tobytes():
        return False, "raw streams differ"
    if np.array_equal(a, gaussian(SeededRng(_SEED + 1), (40, 7))):
        return False, "different seeds gave identical streams"
    return True, "streams byte-identical per seed"


def suite_equilibrate_unit_rows():
    rng = SeededRng(_SEED)
    for trial in range(10):
        A = np.abs(gaussian(rng, (8, 6))) + 0.05
        A_s, _, _, d, e = equilibrate(A, np.ones(8))
        left = A / d[:, None]
        if not np.allclose(np.abs(left).sum(axis=1), 1.0, atol=1e-12):
            return False, "row-scaled matrix lacks unit row sums"
        if not np.allclose(A_s * e[None, :], left, atol=1e-12):
            return False, "column scaling inconsistent"
    return True, "D^-1 A has unit row absolute sums"


def suite_powell_theta_range():
    rng = SeededRng(_SEED)
    for theta_bar in (0.01, 0.3, 0.9):
        etas = np.concatenate([rng.normal(400), [0.0, theta_bar, -theta_bar]])
        for eta in etas:
            th = stabilized.powell_theta(float(eta), theta_bar)
            if not (1.0 - theta_bar - 1e-15 <= th <= 1.0 + theta_bar + 1e-15):
                return False, f"theta {th} outside bounds for eta={eta}"
    return True, "theta within [1-theta_bar, 1+theta_bar]"


def _debug_runs(n_runs=10, n=30):
    cfg = SolveConfig()
    out = []
    for seed in range(_SEED, _SEED + n_runs):
        inst = problems.generate("pgd_nnls", seed, {"m": n // 2, "n": n})
        res = run(inst.problem, cfg, "aa1s", debug=True)
        out.append((inst, cfg, res))
    return out


def suite_determinant_bound():
    worst = np.inf
    for _, cfg, res in _debug_runs():
        for r in res.debug.records:
            ratio = abs(r.det_b) / cfg.theta_bar**r.m_k
            worst = min(worst, ratio)
            if ratio < 1.0 - 1e-8:
                return False, f"|det B| ratio {ratio:.3e} below bound at k={r.k}"
    return True, f"min |det B| / theta_bar^m_k = {worst:.3f}"


def suite_norm_bound():
    cfg = SolveConfig()
    cap = 3.0 * ((1.0 + cfg.theta_bar + cfg.tau) / cfg.tau) ** cfg.memory_m - 2.0
    worst = 0.0
    for _, _, res in _debug_runs():
        for r in res.debug.records:
            worst = max(worst, r.norm_b)
            if r.norm_b > cap:
                return False, f"||B||_2 = {r.norm_b:.3e} exceeds cap {cap:.3e}"
    return True, f"max ||B||_2 = {worst:.3e} <= {cap:.3e}"


def suite_inverse_consistency():
    for _, _, res in _debug_runs():
        for r in res.debug.records:
            tol = 1e-6 * (1.0 + r.norm_h_fro * r.norm_b_fro)
            if r.hb_error > tol:
                return False, f"||H B - I|| = {r.hb_error:.3e} at k={r.k}"
    return True, "H B = I to relative 1e-6 throughout"


def suite_condition_bound():
    cfg = SolveConfig()
    log_norm_cap = math.log(
        3.0 * ((1.0 + cfg.theta_bar + cfg.tau) / cfg.tau) ** cfg.memory_m - 2.0
    )
    for inst, _, res in _debug_runs():
        log_cap = inst.problem.n * log_norm_cap - cfg.memory_m * math.log(cfg.theta_bar)
        for r in res.debug.records:
            if math.log(r.cond_h) > log_cap:
                return False, f"cond(H) exceeds bound at k={r.k}"
    return True, "cond(H) within the uniform bound"


def suite_denominator_identity():
    for _, cfg, res in _debug_runs():
        for r in res.debug.records:
            sn = math.sqrt(r.shat_norm_sq)
            factor = 1.0 - r.theta * (1.0 - r.gamma)
            if abs(r.denominator - sn * factor) > 1e-8 * max(1.0, sn * abs(factor)):
                return False, f"denominator identity broken at k={r.k}"
            if abs(factor) < cfg.theta_bar * (1.0 - 1e-8):
                return False, f"|1 - theta(1-gamma)| < theta_bar at k={r.k}"
    return True, "shat^T H ytilde = ||shat||^2 (1 - theta (1 - gamma))"


def suite_multisecant_equivalence():
    rng = SeededRng(_SEED)
    n, m = 6, 3
    worst = 0.0
    for _ in range(100):
        S = gaussian(rng, (n, m))
        Y = gaussian(rng, (n, m))
        B_ind = stabilized.multisecant_rank_one(S, Y)
        B_closed = np.eye(n) + (Y - S) @ np.linalg.solve(S.T @ S, S.T)
        err = np.abs(B_ind - B_closed).max()
        worst = max(worst, err)
        if err > 1e-10:
            return False, f"inductive vs closed form differ by {err:.3e}"
    return True, f"max deviation {worst:.2e} over 100 draws"


def suite_weight_normalization():
    rng = SeededRng(_SEED)
    for _ in range(50):
        n, m = 12, 4
        S = gaussian(rng, (n, m))
        Y = gaussian(rng, (n, m))
        g = gaussian(rng, n)
        _, a1 = baselines.aa1_weights(S, Y, g)
        _, a2 = baselines.aa2_weights(Y, g)
        if abs(a1.sum() - 1.0) > 1e-12 or abs(a2.sum() - 1.0) > 1e-12:
            return False, "weights do not sum to one"
    return True, "sum alpha = 1 to machine precision"


def suite_aa2_optimality():
    rng = SeededRng(_SEED)
    n, m = 15, 4
    Y = gaussian(rng, (n, m))
    g = gaussian(rng, n)
    gam, _ = baselines.aa2_weights(Y, g)
    best = np.linalg.norm(g - Y @ gam)
    for _ in range(100):
        other = gam + gaussian(rng, m)
        if best > np.linalg.norm(g - Y @ other) + 1e-9:
            return False, "least-squares weights not optimal"
    return True, "optimal against 100 perturbed candidates"


def suite_aa1_affine_equivalence():
    rng = SeededRng(_SEED)
    n = 8
    M = 0.5 * gaussian(rng, (n, n)) / math.sqrt(n)
    q = gaussian(rng, n)
    xs = [gaussian(rng, n)]
    f = lambda x: M @ x + q
    for _ in range(4):
        xs.append(f(xs[-1]))
    gs = [x - f(x) for x in xs]
    S = np.stack([xs[i + 1] - xs[i] for i in range(4)], axis=1)
    Y = np.stack([gs[i + 1] - gs[i] for i in range(4)], axis=1)
    gam, alphas = baselines.aa1_weights(S, Y, gs[-1])
    fx = [x - g for x, g in zip(xs, gs)]
    step = sum(a * v for a, v in zip(alphas, fx))
    B = np.eye(n) + (Y - S) @ np.linalg.solve(S.T @ S, S.T)
    direct = xs[-1] - np.linalg.solve(B, gs[-1])
    err = np.linalg.norm(step - direct)
    if err > 1e-8:
        return False, f"AA-I step differs from x - B^-1 g by {err:.3e}"
    return True, f"weighted step equals Newton-like step ({err:.2e})"


def _nonexpansiveness_worst(problem, rng, n_pairs):
    worst = -np.inf
    for _ in range(n_pairs):
        x = rng.normal(problem.n)
        z = rng.normal(problem.n)
        lhs = np.linalg.norm(problem.f(x) - problem.f(z))
        rhs = np.linalg.norm(x - z)
        worst = max(worst, lhs - rhs)
    return worst


def suite_nonexpansiveness(n_pairs=1000):
    insts = _desk_instances()
    details = []
    for name, inst in insts.items():
        rng = SeededRng(_SEED + 99)
        worst = _nonexpansiveness_worst(inst.problem, rng, n_pairs)
        details.append(f"{name}:{worst:.1e}")
        if worst > 1e-9:
            return False, f"{name} expansive by {worst:.3e}"
    return True, "max ||f(x)-f(z)|| - ||x-z||: " + ", ".join(details)


def suite_bellman_contraction(n_pairs=1000):
    inst = problems.generate("vi_mdp", _SEED, {"S": 50, "A": 20, "gamma": 0.9})
    mdp = inst.data
    rng = SeededRng(_SEED + 7)
    for _ in range(n_pairs):
        v = rng.normal(mdp.n_states)
        w = rng.normal(mdp.n_states)
        lhs = np.abs(problems.bellman_op(mdp, v) - problems.bellman_op(mdp, w)).max()
        if lhs > mdp.gamma * np.abs(v - w).max() + 1e-12:
            return False, f"contraction violated: {lhs:.3e}"
    return True, f"gamma-contractive in max norm over {n_pairs} pairs"


def suite_hb_spectral_bound():
    for seed in range(_SEED, _SEED + 5):
        inst = problems.generate("hb_linear", seed, {"n": 50}, scale=False)
        hb = inst.data
        lams = np.linalg.eigvalsh(hb.A)
        if lams.min() < hb.mu - 1e-10 * hb.L or lams.max() > hb.L + 1e-10 * hb.L:
            return False, "spectrum leaves [mu, L]"
        rho = problems.hb_spectral_radius(hb)
        bound = (math.sqrt(hb.kappa) - 1.0) / (math.sqrt(hb.kappa) + 1.0)
        if rho > bound + 1e-8:
            return False, f"rho(T) = {rho} exceeds {bound}"
        dense = np.abs(np.linalg.eigvals(hb.iteration_matrix())).max()
        if abs(dense - rho) > 1e-6:
            return False, "structured and dense spectral radii disagree"
    return True, "rho(T) <= (sqrt(k)-1)/(sqrt(k)+1) + 1e-8 on 5 instances"


def suite_projection_idempotence(n_probes=1000):
    from .operators import project_nonneg, project_simplex, project_soc

    rng = SeededRng(_SEED + 13)
    for _ in range(n_probes):
        x = 3.0 * rng.normal(9)
        for proj in (project_nonneg, project_simplex, project_soc):
            p = proj(x)
            if np.abs(proj(p) - p).max() > 1e-12:
                return False, f"{proj.__name__} not idempotent"
    return True, f"simplex, soc and nonneg idempotent on {n_probes} probes"


def suite_sdhe_skew_symmetry():
    for fam in ("ap_lp", "scs_lp", "scs_socp"):
        inst = _desk_instances(families=[fam])[fam]
        q = inst.data.q
        if np.abs(q + q.T).max() != 0.0:
            return False, f"{fam} embedding matrix not exactly skew-symmetric"
    return True, "Q + Q^T = 0 exactly for all embeddings"


def suite_scs_fixed_point_equivalence():
    for fam in ("scs_lp", "scs_socp"):
        inst = _desk_instances(families=[fam])[fam]
        prog = inst.data
        w_star = np.concatenate([prog.certificate_u, prog.certificate_v])
        # solution -> fixed point
        err = np.linalg.norm(problems.scs_map(prog, w_star) - w_star)
        if err > 1e-9:
            return False, f"{fam} certificate not a fixed point ({err:.3e})"
        # fixed point -> solution: solve, then check the embedding conditions
        res = run(inst.problem, SolveConfig(tol=1e-10, k_max=3000), "aa1s")
        d = prog.q.shape[0]
        u, v = res.final_x[:d], res.final_x[d:]
        scale = max(1.0, np.linalg.norm(u) + np.linalg.norm(v))
        conds = [
            np.linalg.norm(prog.q @ u - v),
            np.linalg.norm(prog.cone.project(u) - u),
            np.linalg.norm(prog.cone.project_dual(v) - v),
        ]
        if max(conds) > 1e-6 * scale:
            return False, f"{fam} fixed point violates embedding ({max(conds):.3e})"
    return True, "certificates and solved fixed points match both directions"


def suite_km_decrease():
    cfg = SolveConfig(k_max=300)
    worst = -np.inf
    for fam in ("scs_lp", "scs_socp", "ap_lp"):
        inst = _desk_instances(families=[fam])[fam]
        y = inst.problem.known_solution
        for method in ("km", "aa1s"):
            res = run(inst.problem, cfg, method, keep_iterates=True)
            for k in range(1, len(res.trace)):
                if res.trace[k].step_type != STEP_KM:
                    continue
                lhs = np.sum((res.iterates[k] - y) ** 2)
                rhs = np.sum((res.iterates[k - 1] - y) ** 2)
                dec = cfg.alpha * (1.0 - cfg.alpha) * res.trace[k - 1].residual_l2 ** 2
                worst = max(worst, lhs - (rhs - dec))
                if lhs > rhs - dec + 1e-9:
                    return False, f"{fam}/{method} violates decrease at k={k}"
    return True, f"worst slack {worst:.2e} over cone instances"


def suite_kernel_parity():
    rng = SeededRng(_SEED + 23)
    U = gaussian(rng, (4, 30))
    V = gaussian(rng, (4, 30))
    w = gaussian(rng, 30)
    checks = [
        ("apply_rank_one_sum", (U, V, 3, w)),
        ("apply_rank_one_sum_t", (U, V, 3, w)),
        ("orthogonalize", (U / np.linalg.norm(U, axis=1, keepdims=True), 2, w)),
        ("soft_threshold", (w, 0.3)),
        ("project_soc", (w,)),
        ("project_simplex", (w,)),
    ]
    for name, args in checks:
        np_fn, nb_fn = kernels.REGISTRY[name]
        if not np.allclose(np_fn(*args), nb_fn(*args), rtol=1e-12, atol=1e-12):
            return False, f"{name} numpy/numba mismatch"
    inst = problems.generate("vi_mdp", _SEED, {"S": 30, "A": 5, "gamma": 0.9})
    mdp = inst.data
    v = gaussian(rng, 30)
    np_fn, nb_fn = kernels.REGISTRY["bellman_backup"]
    args = (mdp._indptr, mdp._indices, mdp._data, mdp.rewards_t, mdp.gamma, v)
    if not np.allclose(np_fn(*args), nb_fn(*args), rtol=1e-12, atol=1e-12):
        return False, "bellman_backup numpy/numba mismatch"
    return True, f"both backends agree (active: {kernels.BACKEND})"


def suite_solver_determinism():
    inst = problems.generate("pgd_nnls", _SEED, {"m": 20, "n": 40})
    cfg = SolveConfig(k_max=60)
    runs = [run(inst.problem, cfg, "aa1s") for _ in range(2)]
    t0 = [(r.k, r.residual_l2, r.step_type, r.f_evals_cum) for r in runs[0].trace]
    t1 = [(r.k, r.residual_l2, r.step_type, r.f_evals_cum) for r in runs[1].trace]
    if t0 != t1 or not np.array_equal(runs[0].final_x, runs[1].final_x):
        return False, "repeated solves differ"
    return True, "repeated solves bit-identical"


SUITES = {
    "lu_roundtrip": suite_lu_roundtrip,
    "rng_determinism": suite_rng_determinism,
    "equilibrate_unit_rows": suite_equilibrate_unit_rows,
    "powell_theta_range": suite_powell_theta_range,
    "determinant_bound": suite_determinant_bound,
    "norm_bound": suite_norm_bound,
    "inverse_consistency": suite_inverse_consistency,
    "condition_bound": suite_condition_bound,
    "denominator_identity": suite_denominator_identity,
    "multisecant_equivalence": suite_multisecant_equivalence,
    "weight_normalization": suite_weight_normalization,
    "aa2_optimality": suite_aa2_optimality,
    "aa1_affine_equivalence": suite_aa1_affine_equivalence,
    "nonexpansiveness": suite_nonexpansiveness,
    "bellman_contraction": suite_bellman_contraction,
    "hb_spectral_bound": suite_hb_spectral_bound,
    "projection_idempotence": suite_projection_idempotence,
    "sdhe_skew_symmetry": suite_sdhe_skew_symmetry,
    "scs_fixed_point_equivalence": suite_scs_fixed_point_equivalence,
    "km_decrease": suite_km_decrease,
    "kernel_parity": suite_kernel_parity,
    "solver_determinism": suite_solver_determinism,
}


def run_suite(name):
    return SUITES[name]()


def run_all(report=print):
    """Run every suite once; returns the list of failures."""
    failures = []
    for name, fn in SUITES.items():
        ok, detail = fn()
        status = "PASS" if ok else "FAIL"
        report(f"{status} {name}: {detail}")
        if not ok:
            failures.append(name)
    return failures
