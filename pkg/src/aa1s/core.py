"""Fixed-point problem abstraction, KM iteration and the common solve loop.

A fixed-point problem asks for x with x = f(x); its residual is
g(x) = x - f(x).  The solve loop plugs in one of four update rules:
plain KM averaging (``km``), the unstabilized Anderson baselines
(``aa1``, ``aa2``) or the stabilized variant (``aa1s``), and records a
per-iteration trace of residual norms, step types and f-evaluation
counts.
"""

import time
from dataclasses import dataclass, field

import numpy as np

NONEXPANSIVE = "nonexpansive_l2"
CONTRACTIVE = "contractive"

METHODS = ("km", "aa1", "aa1s", "aa2")

STEP_AA = "AA"
STEP_KM = "KM"


@dataclass(frozen=True)
class NormRegime:
    """Which convergence regime the map lives in.

    ``nonexpansive_l2`` maps are 1-Lipschitz in the Euclidean norm;
    ``contractive`` maps shrink distances by a factor gamma < 1 in the
    norm named by ``norm`` (e.g. "linf" for Bellman operators).  Only the
    contractive regime admits alpha = 1.
    """

    kind: str = NONEXPANSIVE
    gamma: float | None = None
    norm: str | None = None

    def __post_init__(self):
        if self.kind not in (NONEXPANSIVE, CONTRACTIVE):
            raise ValueError(f"unknown norm regime {self.kind!r}")
        if self.kind == CONTRACTIVE:
            if self.gamma is None or not 0.0 < self.gamma < 1.0:
                raise ValueError("contractive regime needs gamma in (0, 1)")


@dataclass
class FixedPointProblem:
    """A map f: R^n -> R^n whose fixed point is sought.

    ``x0`` is the default initial point; generators attach the one drawn
    by the instance recipe so that a solve is fully determined by the
    instance seed.
    """

    n: int
    f: callable
    known_solution: np.ndarray | None = None
    regime: NormRegime = field(default_factory=NormRegime)
    x0: np.ndarray | None = None
    name: str = ""

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("dimension must be positive")
        if self.x0 is not None:
            self.x0 = np.asarray(self.x0, dtype=float)
            if self.x0.shape != (self.n,):
                raise ValueError("initial point has wrong dimension")
        if self.known_solution is not None:
            sol = np.asarray(self.known_solution, dtype=float)
            if sol.shape != (self.n,):
                raise ValueError("known solution has wrong dimension")
            res = np.linalg.norm(sol - self.f(sol))
            if not res <= 1e-8:
                raise ValueError(
                    f"known solution has residual {res:.3e} > 1e-8"
                )
            self.known_solution = sol


@dataclass(frozen=True)
class SolveConfig:
    """Hyper-parameters of the stabilized solver and the solve loop.

    Defaults follow the single parameter set used throughout the
    experiments: theta_bar=0.01, tau=0.001, D=1e6, eps=1e-6, memory 5,
    averaging weight alpha=0.1, K_max=1000, tol=1e-5, seed 456.
    """

    theta_bar: float = 0.01
    tau: float = 0.001
    safeguard_d: float = 1e6
    safeguard_eps: float = 1e-6
    alpha: float = 0.1
    memory_m: int = 5
    k_max: int = 1000
    tol: float = 1e-5
    seed: int = 456

    def __post_init__(self):
        if not 0.0 < self.theta_bar < 1.0:
            raise ValueError("theta_bar must lie in (0, 1)")
        if not 0.0 < self.tau < 1.0:
            raise ValueError("tau must lie in (0, 1)")
        if self.safeguard_d <= 0.0 or self.safeguard_eps <= 0.0:
            raise ValueError("safeguard constants must be positive")
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError("alpha must lie in (0, 1]")
        if self.memory_m < 1:
            raise ValueError("memory must be a positive integer")
        if self.k_max < 1:
            raise ValueError("k_max must be a positive integer")
        if self.tol <= 0.0:
            raise ValueError("tol must be positive")


@dataclass(frozen=True)
class IterationRecord:
    """One row of the solve trace, describing iterate x^k.

    ``step_type`` is the type of the step that produced x^k (AA or KM);
    the k=0 row carries KM as a label for the initial point.
    """

    k: int
    residual_l2: float
    relative_residual: float
    step_type: str
    f_evals_cum: int
    elapsed_s: float


@dataclass
class SolveResult:
    final_x: np.ndarray
    converged: bool
    trace: list
    g0_norm: float
    iterates: list | None = None
    debug: object | None = None


def residual(problem, x):
    """g(x) = x - f(x); exactly one evaluation of f."""
    return x - problem.f(x)


def km_step(problem, x, alpha):
    """Krasnosel'skii-Mann averaged step (1-alpha) x + alpha f(x)."""
    if not 0.0 < alpha <= 1.0:
        raise ValueError("alpha must lie in (0, 1]")
    return x - alpha * residual(problem, x)


class _Evaluator:
    """Counts f evaluations behind the residual map."""

    def __init__(self, problem):
        self._f = problem.f
        self.count = 0

    def g(self, x):
        self.count += 1
        return x - self._f(x)


class _KmDriver:
    def __init__(self, ev, config):
        self._ev = ev
        self._alpha = config.alpha
        self._x = None
        self._g = None

    def init(self, x0, g0):
        self._x, self._g = x0, g0

    def step(self):
        x_next = self._x - self._alpha * self._g
        g_next = self._ev.g(x_next)
        self._x, self._g = x_next, g_next
        return x_next, g_next, STEP_KM


def _make_driver(method, ev, config, debug):
    # imported lazily to avoid a circular module dependency
    from . import baselines, stabilized

    if method == "km":
        return _KmDriver(ev, config)
    if method in ("aa1", "aa2"):
        return baselines.BaselineDriver(ev, config, method)
    if method == "aa1s":
        return stabilized.Aa1sDriver(ev, config, debug=debug)
    raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")


def run(problem, config, method, x0=None, *, debug=False, keep_iterates=False):
    """Iterate until the relative residual reaches tol or k_max is hit.

    Non-finite iterates terminate the run (recorded in the trace,
    ``converged=False``) rather than raising, so divergent methods still
    produce plottable traces.
    """
    if config.alpha == 1.0 and problem.regime.kind != CONTRACTIVE:
        raise ValueError("alpha = 1 is only permitted for contractive maps")
    if x0 is None:
        if problem.x0 is None:
            raise ValueError("no initial point: pass x0 or set problem.x0")
        x0 = problem.x0
    ev = _Evaluator(problem)
    t0 = time.perf_counter()
    x0 = np.asarray(x0, dtype=float)
    g0 = ev.g(x0)
    g0_norm = float(np.linalg.norm(g0))
    trace = []
    iterates = [x0.copy()] if keep_iterates else None

    def rel(gn):
        return gn / g0_norm if g0_norm > 0.0 else 0.0

    def record(k, gn, stype):
        trace.append(
            IterationRecord(
                k=k,
                residual_l2=gn,
                relative_residual=rel(gn),
                step_type=stype,
                f_evals_cum=ev.count,
                elapsed_s=time.perf_counter() - t0,
            )
        )

    record(0, g0_norm, STEP_KM)
    if rel(g0_norm) <= config.tol:
        return SolveResult(x0, True, trace, g0_norm, iterates)

    driver = _make_driver(method, ev, config, debug)
    driver.init(x0, g0)
    x, converged = x0, False
    for k in range(1, config.k_max + 1):
        x, g, stype = driver.step()
        gn = float(np.linalg.norm(g))
        record(k, gn, stype)
        if keep_iterates:
            iterates.append(x.copy())
        if not (np.all(np.isfinite(x)) and np.isfinite(gn)):
            break
        if rel(gn) <= config.tol:
            converged = True
            break
    return SolveResult(
        x, converged, trace, g0_norm, iterates, getattr(driver, "debug", None)
    )
