"""Benchmark command line: generate instances, run method comparisons,
sweep memory sizes, verify invariants, and time the numba/numpy kernels.

Exit codes: 0 success, 1 usage error, 2 verification failure, 3 runtime
failure.
"""

import argparse
import dataclasses
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import kernels, verify
from .core import METHODS, SolveConfig, run
from .linalg import SeededRng, gaussian
from .problems import FAMILIES, generate, instance_to_jsonable

TRACE_COLUMNS = (
    "k",
    "method",
    "step_type",
    "residual_l2",
    "relative_residual",
    "f_evals_cum",
    "elapsed_s",
)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"error: {message}\n")
        sys.exit(1)


def _fmt(x):
    # shortest round-trip decimal form; bit-stable across runs
    return repr(float(x))


def write_trace(path, method, trace, timing="wall"):
    """One CSV per (instance, method); header mandatory, rows ordered by k.

    ``timing='none'`` writes 0.0 in the elapsed column so repeated runs
    produce byte-identical files; all other columns are always
    bit-deterministic for a fixed spec and seed.
    """
    lines = [",".join(TRACE_COLUMNS)]
    for rec in trace:
        elapsed = rec.elapsed_s if timing == "wall" else 0.0
        lines.append(
            ",".join(
                (
                    str(rec.k),
                    method,
                    rec.step_type,
                    _fmt(rec.residual_l2),
                    _fmt(rec.relative_residual),
                    str(rec.f_evals_cum),
                    _fmt(elapsed),
                )
            )
        )
    Path(path).write_text("\n".join(lines) + "\n")


def _iterations_to_tol(res, tol):
    for rec in res.trace:
        if rec.relative_residual <= tol:
            return rec.k
    return None


def _summarize_run(res, tol):
    last = res.trace[-1]
    iters = len(res.trace) - 1
    wall = last.elapsed_s
    return {
        "converged": res.converged,
        "iterations": iters,
        "iterations_to_tol": _iterations_to_tol(res, tol),
        "final_residual": last.residual_l2,
        "final_relative_residual": last.relative_residual,
        "f_evals": last.f_evals_cum,
        "wall_time_s": wall,
        "time_per_iteration_s": wall / max(iters, 1),
        "nonfinite": not np.isfinite(last.residual_l2),
    }


def _make_config(args, instance):
    values = {}
    values.update(instance.config_overrides)
    if args.config is not None:
        values.update(json.loads(Path(args.config).read_text()).get("config", {}))
    for key, attr in (
        ("theta_bar", "theta_bar"),
        ("tau", "tau"),
        ("safeguard_d", "safeguard_d"),
        ("safeguard_eps", "safeguard_eps"),
        ("alpha", "alpha"),
        ("memory_m", "m"),
        ("k_max", "kmax"),
        ("tol", "tol"),
        ("seed", "seed"),
    ):
        flag = getattr(args, attr, None)
        if flag is not None:
            values[key] = flag
    values.setdefault("seed", 456)
    return SolveConfig(**values)


def _parse_sizes(spec):
    sizes = {}
    if not spec:
        return sizes
    for part in spec.split(","):
        key, _, val = part.partition("=")
        if not val:
            raise ValueError(f"bad sizes entry {part!r}; expected key=value")
        sizes[key.strip()] = float(val) if "." in val else int(val)
    return sizes


def _load_spec_file(args):
    if args.config is None:
        return {}
    return json.loads(Path(args.config).read_text())


def _resolve_run_args(args):
    spec = _load_spec_file(args)
    family = args.family or spec.get("family")
    if family is None:
        raise ValueError("no problem family given (--family or config file)")
    if family not in FAMILIES:
        raise ValueError(f"unknown family {family!r}; known: {sorted(FAMILIES)}")
    methods = getattr(args, "method", None) or spec.get("methods") or ["km", "aa1", "aa1s"]
    if isinstance(methods, str):
        methods = methods.split(",")
    for m in methods:
        if m not in METHODS:
            raise ValueError(f"unknown method {m!r}; known: {METHODS}")
    sizes = dict(spec.get("sizes", {}))
    sizes.update(_parse_sizes(args.sizes))
    repeats = args.repeats if args.repeats is not None else spec.get("repeats", 1)
    if repeats < 1:
        raise ValueError("repeats must be >= 1")
    timing = args.timing or spec.get("timing", "wall")
    return family, list(methods), sizes, repeats, timing


def cmd_run(args):
    family, methods, sizes, repeats, timing = _resolve_run_args(args)
    kernels.warmup()  # keep JIT compilation out of the timings
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    summary = {
        "family": family,
        "methods": methods,
        "repeats": repeats,
        "timing": timing,
        "instances": [],
    }
    base_seed = args.seed if args.seed is not None else 456
    for rep in range(repeats):
        seed = base_seed + rep
        instance = generate(family, seed, sizes or None)
        config = _make_config(args, instance)
        config = dataclasses.replace(config, seed=seed)
        inst_dir = out_dir / f"instance_{rep:02d}_seed{seed}"
        inst_dir.mkdir(parents=True, exist_ok=True)
        inst_summary = {
            "seed": seed,
            "sizes": instance.sizes,
            "config": dataclasses.asdict(config),
            "methods": {},
        }
        for method in methods:
            res = run(instance.problem, config, method, debug=args.debug_invariants)
            write_trace(inst_dir / f"trace_{method}.csv", method, res.trace, timing)
            entry = _summarize_run(res, config.tol)
            if args.debug_invariants and res.debug is not None:
                entry["debug_invariant_records"] = len(res.debug.records)
            inst_summary["methods"][method] = entry
        vanilla = inst_summary["methods"].get("km")
        for method, entry in inst_summary["methods"].items():
            if vanilla is not None and vanilla["time_per_iteration_s"] > 0:
                entry["time_ratio_vs_km"] = (
                    entry["time_per_iteration_s"] / vanilla["time_per_iteration_s"]
                )
            else:
                entry["time_ratio_vs_km"] = None
        summary["instances"].append(inst_summary)
    (out_dir / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    print(f"wrote {len(summary['instances'])} instance(s) to {out_dir}")
    return 0


def cmd_sweep_memory(args):
    family, _, sizes, repeats, timing = _resolve_run_args(args)
    memories = [int(v) for v in args.memories.split(",")]
    if not memories:
        raise ValueError("empty memory list")
    kernels.warmup()
    methods = ("aa1s", "aa1")
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    summary = {
        "family": family,
        "memories": memories,
        "methods": list(methods),
        "instances": [],
    }
    base_seed = args.seed if args.seed is not None else 456
    for rep in range(repeats):
        seed = base_seed + rep
        instance = generate(family, seed, sizes or None)
        inst_dir = out_dir / f"instance_{rep:02d}_seed{seed}"
        inst_dir.mkdir(parents=True, exist_ok=True)
        inst_summary = {"seed": seed, "iterations_to_tol": {}}
        for method in methods:
            per_m = {}
            for mem in memories:
                config = _make_config(args, instance)
                config = dataclasses.replace(config, memory_m=mem, seed=seed)
                res = run(instance.problem, config, method)
                write_trace(
                    inst_dir / f"trace_{method}_m{mem}.csv", method, res.trace, timing
                )
                per_m[str(mem)] = _iterations_to_tol(res, config.tol)
            inst_summary["iterations_to_tol"][method] = per_m
        summary["instances"].append(inst_summary)
    (out_dir / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    print(f"swept memories {memories} on {family}; results in {out_dir}")
    return 0


def cmd_verify(args):
    failures = verify.run_all(report=print)
    if failures:
        print(f"{len(failures)} suite(s) failed: {', '.join(failures)}")
        return 2
    print(f"all {len(verify.SUITES)} suites passed")
    return 0


def cmd_generate(args):
    family = args.family
    if family not in FAMILIES:
        raise ValueError(f"unknown family {family!r}; known: {sorted(FAMILIES)}")
    sizes = _parse_sizes(args.sizes)
    seed = args.seed if args.seed is not None else 456
    instance = generate(family, seed, sizes or None)
    payload = instance_to_jsonable(instance)
    out = Path(args.out) if args.out else Path(f"{family}_seed{seed}.json")
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(json.dumps(payload, indent=2) + "\n")
    print(f"wrote {out}")
    return 0


def cmd_bench_kernels(args):
    rng = SeededRng(456)
    n, mem = args.n, 5
    U = gaussian(rng, (mem, n))
    V = gaussian(rng, (mem, n))
    basis = U / np.linalg.norm(U, axis=1, keepdims=True)
    w = gaussian(rng, n)
    from .problems import generate as gen

    mdp = gen("vi_mdp", 456, {"S": min(n, 300), "A": 20, "gamma": 0.9}).data
    v_bell = gaussian(rng, mdp.n_states)
    cases = {
        "apply_rank_one_sum": (U, V, mem, w),
        "apply_rank_one_sum_t": (U, V, mem, w),
        "orthogonalize": (basis, mem, w),
        "soft_threshold": (w, 0.1),
        "project_soc": (w,),
        "project_simplex": (w,),
        "bellman_backup": (
            mdp._indptr,
            mdp._indices,
            mdp._data,
            mdp.rewards_t,
            mdp.gamma,
            v_bell,
        ),
    }

    def time_fn(fn, fn_args, repeat):
        fn(*fn_args)  # warmup / JIT
        t0 = time.perf_counter()
        for _ in range(repeat):
            fn(*fn_args)
        return (time.perf_counter() - t0) / repeat

    print(f"kernel benchmark: n={n}, repeats={args.repeat}, active backend={kernels.BACKEND}")
    print(f"{'kernel':24s} {'numpy (us)':>12s} {'numba (us)':>12s} {'speedup':>9s}")
    for name, fn_args in cases.items():
        np_fn, nb_fn = kernels.REGISTRY[name]
        t_np = time_fn(np_fn, fn_args, args.repeat) * 1e6
        if nb_fn is np_fn:
            print(f"{name:24s} {t_np:12.2f} {'n/a':>12s} {'n/a':>9s}")
        else:
            t_nb = time_fn(nb_fn, fn_args, args.repeat) * 1e6
            print(f"{name:24s} {t_np:12.2f} {t_nb:12.2f} {t_np / t_nb:8.2f}x")
    return 0


def _add_common_run_flags(p):
    p.add_argument("--family", help="problem family name")
    p.add_argument("--sizes", help="comma list of key=value size overrides")
    p.add_argument("--config", help="JSON file with family/sizes/config/repeats")
    p.add_argument("--seed", type=int, help="base instance seed (default 456)")
    p.add_argument("--repeats", type=int, help="number of seeded instances")
    p.add_argument("--m", type=int, help="acceleration memory")
    p.add_argument("--alpha", type=float, help="KM averaging weight")
    p.add_argument("--theta-bar", dest="theta_bar", type=float)
    p.add_argument("--tau", type=float)
    p.add_argument("--safeguard-d", dest="safeguard_d", type=float)
    p.add_argument("--safeguard-eps", dest="safeguard_eps", type=float)
    p.add_argument("--kmax", type=int)
    p.add_argument("--tol", type=float)
    p.add_argument(
        "--timing",
        choices=("wall", "none"),
        help="trace elapsed column: wall clock or zeros (byte-reproducible)",
    )
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument(
        "--debug-invariants",
        action="store_true",
        help="track dense Jacobian invariants during aa1s solves (n <= 50)",
    )


def build_parser():
    parser = _Parser(prog="aa1s", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a method comparison on one family")
    _add_common_run_flags(p_run)
    p_run.add_argument(
        "--method",
        action="append",
        help="method to run (repeatable or comma separated); default km,aa1,aa1s",
    )
    p_run.set_defaults(fn=cmd_run)

    p_sweep = sub.add_parser("sweep-memory", help="sweep acceleration memory sizes")
    _add_common_run_flags(p_sweep)
    p_sweep.add_argument(
        "--memories", required=True, help="comma list of memory sizes, e.g. 2,5,10"
    )
    p_sweep.set_defaults(fn=cmd_sweep_memory)

    p_verify = sub.add_parser("verify", help="run all invariant suites")
    p_verify.set_defaults(fn=cmd_verify)

    p_gen = sub.add_parser("generate", help="emit one instance as JSON")
    p_gen.add_argument("--family", required=True)
    p_gen.add_argument("--sizes")
    p_gen.add_argument("--seed", type=int)
    p_gen.add_argument("--out")
    p_gen.set_defaults(fn=cmd_generate)

    p_bench = sub.add_parser(
        "bench-kernels", help="time numba kernels against the numpy fallbacks"
    )
    p_bench.add_argument("--n", type=int, default=1000, help="vector dimension")
    p_bench.add_argument("--repeat", type=int, default=2000)
    p_bench.set_defaults(fn=cmd_bench_kernels)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "method", None):
        flat = []
        for entry in args.method:
            flat.extend(entry.split(","))
        args.method = flat
    try:
        return args.fn(args)
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1 if isinstance(exc, ValueError) else 3
    except Exception as exc:  # runtime failure
        print(f"runtime failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
