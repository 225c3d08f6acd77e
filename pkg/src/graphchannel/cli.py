"""Command-line front end.

Exit codes: 0 success, 2 configuration error, 3 infeasible size or budget,
4 a verdict that a theorem guarantees has failed.
"""
from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import experiments as ex
from . import io
from .engine import (
    DEFAULT_BUDGET,
    EngineError,
    Infeasible,
    count_solutions,
    entropy_given_y,
    exact_conditional_entropy,
    mc_conditional_entropy,
    sample_instance,
)
from .gamma import GammaError, check_convexity, hypothesis_h_expected, kernel_gamma, verify_witness
from .hypergraphs import EnsembleParams, Hypergraph, HypergraphError, sample_poisson
from .kernels import KernelError, bec, bsc, parse_kernel_spec
from .rng import stream

EXIT_OK, EXIT_CONFIG, EXIT_INFEASIBLE, EXIT_VERDICT = 0, 2, 3, 4


class ConfigError(ValueError):
    pass


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def _ints(text: str) -> list[int]:
    return [int(v) for v in _floats(text)]


def parse_nu(text: str, l: int) -> np.ndarray:
    """``uniform``, ``point:<bits>`` (replica r is character r) or a JSON vector."""
    size = 2**l
    if text == "uniform":
        return np.full(size, 1.0 / size)
    if text.startswith("point:"):
        bits = text.split(":", 1)[1]
        if len(bits) != l or set(bits) - {"0", "1"}:
            raise ConfigError(f"point mass needs {l} binary digits, got {bits!r}")
        nu = np.zeros(size)
        nu[sum(int(c) << r for r, c in enumerate(bits))] = 1.0
        return nu
    try:
        nu = np.asarray(json.loads(text), dtype=float)
    except (json.JSONDecodeError, ValueError, TypeError) as exc:
        raise ConfigError(f"cannot parse nu {text!r}") from exc
    if nu.shape != (size,) or np.any(nu < 0) or abs(nu.sum() - 1.0) > 1e-9:
        raise ConfigError(f"nu must be a probability vector of length {size}")
    return nu


def parse_channel(text: str):
    name, _, value = text.partition(":")
    try:
        if name == "bsc":
            return bsc(float(value))
        if name == "bec":
            return bec(float(value))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    raise ConfigError(f"unknown channel {text!r}; use bsc:P or bec:EPS")


# ---------------------------------------------------------------------------
# output


def _config(args) -> dict:
    skip = {"func"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def _emit(args, files: dict[str, str], stdout_text: str, verdicts: dict | None = None) -> None:
    """Write ``files`` plus a manifest under ``--out`` if given; always print ``stdout_text``."""
    if args.out:
        out = Path(args.out)
        for name, text in files.items():
            io.write_text(out / name, text)
        man = io.manifest(args.command, _config(args), getattr(args, "seed", None), verdicts, sorted(files))
        io.write_text(out / "manifest.json", io.dumps(man))
    sys.stdout.write(stdout_text)


def _experiment_output(args, result: ex.ExperimentResult) -> int:
    rows_csv = io.rows_to_csv(result.rows)
    payload = {k: v for k, v in result.to_dict().items() if k != "wall_time"}
    files = {"results.csv": rows_csv, "result.json": io.dumps(payload)}
    text = io.dumps(payload) if args.format == "json" else rows_csv
    verdicts = {"verdict": result.verdict, **{k: v["ok"] for k, v in result.checks.items()}}
    _emit(args, files, text, verdicts)
    print(f"{result.name}: {result.verdict} ({result.wall_time:.2f}s)", file=sys.stderr)
    return EXIT_VERDICT if result.guaranteed_failure else EXIT_OK


# ---------------------------------------------------------------------------
# commands


def cmd_gen(args) -> int:
    kernel = parse_kernel_spec(args.kernel)
    rng = stream(args.seed, "gen")
    g = sample_poisson(EnsembleParams(args.n, kernel.k, args.alpha), rng)
    inst = sample_instance(g, kernel, rng)
    files = {"instance.json": io.dumps(io.instance_to_dict(inst, args.kernel))}
    if kernel.is_csp:
        files["instance.cnf"] = io.to_dimacs(inst)
    fmt = args.format or ("dimacs" if kernel.is_csp else "json")
    if fmt == "dimacs" and not kernel.is_csp:
        raise ConfigError(f"{kernel.tag} kernels have no DIMACS form")
    _emit(args, files, files["instance.cnf" if fmt == "dimacs" else "instance.json"])
    return EXIT_OK


def _load_graph(args, k: int) -> Hypergraph:
    if args.graph == "empty":
        return Hypergraph.empty(args.n, k)
    if args.graph == "poisson":
        return sample_poisson(EnsembleParams(args.n, k, args.alpha), stream(args.seed, "graph"))
    g = Hypergraph.from_dict(io.read_json(args.graph))
    if g.k != k:
        raise ConfigError("graph arity does not match kernel arity")
    return g


def cmd_entropy(args) -> int:
    if args.instance:
        inst = io.instance_from_dict(io.read_json(args.instance))
        if args.given_y:
            _emit(args, {}, f"{entropy_given_y(inst.graph, inst.kernel, inst.y)!r}\n")
            return EXIT_OK
        g, kernel = inst.graph, inst.kernel
    else:
        if not args.kernel:
            raise ConfigError("--kernel is required without --instance")
        kernel = parse_kernel_spec(args.kernel)
        if args.n is None and args.graph in ("empty", "poisson"):
            raise ConfigError("--n is required for generated graphs")
        g = _load_graph(args, kernel.k)
    if args.method == "mc":
        est = mc_conditional_entropy(g, kernel, args.samples, stream(args.seed, "entropy"), args.threads)
    else:
        try:
            est = exact_conditional_entropy(g, kernel, args.budget)
        except Infeasible:
            if args.method == "exact":
                raise
            est = mc_conditional_entropy(g, kernel, args.samples, stream(args.seed, "entropy"), args.threads)
    line = f"{est.value!r}\n" if est.nsamples == 0 else f"{est.value!r} {est.stderr!r}\n"
    _emit(args, {"entropy.json": io.dumps(est.__dict__)}, line)
    return EXIT_OK


def cmd_count(args) -> int:
    inst = io.instance_from_dict(io.read_json(args.instance))
    _emit(args, {}, f"{count_solutions(inst.graph, inst.kernel, inst.y)}\n")
    return EXIT_OK


def cmd_gamma(args) -> int:
    kernel = parse_kernel_spec(args.kernel)
    nu = parse_nu(args.nu, args.l)
    value = float(kernel_gamma(kernel, args.l, args.method)(nu[None])[0])
    _emit(args, {}, f"{value!r}\n")
    return EXIT_OK


def cmd_convexity(args) -> int:
    kernel = parse_kernel_spec(args.kernel)
    fn = kernel_gamma(kernel, args.l, args.method)
    report = check_convexity(fn, args.l, args.trials, stream(args.seed, "convexity"), args.tol,
                             exhaustive=args.exhaustive)
    if report.witness is not None:
        report.extra["witness_verified"] = verify_witness(fn, report, args.tol)
    expected = hypothesis_h_expected(kernel)
    report.extra["expected_convex"] = expected
    _emit(args, {"convexity.json": io.dumps(report.to_dict())}, f"{report.verdict}\n",
          {"convex": report.convex})
    return EXIT_VERDICT if expected and not report.convex else EXIT_OK


def cmd_subadd(args) -> int:
    kernel = parse_kernel_spec(args.kernel)
    n = args.n1 + args.n2
    result = ex.subadditivity_experiment(n, args.n1, args.n2, kernel.k, args.alpha, kernel, args.graph_samples,
                                         args.seed, args.inner_samples, args.threads, args.budget)
    return _experiment_output(args, result)


def cmd_interp(args) -> int:
    kernel = parse_kernel_spec(args.kernel)
    result = ex.interpolation_experiment(args.n1, args.n2, kernel.k, args.alpha, kernel, args.t_grid,
                                         args.samples, args.seed, args.threads, args.probe_limit, args.budget)
    return _experiment_output(args, result)


def cmd_concentrate(args) -> int:
    kernel = parse_kernel_spec(args.kernel)
    result = ex.concentration_experiment(kernel, args.alpha, kernel.k, args.n_grid, args.seeds_per_n, args.seed,
                                         args.inner_samples, args.threads, args.budget)
    return _experiment_output(args, result)


def cmd_bounded(args) -> int:
    kernel = parse_kernel_spec(args.kernel)
    result = ex.bounded_difference_experiment(kernel, args.n, kernel.k, args.alpha, args.trials, args.seed,
                                              args.threads, args.budget)
    return _experiment_output(args, result)


def cmd_sbm(args) -> int:
    result = ex.sbm_compare(args.n, args.a, args.b, args.gamma_list, args.graph_samples, args.seed,
                            args.z_gammas, args.kernel_scale, args.threads)
    return _experiment_output(args, result)


def cmd_ldgm(args) -> int:
    result = ex.ldgm_experiment(args.k, parse_channel(args.channel), args.n, args.alpha_grid, args.samples,
                                args.seed, args.inner_samples, args.threads)
    return _experiment_output(args, result)


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="graphchannel", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_text, experiment=False):
        p = sub.add_parser(name, help=help_text)
        p.set_defaults(func=func)
        p.add_argument("--seed", type=int, default=0, help="root seed (default 0)")
        p.add_argument("--threads", type=int, default=1, help="worker threads; results do not depend on it")
        p.add_argument("--out", help="directory for result files and manifest.json")
        if experiment:
            p.add_argument("--format", choices=("csv", "json"), default="csv", help="stdout format")
        return p

    p = add("gen", cmd_gen, "sample a planted instance")
    p.add_argument("--kernel", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--format", choices=("json", "dimacs"), default=None,
                   help="stdout format (default dimacs for CSP kernels, else json)")

    p = add("entropy", cmd_entropy, "conditional entropy H_g(X|Y) of a graph")
    p.add_argument("--kernel")
    p.add_argument("--graph", default="empty", help="empty, poisson or a hypergraph JSON file")
    p.add_argument("--n", type=int)
    p.add_argument("--alpha", type=float, default=0.0)
    p.add_argument("--instance", help="instance JSON; uses its graph and kernel")
    p.add_argument("--given-y", action="store_true", help="with --instance: H(X | Y = y) for its observations")
    p.add_argument("--method", choices=("auto", "exact", "mc"), default="auto")
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument("--budget", type=int, default=DEFAULT_BUDGET)

    p = add("count", cmd_count, "number of assignments consistent with a CSP instance")
    p.add_argument("--instance", required=True)

    p = add("gamma", cmd_gamma, "evaluate Gamma_l at one distribution")
    p.add_argument("--kernel", required=True)
    p.add_argument("--l", type=int, required=True)
    p.add_argument("--nu", default="uniform")
    p.add_argument("--method", choices=("closed", "brute"), default="closed")

    p = add("convexity", cmd_convexity, "search for convexity violations of Gamma_l")
    p.add_argument("--kernel", required=True)
    p.add_argument("--l", type=int, required=True)
    p.add_argument("--trials", type=int, default=10_000)
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--exhaustive", action="store_true")
    p.add_argument("--method", choices=("closed", "brute"), default="closed")

    p = add("subadd", cmd_subadd, "subadditivity H^(n) <= H^(n1) + H^(n2)", True)
    p.add_argument("--kernel", required=True)
    p.add_argument("--n1", type=int, required=True)
    p.add_argument("--n2", type=int, required=True)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--graph-samples", type=int, default=500)
    p.add_argument("--inner-samples", type=int, default=16)
    p.add_argument("--budget", type=int, default=ex.ENSEMBLE_BUDGET)

    p = add("interp", cmd_interp, "interpolation derivative along the canonical path", True)
    p.add_argument("--kernel", required=True)
    p.add_argument("--n1", type=int, required=True)
    p.add_argument("--n2", type=int, required=True)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--t-grid", type=_floats, default=[0.0, 0.25, 0.5, 0.75, 1.0])
    p.add_argument("--samples", type=int, default=400)
    p.add_argument("--probe-limit", type=int, default=64)
    p.add_argument("--budget", type=int, default=DEFAULT_BUDGET)

    p = add("concentrate", cmd_concentrate, "spread of H_G/n across graphs", True)
    p.add_argument("--kernel", required=True)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--n-grid", type=_ints, required=True)
    p.add_argument("--seeds-per-n", type=int, default=200)
    p.add_argument("--inner-samples", type=int, default=16)
    p.add_argument("--budget", type=int, default=ex.ENSEMBLE_BUDGET)

    p = add("bounded", cmd_bounded, "entropy change from one extra edge copy", True)
    p.add_argument("--kernel", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--budget", type=int, default=DEFAULT_BUDGET)

    p = add("sbm", cmd_sbm, "block model versus graphical-channel approximations", True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--a", type=float, required=True)
    p.add_argument("--b", type=float, required=True)
    p.add_argument("--gamma-list", type=_floats, required=True)
    p.add_argument("--graph-samples", type=int, default=100)
    p.add_argument("--z-gammas", type=_floats, default=None)
    p.add_argument("--kernel-scale", choices=("coupled", "literal"), default="coupled")

    p = add("ldgm", cmd_ldgm, "information per observation of a noisy-parity code", True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--channel", required=True, help="bsc:P or bec:EPS")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--alpha-grid", type=_floats, required=True)
    p.add_argument("--samples", type=int, default=300)
    p.add_argument("--inner-samples", type=int, default=1)
    return parser


CONFIG_ERRORS = (ConfigError, KernelError, HypergraphError, GammaError, ex.ExperimentError, io.FormatError,
                 OSError, json.JSONDecodeError)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "threads", 1) < 1:
        parser.error("--threads must be at least 1")
    try:
        return args.func(args)
    except Infeasible as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except CONFIG_ERRORS + (EngineError,) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


def entry() -> None:
    start = time.perf_counter()
    code = main()
    if code == EXIT_VERDICT:
        print(f"verdict failed after {time.perf_counter() - start:.1f}s", file=sys.stderr)
    sys.exit(code)


if __name__ == "__main__":
    entry()
