"""Command line interface.

Subcommands: ``check`` (structure report for a graph file), ``fit``
(maximum likelihood fit, JSON report), ``simulate`` (write replicate
graph/parameter/data files), ``benchmark`` (timing and convergence
table over a scenario file).

Exit codes: 0 success/converged, 2 usage, 3 file parse error,
4 unsupported model class, 5 input not positive definite,
6 cycle budget exhausted, 7 parameter divergence with converged
covariance.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import io as rio
from . import kernels
from .data import empirical_covariance
from .errors import (
    ConfigError,
    GraphParseError,
    ModelClassError,
    NotPositiveDefiniteError,
    RicfError,
    ShapeError,
)
from .fitting import FitConfig, FitStatus, fit
from .graphs import MixedGraph
from .model import ErrorCovariance, ParameterVectorization, PathCoefficients, implied_covariance
from .simulate import BapGenConfig, random_bap, random_parameters, sample_mvn

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_PARSE = 3
EXIT_MODEL_CLASS = 4
EXIT_NOT_PD = 5
EXIT_MAX_CYCLES = 6
EXIT_DIVERGED = 7

_STATUS_EXIT = {
    FitStatus.CONVERGED: EXIT_OK,
    FitStatus.MAX_CYCLES_REACHED: EXIT_MAX_CYCLES,
    FitStatus.PARAMETER_DIVERGENCE_SIGMA_CONVERGED: EXIT_DIVERGED,
}

BENCHMARK_COLUMNS = [
    "scenario", "p", "d", "b", "n", "replicates", "backend",
    "converged", "max_cycles", "diverged", "failed",
    "time_q10", "time_q50", "time_q90", "time_max",
    "cycles_q50", "cycles_q90",
]

BENCHMARK_DETAIL_COLUMNS = [
    "scenario", "backend", "replicate", "status", "cycles", "time_s",
]


def _fail(code: int, message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    return code


# -- check -------------------------------------------------------------------


def cmd_check(args) -> int:
    try:
        graph = rio.read_graph_file(args.graph)
    except (GraphParseError, OSError) as exc:
        return _fail(EXIT_PARSE, str(exc))
    summary = rio.graph_summary(graph)
    if args.json:
        rio.dump_report(summary, args.json)
    width = max(len(k) for k in summary)
    for key, value in summary.items():
        if key == "districts":
            value = "; ".join(",".join(d) for d in value) or "-"
        elif isinstance(value, list):
            value = ",".join(str(v) for v in value)
        print(f"{key:<{width}}  {value}")
    return EXIT_OK


# -- fit ---------------------------------------------------------------------


def _load_start(path, graph):
    with open(path, "r", encoding="utf-8") as fh:
        raw = json.load(fh)
    vec = ParameterVectorization(graph)
    p = graph.n_vertices
    b = np.zeros((p, p))
    om = np.zeros((p, p))
    beta = raw.get("beta", {})
    omega = raw.get("omega", {})
    names = {graph.name_of(v): v for v in range(p)}

    def lookup(name, line):
        if name not in names:
            raise GraphParseError(f"{path}: unknown variable {name!r} in {line}")
        return names[name]

    for key, value in beta.items():
        tail, _, head = key.partition("->")
        b[lookup(head, key), lookup(tail, key)] = float(value)
    for key, value in omega.items():
        if "<->" in key:
            a, _, c = key.partition("<->")
            i, j = lookup(a, key), lookup(c, key)
            om[i, j] = om[j, i] = float(value)
        else:
            i = lookup(key, key)
            om[i, i] = float(value)
    try:
        return PathCoefficients(graph, b), ErrorCovariance(graph, om)
    except RicfError as exc:
        raise GraphParseError(f"{path}: invalid starting values: {exc}")


def cmd_fit(args) -> int:
    try:
        graph = rio.read_graph_file(args.graph)
    except (GraphParseError, OSError) as exc:
        return _fail(EXIT_PARSE, str(exc))
    try:
        if args.cov is not None:
            if args.n is None:
                return _fail(EXIT_USAGE, "--cov requires --n (sample size)")
            obs = rio.read_covariance_csv(args.cov, graph, args.n,
                                          centered=args.center)
            centered = args.center
        elif args.data is not None:
            data = rio.read_data_csv(args.data, graph)
            obs = empirical_covariance(data, center=args.center)
            centered = args.center
        else:
            return _fail(EXIT_USAGE, "supply a data CSV or --cov")
    except (GraphParseError, ShapeError, OSError) as exc:
        return _fail(EXIT_PARSE, str(exc))

    config = FitConfig(tol=args.tol, max_cycles=args.max_cycles,
                       district_restriction=args.district_restriction == "on")
    start = None
    if args.start is not None:
        try:
            start = _load_start(args.start, graph)
        except (GraphParseError, OSError, ValueError) as exc:
            return _fail(EXIT_PARSE, str(exc))

    try:
        result = fit(graph, obs, config, start=start, backend=args.backend)
    except ModelClassError as exc:
        return _fail(EXIT_MODEL_CLASS, str(exc))
    except NotPositiveDefiniteError as exc:
        return _fail(EXIT_NOT_PD, str(exc))
    except RicfError as exc:
        return _fail(EXIT_USAGE, str(exc))

    report = rio.build_fit_report(result, config, backend=args.backend,
                                  centered=centered)
    text = rio.dump_report(report, args.output)
    if args.output is None:
        print(text)
    else:
        print(f"status: {result.status.value}; report written to {args.output}")
    return _STATUS_EXIT[result.status]


# -- simulate ----------------------------------------------------------------


def cmd_simulate(args) -> int:
    import pathlib

    try:
        config = BapGenConfig(p=args.p, d=args.d, b=args.b)
    except ConfigError as exc:
        return _fail(EXIT_USAGE, str(exc))
    if args.n < 1 or args.replicates < 1:
        return _fail(EXIT_USAGE, "--n and --replicates must be positive")

    out = pathlib.Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    root = np.random.SeedSequence(args.seed)
    manifest = {
        "p": args.p, "d": args.d, "b": args.b, "n": args.n,
        "replicates": args.replicates, "seed": args.seed,
        "items": [],
    }
    for rep in range(args.replicates):
        g_seed, par_seed, data_seed = np.random.SeedSequence(
            entropy=args.seed, spawn_key=(rep,)).spawn(3)
        graph = random_bap(BapGenConfig(p=args.p, d=args.d, b=args.b,
                                        seed=g_seed))
        graph = MixedGraph(graph.n_vertices, graph.directed, graph.bidirected,
                           names=[f"x{v + 1}" for v in range(args.p)])
        coeffs, errors = random_parameters(graph, seed=par_seed)
        sigma = implied_covariance(coeffs, errors)
        data = sample_mvn(sigma, args.n, seed=data_seed)

        rep_dir = out / f"rep_{rep:04d}"
        rep_dir.mkdir(exist_ok=True)
        (rep_dir / "graph.txt").write_text(rio.write_graph(graph))
        vec = ParameterVectorization(graph)
        params = {
            "beta": {f"{graph.name_of(j)}->{graph.name_of(i)}":
                     float(coeffs.values[i, j]) for i, j in vec.beta_index},
            "omega": {(graph.name_of(i) if i == j else
                       f"{graph.name_of(i)}<->{graph.name_of(j)}"):
                      float(errors.values[i, j]) for i, j in vec.omega_index},
        }
        (rep_dir / "params.json").write_text(json.dumps(params, indent=2) + "\n")
        rio.write_data_csv(rep_dir / "data.csv", graph, data)
        manifest["items"].append({
            "replicate": rep,
            "directory": rep_dir.name,
            "n_directed_edges": len(graph.directed),
            "n_bidirected_edges": len(graph.bidirected),
        })
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    print(f"wrote {args.replicates} replicates to {out}")
    return EXIT_OK


# -- benchmark ---------------------------------------------------------------


def _benchmark_replicate(task):
    """One scenario replicate: draw a BAP and data from it, fit, time it."""
    (scenario, rep, p, d, b, n, tol, max_cycles, backend, seed) = task
    g_seed, par_seed, data_seed = np.random.SeedSequence(
        entropy=seed, spawn_key=(scenario, rep)).spawn(3)
    graph = random_bap(BapGenConfig(p=p, d=d, b=b, seed=g_seed))
    coeffs, errors = random_parameters(graph, seed=par_seed)
    sigma = implied_covariance(coeffs, errors)
    y = sample_mvn(sigma, n, seed=data_seed)
    obs = empirical_covariance(y)
    config = FitConfig(tol=tol, max_cycles=max_cycles)
    started = time.perf_counter()
    try:
        result = fit(graph, obs, config, backend=backend)
        status = result.status.value
        cycles = result.cycles_used
    except RicfError as exc:
        return (rep, "failed", 0, time.perf_counter() - started, str(exc))
    return (rep, status, cycles, time.perf_counter() - started, "")


def read_scenarios(path):
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise GraphParseError(f"{path}: empty scenario file")
        wanted = {"p", "d", "b", "n", "replicates"}
        have = {f.strip() for f in reader.fieldnames}
        if not wanted <= have:
            raise GraphParseError(
                f"{path}: scenario header must contain {sorted(wanted)}")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            try:
                p = int(row["p"])
                d = float(row["d"])
                braw = (row["b"] or "").strip()
                b = float(braw) if braw else d / 2.0
                n = int(row["n"])
                reps = int(row["replicates"])
            except (TypeError, ValueError) as exc:
                raise GraphParseError(f"{path}: {exc}", line=lineno)
            BapGenConfig(p=p, d=d, b=b)  # validates probabilities
            if reps < 1:
                raise GraphParseError(
                    f"{path}: replicates must be positive", line=lineno)
            rows.append((p, d, b, n, reps))
    if not rows:
        raise GraphParseError(f"{path}: no scenario rows")
    return rows


def _quantile(values, q):
    return float(np.quantile(np.asarray(values), q)) if values else float("nan")


def cmd_benchmark(args) -> int:
    try:
        scenarios = read_scenarios(args.scenarios)
    except (GraphParseError, ConfigError, OSError) as exc:
        return _fail(EXIT_USAGE, str(exc))
    if args.backend == "both":
        backends = ["python", "compiled"]
    else:
        backends = [args.backend]
    if "compiled" in backends and not kernels.HAVE_COMPILED:
        return _fail(EXIT_USAGE, "compiled kernel is not available")

    rows = []
    detail_rows = []
    for backend in backends:
        for idx, (p, d, b, n, reps) in enumerate(scenarios):
            tasks = [(idx, rep, p, d, b, n, args.tol, args.max_cycles,
                      backend, args.seed) for rep in range(reps)]
            if args.jobs > 1:
                with ProcessPoolExecutor(max_workers=args.jobs) as pool:
                    results = list(pool.map(_benchmark_replicate, tasks))
            else:
                results = [_benchmark_replicate(t) for t in tasks]
            results.sort(key=lambda r: r[0])
            detail_rows.extend({
                "scenario": idx, "backend": backend, "replicate": rep,
                "status": status, "cycles": cycles,
                "time_s": round(seconds, 6),
            } for rep, status, cycles, seconds, _ in results)
            times = [r[3] for r in results]
            cycles = [r[2] for r in results if r[1] != "failed"]
            count = lambda s: sum(1 for r in results if r[1] == s)
            rows.append({
                "scenario": idx,
                "p": p, "d": d, "b": b, "n": n, "replicates": reps,
                "backend": backend,
                "converged": count("converged"),
                "max_cycles": count("max_cycles_reached"),
                "diverged": count("parameter_divergence_sigma_converged"),
                "failed": count("failed"),
                "time_q10": round(_quantile(times, 0.1), 6),
                "time_q50": round(_quantile(times, 0.5), 6),
                "time_q90": round(_quantile(times, 0.9), 6),
                "time_max": round(max(times), 6) if times else float("nan"),
                "cycles_q50": round(_quantile(cycles, 0.5), 1),
                "cycles_q90": round(_quantile(cycles, 0.9), 1),
            })

    out = sys.stdout if args.output is None else open(
        args.output, "w", encoding="utf-8", newline="")
    try:
        writer = csv.DictWriter(out, fieldnames=BENCHMARK_COLUMNS)
        writer.writeheader()
        writer.writerows(rows)
    finally:
        if out is not sys.stdout:
            out.close()
            print(f"wrote {len(rows)} scenario rows to {args.output}")
    if args.details is not None:
        with open(args.details, "w", encoding="utf-8", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=BENCHMARK_DETAIL_COLUMNS)
            writer.writeheader()
            writer.writerows(detail_rows)
        print(f"wrote {len(detail_rows)} replicate rows to {args.details}")
    return EXIT_OK


# -- parser ------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ricf",
        description="Fit recursive linear models with correlated errors "
                    "(bow-free acyclic path diagrams) by iterated least "
                    "squares.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_check = sub.add_parser("check", help="report graph structure predicates")
    p_check.add_argument("graph", help="graph file")
    p_check.add_argument("--json", help="also write the report as JSON")
    p_check.set_defaults(func=cmd_check)

    p_fit = sub.add_parser("fit", help="maximum likelihood fit")
    p_fit.add_argument("graph", help="graph file")
    p_fit.add_argument("data", nargs="?", help="observation CSV")
    p_fit.add_argument("--cov", help="covariance CSV instead of raw data")
    p_fit.add_argument("--n", type=int, help="sample size behind --cov")
    p_fit.add_argument("--center", action="store_true",
                       help="subtract means before forming the covariance")
    p_fit.add_argument("--tol", type=float, default=1e-8)
    p_fit.add_argument("--max-cycles", type=int, default=5000)
    p_fit.add_argument("--district-restriction", choices=["on", "off"],
                       default="on")
    p_fit.add_argument("--start", help="JSON file with starting values")
    p_fit.add_argument("--backend",
                       choices=["auto", "python", "compiled"], default="auto")
    p_fit.add_argument("-o", "--output", help="report path (default: stdout)")
    p_fit.set_defaults(func=cmd_fit)

    p_sim = sub.add_parser("simulate",
                           help="write random model/data replicates")
    p_sim.add_argument("--p", type=int, required=True, help="variables")
    p_sim.add_argument("--d", type=float, required=True,
                       help="directed edge probability")
    p_sim.add_argument("--b", type=float, required=True,
                       help="bi-directed edge probability")
    p_sim.add_argument("--n", type=int, required=True, help="sample size")
    p_sim.add_argument("--replicates", type=int, required=True)
    p_sim.add_argument("--seed", type=int, default=0)
    p_sim.add_argument("--out", required=True, help="output directory")
    p_sim.set_defaults(func=cmd_simulate)

    p_bench = sub.add_parser("benchmark",
                             help="convergence/timing table over scenarios")
    p_bench.add_argument("scenarios",
                         help="CSV with columns p,d,b,n,replicates "
                              "(empty b means d/2)")
    p_bench.add_argument("-o", "--output", help="result CSV (default: stdout)")
    p_bench.add_argument("--details",
                         help="also write one CSV row per replicate "
                              "(status, cycles, seconds)")
    p_bench.add_argument("--seed", type=int, default=0)
    p_bench.add_argument("--jobs", type=int, default=1)
    p_bench.add_argument("--tol", type=float, default=1e-8)
    p_bench.add_argument("--max-cycles", type=int, default=5000)
    p_bench.add_argument("--backend",
                         choices=["auto", "python", "compiled", "both"],
                         default="auto")
    p_bench.set_defaults(func=cmd_benchmark)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
