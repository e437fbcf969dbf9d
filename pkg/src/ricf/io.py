"""Plain-text graph files, CSV data files, and fit reports.

Graph files declare variables first, then edges::

    # diabetes trial
    var Ex
    var BP
    Ex -> BP
    BP <-> Y

Data files are CSV with one row per observation and a header of
variable names matching the graph file.  Fit reports are JSON keyed by
edge (``"A->B"``) and vertex pair (``"A<->B"``, diagonal by name).
"""

from __future__ import annotations

import csv
import json

import numpy as np
import scipy.linalg

from .data import DataMatrix, EmpiricalCovariance
from .errors import GraphParseError, ShapeError
from .fitting import FitConfig, FitResult
from .graphs import MixedGraph
from .model import ParameterVectorization, fisher_information

__all__ = [
    "parse_graph",
    "write_graph",
    "read_graph_file",
    "read_data_csv",
    "write_data_csv",
    "read_covariance_csv",
    "graph_summary",
    "build_fit_report",
]


# -- graph text format -------------------------------------------------------


def parse_graph(text: str) -> MixedGraph:
    """Parse the plain-text graph format into a MixedGraph.

    Declarations must precede edges; duplicate variables, duplicate
    edges, self loops and unknown names are rejected with the line
    number.  Bows and cycles are allowed here so that structure checks
    can report them; the fitter rejects them later.
    """
    names: list[str] = []
    index: dict[str, int] = {}
    directed: list[tuple[int, int]] = []
    bidirected: list[tuple[int, int]] = []
    seen_directed: set[tuple[int, int]] = set()
    seen_bidirected: set[tuple[int, int]] = set()
    edges_started = False

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        if tokens[0] == "var":
            if len(tokens) != 2:
                raise GraphParseError("expected 'var <name>'", line=lineno)
            if edges_started:
                raise GraphParseError(
                    "variable declarations must precede edges", line=lineno)
            name = tokens[1]
            if name in index:
                raise GraphParseError(
                    f"duplicate variable {name!r}", line=lineno)
            index[name] = len(names)
            names.append(name)
            continue
        if len(tokens) != 3:
            raise GraphParseError(
                f"expected '<name> -> <name>' or '<name> <-> <name>', "
                f"got {line!r}", line=lineno)
        lhs, op, rhs = tokens
        for name in (lhs, rhs):
            if name not in index:
                raise GraphParseError(
                    f"unknown variable {name!r}", line=lineno)
        a, c = index[lhs], index[rhs]
        if a == c:
            raise GraphParseError(
                f"self loop at {lhs!r} not allowed", line=lineno)
        edges_started = True
        if op == "->":
            if (a, c) in seen_directed:
                raise GraphParseError(
                    f"duplicate edge {lhs} -> {rhs}", line=lineno)
            seen_directed.add((a, c))
            directed.append((a, c))
        elif op == "<->":
            key = (min(a, c), max(a, c))
            if key in seen_bidirected:
                raise GraphParseError(
                    f"duplicate edge {lhs} <-> {rhs}", line=lineno)
            seen_bidirected.add(key)
            bidirected.append(key)
        else:
            raise GraphParseError(
                f"unknown edge operator {op!r} (use -> or <->)", line=lineno)

    return MixedGraph(len(names), directed=directed, bidirected=bidirected,
                      names=tuple(names))


def write_graph(graph: MixedGraph) -> str:
    """Inverse of parse_graph up to comments and blank lines."""
    lines = [f"var {graph.name_of(v)}" for v in range(graph.n_vertices)]
    for j, i in sorted(graph.directed):
        lines.append(f"{graph.name_of(j)} -> {graph.name_of(i)}")
    for i, j in sorted(graph.bidirected):
        lines.append(f"{graph.name_of(i)} <-> {graph.name_of(j)}")
    return "\n".join(lines) + "\n"


def read_graph_file(path) -> MixedGraph:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_graph(fh.read())


# -- data files --------------------------------------------------------------


def _read_csv_columns(path):
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise GraphParseError(f"{path}: empty CSV file")
        header = [h.strip() for h in header]
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise GraphParseError(
                    f"{path}: expected {len(header)} columns", line=lineno)
            try:
                rows.append([float(c) for c in row])
            except ValueError as exc:
                raise GraphParseError(f"{path}: {exc}", line=lineno)
    return header, np.array(rows, dtype=float)


def _column_order(header, graph: MixedGraph, path):
    wanted = [graph.name_of(v) for v in range(graph.n_vertices)]
    if sorted(header) != sorted(wanted):
        raise GraphParseError(
            f"{path}: CSV columns {header} do not match graph variables "
            f"{wanted}")
    return [header.index(name) for name in wanted]


def read_data_csv(path, graph: MixedGraph) -> DataMatrix:
    """Observations (rows) by variables (columns); reordered to the
    graph's vertex order."""
    header, rows = _read_csv_columns(path)
    order = _column_order(header, graph, path)
    if rows.size == 0:
        raise GraphParseError(f"{path}: no observation rows")
    return DataMatrix(rows[:, order].T)


def write_data_csv(path, graph: MixedGraph, data: DataMatrix):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([graph.name_of(v) for v in range(graph.n_vertices)])
        for col in data.values.T:
            writer.writerow([repr(float(v)) for v in col])


def read_covariance_csv(path, graph: MixedGraph, n: int,
                        centered: bool = False) -> EmpiricalCovariance:
    """Square covariance CSV (header + one row per variable)."""
    header, rows = _read_csv_columns(path)
    order = _column_order(header, graph, path)
    p = graph.n_vertices
    if rows.shape != (p, p):
        raise ShapeError(
            f"{path}: covariance must be {p}x{p}, got {rows.shape}")
    reordered = rows[np.ix_(order, order)]
    return EmpiricalCovariance(0.5 * (reordered + reordered.T), n,
                               centered=centered)


# -- reports -----------------------------------------------------------------


def _beta_key(graph, i, j):
    return f"{graph.name_of(j)}->{graph.name_of(i)}"


def _omega_key(graph, i, j):
    if i == j:
        return graph.name_of(i)
    return f"{graph.name_of(i)}<->{graph.name_of(j)}"


def graph_summary(graph: MixedGraph) -> dict:
    acyclic = graph.is_acyclic()
    summary = {
        "variables": [graph.name_of(v) for v in range(graph.n_vertices)],
        "n_directed_edges": len(graph.directed),
        "n_bidirected_edges": len(graph.bidirected),
        "acyclic": acyclic,
        "bow_free": graph.is_bow_free(),
        "bap": graph.is_bap(),
        "ancestral": graph.is_ancestral() if acyclic else None,
        "bidirected_chain_graph": graph.is_bidirected_chain_graph(),
        "topological_order": ([graph.name_of(v)
                               for v in graph.topological_order()]
                              if acyclic else None),
        "districts": sorted(
            sorted(graph.name_of(v) for v in d)
            for d in {frozenset(graph.district(i) | {i})
                      for i in range(graph.n_vertices) if graph.spouses(i)}
        ),
    }
    if not acyclic:
        summary["cycle"] = [graph.name_of(v) for v in graph._find_cycle()]
    return summary


def _standard_errors(result: FitResult, vec: ParameterVectorization):
    info = fisher_information(result.b_hat, result.omega_hat, vec)
    try:
        chol = scipy.linalg.cho_factor(info.matrix, lower=True)
    except scipy.linalg.LinAlgError:
        return None
    cov = scipy.linalg.cho_solve(chol, np.eye(vec.size)) / result.n
    variances = np.diag(cov)
    if np.any(variances < 0):
        return None
    return np.sqrt(variances)


def build_fit_report(result: FitResult, config: FitConfig,
                     backend: str = "auto", centered: bool = False) -> dict:
    """JSON-ready summary of a fit: graph flags, estimates keyed by edge,
    asymptotic standard errors, likelihood and iteration diagnostics."""
    graph = result.b_hat.graph
    vec = ParameterVectorization(graph)
    se = _standard_errors(result, vec)

    beta = {}
    beta_se = {}
    for t, (i, j) in enumerate(vec.beta_index):
        key = _beta_key(graph, i, j)
        beta[key] = float(result.b_hat.values[i, j])
        if se is not None:
            beta_se[key] = float(se[t])
    omega = {}
    omega_se = {}
    for t, (i, j) in enumerate(vec.omega_index):
        key = _omega_key(graph, i, j)
        omega[key] = float(result.omega_hat.values[i, j])
        if se is not None:
            omega_se[key] = float(se[vec.n_beta + t])

    return {
        "graph": graph_summary(graph),
        "n": result.n,
        "covariance_centered": centered,
        "estimates": {"beta": beta, "omega": omega},
        "standard_errors": (None if se is None
                            else {"beta": beta_se, "omega": omega_se}),
        "log_likelihood": float(result.log_likelihood),
        "loglik_trace": [float(v) for v in result.loglik_trace],
        "status": result.status.value,
        "cycles": result.cycles_used,
        "closed_form_vertices": sorted(
            graph.name_of(v) for v in result.closed_form_vertices),
        "config": {
            "tol": config.tol,
            "max_cycles": config.max_cycles,
            "divergence_threshold": config.divergence_threshold,
            "district_restriction": config.district_restriction,
        },
        "backend": backend,
    }


def dump_report(report: dict, path=None) -> str:
    text = json.dumps(report, indent=2)
    if path is not None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    return text
