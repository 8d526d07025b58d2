"""Command-line harness: single computations and deterministic parameter sweeps.

Subcommands::

    qwhit classical --n 2..20 [--graph distorted] [--trials 100000 --seed 0]
    qwhit quantum   --n 4 --coin dft --method closed
    qwhit spectral  --n 4 --coin dft
    qwhit sweep fig1|fig23|fig4 --n 2..20 --epsilon 0.001

Values from ``--config FILE`` (JSON) are overridden by explicit flags. Output
goes to ``--output`` (stdout by default) as CSV or JSON. Exit status is 0 on
success, 2 for usage errors, 3 for resource limits and 4 for numerical
failures.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass

from .classical import MAX_N as CLASSICAL_MAX_N, classical_hitting_closed, classical_hitting_graph, classical_hitting_recursion, classical_monte_carlo
from .coins import COIN_KINDS, make_coin
from .errors import ConfigurationError, NumericalError, QWalkError, ResourceError
from .graph import distorted_hypercube, hypercube
from .reduced import reduced_hitting_time
from .spectral import avoiding_projector, eigendecompose, infinite_hitting_probability
from .superop import ABSORPTION_TOL, build_superoperators, closed_form_hitting_time, iterative_hitting_time, superop_row_budget
from .walk import DEFAULT_EPSILON, DEFAULT_T_MAX, measured_walk, symmetric_initial_state

__all__ = ["ExperimentConfig", "parse_config", "parse_range", "run", "main"]

EXIT_OK, EXIT_USAGE, EXIT_RESOURCE, EXIT_NUMERICAL = 0, 2, 3, 4
COMMANDS = ("classical", "quantum", "spectral", "sweep")
FIGURES = ("fig1", "fig23", "fig4")
GRAPHS = ("regular", "distorted")
METHODS = ("auto", "closed", "iterative", "reduced")
FORMATS = ("csv", "json")
# explicit graph tables beyond this many entries are refused
MAX_TABLE_ENTRIES = 1 << 26


@dataclass(frozen=True)
class ExperimentConfig:
    command: str
    figure: str | None = None
    n: tuple[int, ...] = (4,)
    coin: str = "grover"
    graph: str = "regular"
    method: str = "auto"
    epsilon: tuple[float, ...] = (DEFAULT_EPSILON,)
    t_max: int = DEFAULT_T_MAX
    seed: int = 0
    trials: int = 0
    output: str | None = None
    format: str = "csv"
    jobs: int = 1


def parse_range(text) -> tuple[int, ...]:
    """``"5"``, ``"2..6"`` (inclusive) or comma-separated mixtures of both."""
    if isinstance(text, int):
        return (text,)
    if isinstance(text, (list, tuple)):
        out = []
        for item in text:
            out.extend(parse_range(item))
        return tuple(sorted(set(out)))
    values = []
    for part in str(text).split(","):
        part = part.strip()
        try:
            if ".." in part:
                lo, hi = (int(s) for s in part.split(".."))
                if hi < lo:
                    raise ValueError
                values.extend(range(lo, hi + 1))
            else:
                values.append(int(part))
        except ValueError:
            raise ConfigurationError(f"cannot parse n range {text!r}; use N, A..B or a comma list") from None
    return tuple(sorted(set(values)))


def _parse_epsilon(value) -> tuple[float, ...]:
    items = value if isinstance(value, (list, tuple)) else [value]
    out = []
    for item in items:
        for part in str(item).split(","):
            try:
                eps = float(part)
            except ValueError:
                raise ConfigurationError(f"cannot parse epsilon {part!r}") from None
            if not 0.0 < eps < 1.0:
                raise ConfigurationError(f"epsilon must lie in (0, 1), got {eps}")
            out.append(eps)
    return tuple(sorted(set(out), reverse=True))


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False, argument_default=argparse.SUPPRESS)
    common.add_argument("--n", help="dimension: N, A..B or comma list")
    common.add_argument("--coin", choices=COIN_KINDS)
    common.add_argument("--graph", choices=GRAPHS)
    common.add_argument("--method", choices=METHODS)
    common.add_argument("--epsilon", nargs="+", help="stopping tolerance(s) in (0, 1)")
    common.add_argument("--t-max", dest="t_max", type=int)
    common.add_argument("--seed", type=int)
    common.add_argument("--trials", type=int, help="Monte Carlo trials (classical)")
    common.add_argument("--output", help="output path (default: stdout)")
    common.add_argument("--format", choices=FORMATS)
    common.add_argument("--config", help="JSON file with default values for these flags")
    common.add_argument("--jobs", type=int, help="worker processes for sweeps")

    parser = _Parser(prog="qwhit", description="Hitting times of measured quantum walks on hypercubes.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("classical", parents=[common], help="classical random-walk hitting times")
    sub.add_parser("quantum", parents=[common], help="quantum hitting time")
    sub.add_parser("spectral", parents=[common], help="eigenvalue clusters and escape probability")
    sw = sub.add_parser("sweep", parents=[common], help="figure data sweeps")
    sw.add_argument("figure", choices=FIGURES)
    return parser


_CONFIG_KEYS = {"n", "coin", "graph", "method", "epsilon", "t_max", "seed", "trials", "output", "format", "jobs"}


def _load_config_file(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigurationError(f"cannot read config file {path!r}: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigurationError("config file must hold a JSON object")
    data = {k.replace("-", "_"): v for k, v in data.items()}
    unknown = set(data) - _CONFIG_KEYS
    if unknown:
        raise ConfigurationError(f"unknown config keys: {sorted(unknown)}")
    return data


def _superop_rows(n: int) -> int:
    return ((1 << n) * n) ** 2


def parse_config(argv=None) -> ExperimentConfig:
    """Parse arguments (and an optional JSON config file) into a validated config.

    Raises
    ------
    ConfigurationError
        On unknown flags, unparseable values or invalid combinations.
    """
    try:
        ns = vars(_build_parser().parse_args(argv))
    except _UsageError as exc:
        raise ConfigurationError(str(exc)) from None
    values = {}
    if "config" in ns:
        values.update(_load_config_file(ns.pop("config")))
    values.update(ns)
    command = values.pop("command")
    figure = values.pop("figure", None)

    kw = {}
    if "n" in values:
        kw["n"] = parse_range(values["n"])
    if "epsilon" in values:
        kw["epsilon"] = _parse_epsilon(values["epsilon"])
    for key in ("coin", "graph", "method", "format", "output"):
        if key in values:
            kw[key] = values[key]
    for key in ("t_max", "seed", "trials", "jobs"):
        if key in values:
            try:
                kw[key] = int(values[key])
            except (TypeError, ValueError):
                raise ConfigurationError(f"{key} must be an integer, got {values[key]!r}") from None
    cfg = ExperimentConfig(command=command, figure=figure, **kw)
    _validate(cfg)
    return cfg


def _validate(cfg: ExperimentConfig):
    if cfg.coin not in COIN_KINDS:
        raise ConfigurationError(f"coin must be one of {COIN_KINDS}, got {cfg.coin!r}")
    if cfg.graph not in GRAPHS:
        raise ConfigurationError(f"graph must be one of {GRAPHS}, got {cfg.graph!r}")
    if cfg.method not in METHODS:
        raise ConfigurationError(f"method must be one of {METHODS}, got {cfg.method!r}")
    if cfg.format not in FORMATS:
        raise ConfigurationError(f"format must be one of {FORMATS}, got {cfg.format!r}")
    if not cfg.n or min(cfg.n) < 1:
        raise ConfigurationError("n must be a positive integer")
    if cfg.t_max < 1 or cfg.jobs < 1 or cfg.trials < 0:
        raise ConfigurationError("t_max and jobs must be >= 1 and trials >= 0")
    if cfg.method == "reduced":
        if cfg.coin != "grover" or cfg.graph != "regular":
            raise ConfigurationError("method=reduced requires coin=grover and graph=regular")
        if min(cfg.n) < 2:
            raise ConfigurationError("method=reduced requires n >= 2")
    if cfg.method == "closed" and cfg.command in ("quantum", "sweep"):
        budget = superop_row_budget()
        too_big = [n for n in cfg.n if _superop_rows(n) > budget]
        if too_big:
            raise ConfigurationError(
                f"method=closed requires (N*d)**2 <= {budget} superoperator rows; fails for n={too_big}"
            )
    if len(cfg.epsilon) > 1 and not (cfg.command == "quantum" or cfg.figure == "fig23"):
        raise ConfigurationError("several epsilon values are only allowed for quantum and sweep fig23")
    if cfg.figure == "fig4" and cfg.method == "reduced":
        raise ConfigurationError("method=reduced requires graph=regular; fig4 also uses the distorted graph")
    if cfg.figure in ("fig1", "fig4") and cfg.coin != "grover":
        raise ConfigurationError(f"sweep {cfg.figure} compares against the classical walk and uses coin=grover")


# -- computations ------------------------------------------------------------


def _graph(kind: str, n: int):
    if (1 << n) * n > MAX_TABLE_ENTRIES:
        raise ResourceError(f"graph table for n={n} exceeds {MAX_TABLE_ENTRIES} entries")
    return distorted_hypercube(n) if kind == "distorted" else hypercube(n)


def _resolve_method(method: str, coin: str, graph: str, n: int) -> str:
    if method != "auto":
        return method
    if coin == "grover" and graph == "regular" and n >= 2:
        return "reduced"
    return "closed" if _superop_rows(n) <= superop_row_budget() else "iterative"


def _full_space(coin: str, graph: str, n: int):
    g = _graph(graph, n)
    w = measured_walk(g, make_coin(coin, g.degree))
    return w, symmetric_initial_state(g, 0)


def _quantum(cfg: ExperimentConfig, n: int, epsilon: float, method: str):
    """HittingResult for one point; ``method`` is already resolved."""
    if method == "reduced":
        # closed form on the reduced space; epsilon plays no role
        return reduced_hitting_time(n, method="closed")
    w, psi0 = _full_space(cfg.coin, cfg.graph, n)
    if method == "closed":
        return closed_form_hitting_time(build_superoperators(w), psi0)
    return iterative_hitting_time(w, psi0, epsilon=epsilon, t_max=cfg.t_max)


def _tau_or_inf(r) -> float:
    return r.tau if r.finite else math.inf


def _classical_tau(graph: str, n: int) -> float:
    if graph == "regular":
        return classical_hitting_recursion(n).tau0
    g = _graph(graph, n)
    return classical_hitting_graph(g, 0, g.n_vertices - 1)


def _point(task):
    """Compute the rows for one sweep point. Top level so worker processes can pickle it."""
    cfg, n, epsilon = task
    kind = cfg.figure or cfg.command
    return _HANDLERS[kind](cfg, n, epsilon)


def _rows_classical(cfg, n, epsilon):
    row = {"n": n, "graph": cfg.graph, "method": "exact" if cfg.graph == "regular" else "linear_solve"}
    row["tau"] = _classical_tau(cfg.graph, n)
    row["tau_closed_sum"] = classical_hitting_closed(n) if cfg.graph == "regular" else None
    if cfg.trials:
        g = _graph(cfg.graph, n)
        mc = classical_monte_carlo(g, 0, g.n_vertices - 1, cfg.trials, seed=cfg.seed)
        row.update(mc_mean=mc.mean, mc_std_error=mc.std_error, trials=mc.trials, censored=mc.censored, seed=cfg.seed)
    return [row]


def _rows_quantum(cfg, n, epsilon):
    method = _resolve_method(cfg.method, cfg.coin, cfg.graph, n)
    r = _quantum(cfg, n, epsilon, method)
    return [
        {
            "n": n,
            "coin": cfg.coin,
            "graph": cfg.graph,
            "method": method,
            "solver": r.solver,
            "epsilon": epsilon if r.method == "iterative" else None,
            "tol_abs": ABSORPTION_TOL if r.method != "iterative" else None,
            "tau": _tau_or_inf(r),
            "absorbed": r.absorption_probability,
            "finite": r.finite,
            "stopping_time": r.stopping_time,
        }
    ]


def _rows_spectral(cfg, n, epsilon):
    w, psi0 = _full_space(cfg.coin, cfg.graph, n)
    report = eigendecompose(w.evolution)
    proj = avoiding_projector(report, w.final_vertex, w.graph.degree)
    escape = infinite_hitting_probability(proj, psi0)
    rows = []
    for (lam, mult, null_dim, min_overlap), cluster in zip(proj.per_cluster, report.clusters):
        rows.append(
            {
                "n": n,
                "coin": cfg.coin,
                "graph": cfg.graph,
                "method": "dense_schur",
                "angle": cluster.angle,
                "eigenvalue_re": lam.real,
                "eigenvalue_im": lam.imag,
                "multiplicity": mult,
                "avoiding_dim": null_dim,
                "min_overlap": min_overlap,
                "projector_rank": proj.rank,
                "rank_stable": proj.rank_stable,
                "ambiguous_clustering": report.ambiguous,
                "escape_probability": escape,
            }
        )
    return rows


def _rows_fig1(cfg, n, epsilon):
    reduced = cfg.method in ("auto", "reduced") and cfg.graph == "regular" and n >= 2
    if reduced:
        closed = reduced_hitting_time(n, method="closed")
        est = reduced_hitting_time(n, method="iterative", epsilon=epsilon, t_max=cfg.t_max)
        method = "reduced"
    else:
        w, psi0 = _full_space(cfg.coin, cfg.graph, n)
        closed = None
        if _superop_rows(n) <= superop_row_budget() and cfg.method != "iterative":
            closed = closed_form_hitting_time(build_superoperators(w), psi0)
        est = iterative_hitting_time(w, psi0, epsilon=epsilon, t_max=cfg.t_max)
        method = "full"
    return [
        {
            "n": n,
            # the classical profile is only defined up to its size cap
            "tau_classical": _classical_tau(cfg.graph, n) if n <= CLASSICAL_MAX_N else None,
            "tau_quantum_closed": None if closed is None else _tau_or_inf(closed),
            "tau_quantum_est": _tau_or_inf(est),
            "method": method,
            "epsilon": epsilon,
            "tol_abs": ABSORPTION_TOL,
            "absorbed_closed": None if closed is None else closed.absorption_probability,
            "absorbed_est": est.absorption_probability,
            "stopping_time": est.stopping_time,
        }
    ]


def _rows_fig23(cfg, n, epsilon):
    if cfg.method in ("auto", "reduced") and cfg.coin == "grover" and cfg.graph == "regular" and n >= 2:
        r = reduced_hitting_time(n, method="iterative", epsilon=epsilon, t_max=cfg.t_max)
        method = "reduced"
    else:
        w, psi0 = _full_space(cfg.coin, cfg.graph, n)
        r = iterative_hitting_time(w, psi0, epsilon=epsilon, t_max=cfg.t_max)
        method = "full"
    return [
        {
            "n": n,
            "epsilon": epsilon,
            "tau_est": r.tau,
            "stopping_time": r.stopping_time,
            "method": method,
            "absorbed": r.absorption_probability,
            "reached_epsilon": r.finite,
        }
    ]


def _rows_fig4(cfg, n, epsilon):
    method = cfg.method
    if method == "auto":
        method = "closed" if _superop_rows(n) <= superop_row_budget() else "iterative"
    results = {}
    for kind in GRAPHS:
        sub = ExperimentConfig(command="quantum", n=(n,), coin="grover", graph=kind, t_max=cfg.t_max)
        results[kind] = _quantum(sub, n, epsilon, method)
    return [
        {
            "n": n,
            "tau_classical": _classical_tau("regular", n),
            "tau_regular": _tau_or_inf(results["regular"]),
            "tau_distorted": _tau_or_inf(results["distorted"]),
            "tau_classical_distorted": _classical_tau("distorted", n),
            "method": method,
            "epsilon": epsilon if method == "iterative" else None,
            "tol_abs": ABSORPTION_TOL if method != "iterative" else None,
            "absorbed_regular": results["regular"].absorption_probability,
            "absorbed_distorted": results["distorted"].absorption_probability,
        }
    ]


_HANDLERS = {
    "classical": _rows_classical,
    "quantum": _rows_quantum,
    "spectral": _rows_spectral,
    "fig1": _rows_fig1,
    "fig23": _rows_fig23,
    "fig4": _rows_fig4,
}


def compute_rows(cfg: ExperimentConfig) -> list[dict]:
    """All output rows for ``cfg``, sorted by ``(n, epsilon)`` regardless of scheduling."""
    tasks = [(cfg, n, eps) for n in cfg.n for eps in cfg.epsilon]
    if cfg.jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            chunks = list(pool.map(_point, tasks))
    else:
        chunks = [_point(t) for t in tasks]
    keyed = [((t[1], -t[2]), rows) for t, rows in zip(tasks, chunks)]
    keyed.sort(key=lambda kr: kr[0])
    return [row for _, rows in keyed for row in rows]


# -- output ------------------------------------------------------------------


def format_value(v) -> str:
    """Locale-free text for one CSV cell: 12 significant digits, ``inf``, lower-case booleans."""
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        if math.isnan(v):
            return "nan"
        return format(v, ".12g")
    return str(v)


def _json_value(v):
    if isinstance(v, float):
        if math.isinf(v) or math.isnan(v):
            return format_value(v)
        return float(format(v, ".12g"))
    return v


def render(rows: list[dict], fmt: str, cfg: ExperimentConfig | None = None) -> str:
    if fmt == "json":
        doc = {"rows": [{k: _json_value(v) for k, v in r.items()} for r in rows]}
        if cfg is not None:
            meta = asdict(cfg)
            meta.pop("output")
            doc = {"config": meta, **doc}
        return json.dumps(doc, indent=2) + "\n"
    header = []
    for r in rows:
        for k in r:
            if k not in header:
                header.append(k)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for r in rows:
        writer.writerow([format_value(r.get(k)) for k in header])
    return buf.getvalue()


def run(cfg: ExperimentConfig) -> int:
    """Compute and write the output described by ``cfg``; returns the exit status."""
    rows = compute_rows(cfg)
    text = render(rows, cfg.format, cfg)
    if cfg.output:
        with open(cfg.output, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def main(argv=None) -> int:
    try:
        cfg = parse_config(argv)
    except QWalkError as exc:
        print(f"qwhit: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        return run(cfg)
    except ResourceError as exc:
        print(f"qwhit: resource limit: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except NumericalError as exc:
        print(f"qwhit: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (QWalkError, ValueError) as exc:
        print(f"qwhit: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except MemoryError as exc:
        print(f"qwhit: resource limit: {exc}", file=sys.stderr)
        return EXIT_RESOURCE


if __name__ == "__main__":
    sys.exit(main())
