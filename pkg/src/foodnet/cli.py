"""Command-line pipeline: ingest -> build -> rank -> shock -> evolve -> determinants.

Every run writes its outputs plus a ``manifest.json`` into ``--out``:
the manifest records the command, a config snapshot, sha256 digests of
all inputs and outputs, the seed, the tool version, and the wall-clock
duration, so any artifact can be traced back to exactly what produced
it.  Exit codes: 0 success, 2 usage or input error, 3 numerical failure
(non-convergence, singular designs).
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .centrality import METRICS, RankingTable, betweenness_normalized, compute_metrics
from .community import label_propagation
from .config import (
    Settings,
    load_settings,
    parse_calorie_file,
    parse_column_file,
)
from .determinants import (
    load_determinants_csv,
    random_forest_importance,
    ridge,
    ridge_loocv,
    ols,
    spearman_matrix,
    standardize,
    stepwise,
    summary_frame,
)
from .errors import (
    FoodNetError,
    IterationLimitError,
    ParseError,
    SingularDesignError,
)
from .graph import read_network_csv, write_network_csv
from .ingest import (
    Crop,
    aggregate_staples,
    parse_trade_records,
    read_flows_csv,
    single_staple_network,
    write_flows_csv,
)
from .shock import (
    RANDOM_STRATEGY,
    ShockSpec,
    robustness_curve,
    robustness_surface,
    surface_to_json,
    write_curve_csv,
    write_surface_csv,
    yearly_evolution,
)

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NUMERIC = 3

DEFAULT_TOP_K = 10


def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


class RunContext:
    """Collects inputs/outputs of one command for the run manifest."""

    def __init__(self, args, settings: Settings):
        self.args = args
        self.settings = settings
        self.out = Path(args.out)
        self.out.mkdir(parents=True, exist_ok=True)
        self.inputs: dict[str, str] = {}
        self.outputs: list[Path] = []

    def register_input(self, path) -> Path:
        path = Path(path)
        self.inputs[str(path)] = _sha256(path)
        return path

    def out_file(self, name: str) -> Path:
        path = self.out / name
        self.outputs.append(path)
        return path

    def write_manifest(self, duration: float) -> None:
        flags = {
            k: (str(v) if isinstance(v, Path) else v)
            for k, v in vars(self.args).items()
            if k != "func" and not k.startswith("_")
        }
        manifest = {
            "command": self.args.command,
            "version": __version__,
            "seed": getattr(self.args, "seed", None),
            "flags": flags,
            "config": self.settings.to_dict(),
            "inputs": self.inputs,
            "outputs": {p.name: _sha256(p) for p in self.outputs},
            "duration_seconds": round(duration, 6),
        }
        with open(self.out / "manifest.json", "w", encoding="utf-8") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True)
            fh.write("\n")


# ---------------------------------------------------------------------------
# subcommands


def cmd_ingest(ctx: RunContext) -> int:
    args, settings = ctx.args, ctx.settings
    schema = settings.columns
    calories = settings.calories
    if args.columns:
        schema = parse_column_file(ctx.register_input(args.columns))
    if args.calories:
        calories = parse_calorie_file(ctx.register_input(args.calories))
    source = ctx.register_input(args.input)
    flows, summary = parse_trade_records(source, schema, calories)
    for year in sorted({f.year for f in flows}):
        write_flows_csv(
            [f for f in flows if f.year == year],
            ctx.out_file(f"flows_{year}.csv"),
        )
    with open(ctx.out_file("rejections.json"), "w", encoding="utf-8") as fh:
        fh.write(summary.to_json())
        fh.write("\n")
    print(summary.to_json())
    return EXIT_OK


def _read_flow_files(ctx, paths) -> list:
    flows = []
    for path in paths:
        flows.extend(read_flows_csv(ctx.register_input(path)))
    return flows


def cmd_build(ctx: RunContext) -> int:
    args = ctx.args
    flows = _read_flow_files(ctx, args.flows)
    years = sorted({f.year for f in flows})
    if args.year is not None:
        years = [y for y in years if y == args.year]
        if not years:
            raise ParseError(f"no flows for year {args.year}")
    for year in years:
        if args.staple:
            crop = Crop(args.staple)
            net = single_staple_network(flows, crop, year)
            name = f"network_{year}_{crop.value}.csv"
        else:
            net = aggregate_staples(flows, year)
            name = f"network_{year}.csv"
        write_network_csv(net, ctx.out_file(name))
        print(f"{name}: {net.n_nodes} nodes, {net.n_edges} edges")
    return EXIT_OK


def _load_network(ctx) -> "SupplyNetwork":
    args = ctx.args
    if getattr(args, "network", None):
        return read_network_csv(ctx.register_input(args.network), year=args.year)
    if getattr(args, "networks", None):
        if args.year is None:
            raise ParseError("--year is required with --networks")
        path = Path(args.networks) / f"network_{args.year}.csv"
        return read_network_csv(ctx.register_input(path), year=args.year)
    if getattr(args, "flows", None):
        if args.year is None:
            raise ParseError("--year is required when building from flow files")
        flows = _read_flow_files(ctx, [args.flows])
        if getattr(args, "staple", None):
            return single_staple_network(flows, Crop(args.staple), args.year)
        return aggregate_staples(flows, args.year)
    raise ParseError("no network source given; use --network or --flows/--networks")


def cmd_rank(ctx: RunContext) -> int:
    args, settings = ctx.args, ctx.settings
    net = _load_network(ctx)
    partition = label_propagation(
        net,
        seed=args.seed,
        max_sweeps=settings.community.max_sweeps,
        weighted=settings.community.weighted,
    )
    partition.to_csv(ctx.out_file("modules.csv"))
    scores = compute_metrics(
        net,
        partition,
        seed=args.seed,
        damping=settings.pagerank.damping,
        tol=settings.pagerank.tolerance,
        max_iter=settings.pagerank.max_iter,
    )
    wanted = METRICS if args.all_metrics else (args.metric,)
    tables = {code: RankingTable.from_scores(code, scores[code]) for code in wanted}
    for code, table in tables.items():
        extra = None
        if code == "BC":
            extra = {"score_normalized": betweenness_normalized(table.scores)}
        table.to_csv(ctx.out_file(f"ranking_{code}.csv"), extra=extra)
    with open(ctx.out_file("top.csv"), "w", encoding="utf-8") as fh:
        fh.write("metric,rank,node,score\n")
        for code in wanted:
            for node, score in tables[code].top(args.top):
                fh.write(f"{code},{tables[code].ranks[node]},{node},{score!r}\n")
    if args.correlations:
        import pandas as pd

        frame = pd.DataFrame(
            {code: [scores[code][v] for v in net.node_list] for code in METRICS},
            index=net.node_list,
        )
        spearman_matrix(frame).to_csv(ctx.out_file("correlations.csv"))
    shown = ", ".join(f"{code}" for code in wanted)
    print(f"ranked {net.n_nodes} nodes ({shown}); modules: {partition.n_modules}")
    return EXIT_OK


def cmd_shock(ctx: RunContext) -> int:
    args, settings = ctx.args, ctx.settings
    net = _load_network(ctx)
    strategy = RANDOM_STRATEGY if args.random else args.metric
    spec = ShockSpec(
        strategy=strategy,
        q=args.q,
        p_step=args.p_step if args.p_step is not None else settings.shock.p_step,
        replications=args.reps if args.reps is not None else settings.shock.replications,
        seed=args.seed,
        adaptive=args.adaptive,
    )
    if args.surface:
        q_steps = args.q_steps if args.q_steps is not None else settings.shock.q_steps
        surface = robustness_surface(net, spec, q_steps, jobs=args.jobs)
        write_surface_csv(surface, ctx.out_file("surface.csv"), p_step=spec.p_step)
        with open(ctx.out_file("surface.json"), "w", encoding="utf-8") as fh:
            fh.write(surface_to_json(surface))
            fh.write("\n")
        print(f"R_pq = {surface.r_pq!r} ({strategy}, M={q_steps})")
    else:
        curve = robustness_curve(net, spec, jobs=args.jobs)
        write_curve_csv(curve, ctx.out_file("curve.csv"), p_step=spec.p_step)
        print(f"R_p = {curve.r_p!r} ({strategy}, q={spec.q!r})")
    return EXIT_OK


def cmd_evolve(ctx: RunContext) -> int:
    args, settings = ctx.args, ctx.settings
    import re

    files = sorted(
        p for p in Path(args.networks).glob("network_*.csv")
        if re.fullmatch(r"network_\d{4}\.csv", p.name)
    )
    if not files:
        raise ParseError(f"no network_<year>.csv files under {args.networks}")
    networks = {}
    for path in files:
        net = read_network_csv(ctx.register_input(path))
        networks[net.year] = net
    strategy = RANDOM_STRATEGY if args.random else args.metric
    spec = ShockSpec(
        strategy=strategy,
        q=args.q,
        p_step=args.p_step if args.p_step is not None else settings.shock.p_step,
        replications=args.reps if args.reps is not None else settings.shock.replications,
        seed=args.seed,
    )
    q_steps = None
    if args.surface:
        q_steps = args.q_steps if args.q_steps is not None else settings.shock.q_steps
    rows = yearly_evolution(networks, spec, q_steps, jobs=args.jobs)
    with open(ctx.out_file("evolution.csv"), "w", encoding="utf-8") as fh:
        fh.write("year,strategy,q,index,value\n")
        for row in rows:
            q_txt = "" if row.q is None else repr(row.q)
            fh.write(f"{row.year},{row.strategy},{q_txt},{row.index},{row.value!r}\n")
    print(f"evolution over {len(networks)} years -> {len(rows)} rows")
    return EXIT_OK


def cmd_determinants(ctx: RunContext) -> int:
    args, settings = ctx.args, ctx.settings
    table = load_determinants_csv(ctx.register_input(args.table), target=args.target)
    if table.dropped_rows:
        print(f"dropped {table.dropped_rows} incomplete rows", file=sys.stderr)
    if settings.determinants.standardize and not args.no_standardize:
        table = standardize(table)
    models = [m.strip() for m in args.models.split(",") if m.strip()]
    valid = ("corr", "ols", "stepwise", "ridge", "rf")
    unknown = [m for m in models if m not in valid]
    if unknown:
        raise ParseError(f"unknown model(s) {unknown}; expected a subset of {valid}")
    reports = {}
    if "ols" in models:
        reports["ols"] = ols(table)
    if "stepwise" in models:
        reports["stepwise"] = stepwise(
            table,
            p_enter=settings.determinants.p_enter,
            p_remove=settings.determinants.p_remove,
        )
    if "ridge" in models:
        if args.lambda_cv:
            lam, _ = ridge_loocv(table)
        elif args.ridge_lambda is not None:
            lam = args.ridge_lambda
        else:
            lam = settings.determinants.ridge_lambda
        reports["ridge"] = ridge(table, lam=lam)
    if "rf" in models:
        reports["rf"] = random_forest_importance(
            table,
            trees=settings.determinants.trees,
            min_leaf=settings.determinants.min_leaf,
            seed=args.seed,
            jobs=args.jobs,
        )
    for name, report in reports.items():
        with open(ctx.out_file(f"{name}.json"), "w", encoding="utf-8") as fh:
            fh.write(report.to_json())
            fh.write("\n")
    frame = summary_frame(table, reports, include_correlations="corr" in models)
    frame.to_csv(ctx.out_file("determinants.csv"))
    for name, report in reports.items():
        extras = ""
        if report.selected is not None:
            extras = f" selected={list(report.selected)}"
        if report.lambda_ is not None:
            extras = f" lambda={report.lambda_!r}"
        print(f"{name}: n={report.n_rows} R2={report.r_squared:.4f}{extras}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="sectioned key = value settings file")
    common.add_argument("--out", default="out", help="output directory")
    common.add_argument("--jobs", type=int, default=1, help="max parallel workers")
    common.add_argument("--seed", type=int, default=0, help="master random seed")

    parser = argparse.ArgumentParser(
        prog="foodnet",
        description="Build food supply networks, rank economies, and stress-test connectivity.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", parents=[common], help="parse raw trade records into flow tables")
    p.add_argument("--input", required=True, help="raw bilateral trade CSV/TSV")
    p.add_argument("--columns", help="column-map file (key = value)")
    p.add_argument("--calories", help="calorie coefficients file (crop = kcal/tonne)")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("build", parents=[common], help="materialize yearly networks from flows")
    p.add_argument("--flows", nargs="+", required=True, help="flow CSV file(s) from ingest")
    p.add_argument("--year", type=int, help="build only this year")
    p.add_argument("--staple", choices=[c.value for c in Crop], help="single-staple layer")
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("rank", parents=[common], help="score and rank economies")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--network", help="network_<year>.csv file")
    src.add_argument("--networks", help="directory of network_<year>.csv files")
    p.add_argument("--year", type=int, help="year (with --networks)")
    which = p.add_mutually_exclusive_group(required=True)
    which.add_argument("--metric", choices=METRICS, help="one influence metric")
    which.add_argument("--all-metrics", action="store_true", help="all twelve metrics")
    p.add_argument("--top", type=int, default=DEFAULT_TOP_K, help="rows in the top table")
    p.add_argument("--correlations", action="store_true",
                   help="emit the metric-by-metric Spearman matrix")
    p.set_defaults(func=cmd_rank)

    p = sub.add_parser("shock", parents=[common], help="simulate connectivity under shocks")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--network", help="network_<year>.csv file")
    src.add_argument("--flows", help="flow CSV from ingest (with --year)")
    p.add_argument("--year", type=int, help="year (with --flows)")
    p.add_argument("--staple", choices=[c.value for c in Crop],
                   help="restrict to one staple layer (with --flows)")
    which = p.add_mutually_exclusive_group(required=True)
    which.add_argument("--metric", choices=METRICS, help="ranked targeting metric")
    which.add_argument("--random", action="store_true", help="random targeting")
    p.add_argument("--q", type=float, default=1.0, help="severity in [0, 1]")
    p.add_argument("--p-step", type=float, help="reporting grid step (default 0.02)")
    p.add_argument("--reps", type=int, help="replications for stochastic runs")
    p.add_argument("--surface", action="store_true", help="sweep the severity grid")
    p.add_argument("--q-steps", type=int, help="severity grid size M (with --surface)")
    p.add_argument("--adaptive", action="store_true",
                   help="re-rank after every stage instead of static order")
    p.set_defaults(func=cmd_shock)

    p = sub.add_parser("evolve", parents=[common], help="robustness indices year by year")
    p.add_argument("--networks", required=True, help="directory of network_<year>.csv files")
    which = p.add_mutually_exclusive_group(required=True)
    which.add_argument("--metric", choices=METRICS, help="ranked targeting metric")
    which.add_argument("--random", action="store_true", help="random targeting")
    p.add_argument("--q", type=float, default=1.0, help="severity in [0, 1]")
    p.add_argument("--p-step", type=float, help="reporting grid step")
    p.add_argument("--reps", type=int, help="replications for stochastic runs")
    p.add_argument("--surface", action="store_true", help="also compute yearly R_pq")
    p.add_argument("--q-steps", type=int, help="severity grid size M")
    p.set_defaults(func=cmd_evolve)

    p = sub.add_parser("determinants", parents=[common], help="relate robustness to drivers")
    p.add_argument("--table", required=True, help="CSV with year, target, and driver columns")
    p.add_argument("--target", default="R", help="target column name")
    p.add_argument("--models", default="corr,ols,stepwise,ridge,rf",
                   help="comma list from corr,ols,stepwise,ridge,rf")
    p.add_argument("--lambda", dest="ridge_lambda", type=float,
                   help="ridge penalty (default from config)")
    p.add_argument("--lambda-cv", action="store_true",
                   help="pick the ridge penalty by leave-one-out CV")
    p.add_argument("--no-standardize", action="store_true",
                   help="fit on raw columns instead of standardized ones")
    p.set_defaults(func=cmd_determinants)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    started = time.monotonic()
    try:
        settings = load_settings(args.config)
        ctx = RunContext(args, settings)
        code = args.func(ctx)
        if code == EXIT_OK:
            ctx.write_manifest(time.monotonic() - started)
        return code
    except (IterationLimitError, SingularDesignError, np.linalg.LinAlgError) as exc:
        print(f"foodnet: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ParseError, FoodNetError, ValueError, KeyError, FileNotFoundError, OSError) as exc:
        print(f"foodnet: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
