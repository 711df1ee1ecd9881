"""Command-line front end.

Tables go to stdout as CSV (or to ``--out``); human-readable summaries go to
stderr. Exit status: 0 ok, 1 a validation check failed, 2 usage or
configuration error.
"""
from __future__ import annotations

import argparse
import csv
import io
import math
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import checks
from .delay import mean_delay
from .distributions import ConfigurationError
from .duopoly import classify_market, stage1_equilibrium, stage2_equilibrium, stage2_iterate, upper_price
from .monopoly import ConsistencyError, equilibrium_exclusive, equilibrium_shared
from .pricing import (
    revenue_optimal_exclusive,
    revenue_optimal_shared,
    social_optimal_exclusive,
    social_optimal_shared,
    welfare_exclusive,
    welfare_shared,
)
from .scenario import COMBOS, PRESETS, TRAFFIC, Scenario, load_scenario, preset
from .simulation import SimConfig, simulate_shared_queue

EXIT_OK, EXIT_CHECK, EXIT_USAGE = 0, 1, 2
SEED_ENV = "SPECMARKET_SEED"


def fmt(value) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    v = float(value)
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return f"{v:.12g}"


def rounded(value: float) -> float:
    """Value exactly as it will read back from the CSV."""
    return float(fmt(value))


def render_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    return buf.getvalue()


def emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8")


def note(message: str) -> None:
    print(message, file=sys.stderr)


def parse_grid(spec: str) -> list[float]:
    """``0.1,0.2`` lists values; ``a:b:n`` gives n evenly spaced points."""
    try:
        if ":" in spec:
            lo, hi, n = spec.split(":")
            values = np.linspace(float(lo), float(hi), int(n)).tolist()
        else:
            values = [float(v) for v in spec.split(",") if v.strip()]
    except ValueError:
        raise ConfigurationError(f"cannot parse grid {spec!r}") from None
    if not values:
        raise ConfigurationError("empty grid")
    return values


def load(args) -> Scenario:
    s = load_scenario(args.scenario) if args.scenario else preset(args.preset)
    seed = os.environ.get(SEED_ENV)
    if seed is not None:
        try:
            s = replace(s, sim=replace(s.sim, seed=int(seed)))
        except ValueError:
            raise ConfigurationError(f"{SEED_ENV} must be an integer, got {seed!r}") from None
    return s


def cmd_delay(args) -> int:
    s = load(args)
    grid = parse_grid(args.p)
    for p in grid:
        if not 0 <= p <= 1:
            raise ConfigurationError(f"grid value {p} outside [0, 1]")
    header = ["p", "T_analytic"] + (["T_sim", "ci_halfwidth"] if args.simulate else [])
    rows = []
    for i, p in enumerate(grid):
        row = [p, mean_delay(s.delay_model, p)]
        if args.simulate:
            cfg = SimConfig(s.lam * p, s.x, s.y, s.z, n_jobs=s.sim.n_jobs, warmup_fraction=s.sim.warmup_fraction,
                            seed=s.sim.seed + i, batches=s.sim.batches, channel=s.sim.channel)
            est = simulate_shared_queue(cfg)
            # No arrivals means no sojourn observed.
            row += [math.nan, math.nan] if est.empty else [est.mean_delay, est.ci_halfwidth]
            if est.saturated:
                note(f"p={p}: offered load {est.offered_load:.4g} >= 1, simulated delay is transient")
        rows.append(row)
    emit(render_csv(header, rows), args.out)
    return EXIT_OK


def cmd_sweep(args) -> int:
    s = load(args)
    if args.grid < 2:
        raise ConfigurationError("--grid needs at least 2 points")
    rows = []
    for c in np.linspace(0.0, s.reward, args.grid):
        c = rounded(c)
        if args.market == "shared":
            p = equilibrium_shared(s, c).p_star
            welfare = welfare_shared(s, c)
        else:
            p = equilibrium_exclusive(s, c).p_star
            welfare = welfare_exclusive(s, c)
        p = rounded(p)
        rows.append([c, p, c * p, welfare])
    emit(render_csv(["c", "p_star", "revenue", "welfare"], rows), args.out)
    return EXIT_OK


_OPTIMIZERS = {
    ("shared", "revenue"): revenue_optimal_shared,
    ("shared", "social"): social_optimal_shared,
    ("exclusive", "revenue"): revenue_optimal_exclusive,
    ("exclusive", "social"): social_optimal_exclusive,
}


def cmd_optimize(args) -> int:
    s = load(args)
    res = _OPTIMIZERS[(args.market, args.objective)](s)
    aux = "cutoff" if (args.market, args.objective) == ("shared", "social") else "p_star"
    note(f"{args.market} {args.objective}: price {res.optimal_price:.6g}, value {res.optimal_value:.6g}, "
         f"{aux} {res.argmax_aux:.6g}")
    if args.curve:
        if res.curve is None:
            raise ConfigurationError("this optimum is explicit; no curve was sampled")
        x_name = "cutoff" if aux == "cutoff" else "c"
        emit(render_csv([x_name, "value"], res.curve), args.out)
    else:
        emit(render_csv(["market", "objective", "price", "value", aux],
                        [[args.market, args.objective, res.optimal_price, res.optimal_value, res.argmax_aux]]),
             args.out)
    return EXIT_OK


def cmd_duopoly(args) -> int:
    s = load(args)
    if (args.c1 is None) != (args.c2 is None):
        raise ConfigurationError("give both --c1 and --c2, or neither")
    if args.c1 is None:
        if args.trace is not None:
            raise ConfigurationError("--trace needs --c1 and --c2")
        out = stage1_equilibrium(s)
        region = classify_market(s, out.c1_star, out.c2_star)
        note(f"Stage I: c1*={out.c1_star:.6g} c2*={out.c2_star:.6g} p1={out.p1_circ:.6g} p2={out.p2_circ:.6g} "
             f"({region.value}); closed-form p1 {out.p1_closed_form:.6g}, gap {out.route_gap:.3g}")
        header = ["c1_star", "c2_star", "p1", "p2", "delta", "upper_bound_ok", "p1_closed_form", "route_gap"]
        row = [out.c1_star, out.c2_star, out.p1_circ, out.p2_circ, out.delta, out.upper_bound_ok,
               out.p1_closed_form, out.route_gap]
        emit(render_csv(header, [row]), args.out)
        return EXIT_OK
    eq = stage2_equilibrium(s, args.c1, args.c2)
    note(f"{eq.region.value}: p1={eq.p1:.6g} p2={eq.p2:.6g} u(c1)={upper_price(s, args.c1):.6g}")
    if args.trace is not None:
        trace = stage2_iterate(s, args.c1, args.c2, p0=tuple(args.trace), method=args.method)
        status = "converged" if trace.converged else f"did not converge (amplitude {trace.amplitude:.3g})"
        note(f"{args.method} dynamics {status} after {trace.iterations_used} steps")
        emit(render_csv(["t", "p1", "p2"], [[t, a, b] for t, (a, b) in enumerate(trace.iterates)]), args.out)
    else:
        header = ["c1", "c2", "region", "p1", "p2", "cutoff_bar", "cutoff_two", "delay_at_p1"]
        row = [args.c1, args.c2, eq.region.value, eq.p1, eq.p2, eq.cutoff_bar, eq.cutoff_two, eq.delay_at_p1]
        emit(render_csv(header, [row]), args.out)
    return EXIT_OK


def write_golden_tables(out: Path, n_jobs: int, seed: int) -> None:
    """Data behind each reproduced figure, one CSV per table."""
    rows = []
    k = 0
    for traffic in TRAFFIC:
        for combo in COMBOS:
            s = preset(f"{combo}-{traffic}")
            for p in checks.DELAY_GRID:
                est = simulate_shared_queue(SimConfig(s.lam * p, s.x, s.y, s.z, n_jobs=n_jobs, seed=seed + k))
                k += 1
                rows.append([f"{combo}-{traffic}", p, mean_delay(s.delay_model, p), est.mean_delay, est.ci_halfwidth])
    (out / "delay.csv").write_text(render_csv(["preset", "p", "T_analytic", "T_sim", "ci_halfwidth"], rows))
    rows = []
    for combo in COMBOS:
        s = checks.light(combo)
        for c in np.linspace(0, s.reward, 101):
            p = equilibrium_shared(s, c).p_star
            rows.append([combo, c, p, c * p, welfare_shared(s, c)])
    (out / "shared_sweep.csv").write_text(render_csv(["preset", "c", "p_star", "revenue", "welfare"], rows))
    rows = []
    for combo in COMBOS:
        s = checks.light(combo)
        rev, soc = revenue_optimal_shared(s), social_optimal_shared(s)
        rows.append([combo, rev.optimal_price, rev.optimal_value, rev.argmax_aux,
                     soc.optimal_price, soc.optimal_value, soc.argmax_aux])
    header = ["preset", "revenue_price", "revenue", "p_star", "social_price", "welfare", "cutoff"]
    (out / "optima.csv").write_text(render_csv(header, rows))
    rows = []
    for combo in COMBOS:
        s = checks.light(combo)
        o = stage1_equilibrium(s)
        rows.append([combo, o.c1_star, o.c2_star, o.p1_circ, o.p2_circ, o.p1_closed_form, o.upper_bound_ok])
    header = ["preset", "c1_star", "c2_star", "p1", "p2", "p1_closed_form", "upper_bound_ok"]
    (out / "stage1.csv").write_text(render_csv(header, rows))


def cmd_validate(args) -> int:
    seed = int(os.environ.get(SEED_ENV, args.seed))
    results = checks.run_all(n_jobs=args.n_jobs, seed=seed)
    report = "\n".join(r.line() for r in results) + "\n"
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        write_golden_tables(out, args.n_jobs, seed)
        (out / "report.txt").write_text(report)
    sys.stdout.write(report)
    failed = [r.criterion for r in results if not r.passed]
    if failed:
        note(f"failed criteria: {', '.join(map(str, failed))}")
        return EXIT_CHECK
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="specmarket", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def scenario_args(p):
        src = p.add_mutually_exclusive_group(required=True)
        src.add_argument("--scenario", help="scenario JSON file")
        src.add_argument("--preset", help=f"named setting: {', '.join(PRESETS)}")
        p.add_argument("--out", help="write the table to this file instead of stdout")

    p = sub.add_parser("delay", help="mean delay over a joining-probability grid")
    scenario_args(p)
    p.add_argument("--p", default="0.1,0.2,0.3,0.4,0.5", help="comma list or lo:hi:n")
    p.add_argument("--simulate", action="store_true", help="add simulated delay with a 99%% CI")
    p.set_defaults(func=cmd_delay)

    p = sub.add_parser("sweep", help="equilibrium, revenue and welfare over prices in [0, V]")
    scenario_args(p)
    p.add_argument("--market", choices=("shared", "exclusive"), default="shared")
    p.add_argument("--grid", type=int, default=101)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("optimize", help="revenue- or welfare-optimal price")
    scenario_args(p)
    p.add_argument("--market", choices=("shared", "exclusive"), default="shared")
    p.add_argument("--objective", choices=("revenue", "social"), default="revenue")
    p.add_argument("--curve", action="store_true", help="emit the sampled objective curve instead")
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("duopoly", help="price equilibrium, or user equilibrium for given prices")
    scenario_args(p)
    p.add_argument("--c1", type=float)
    p.add_argument("--c2", type=float)
    p.add_argument("--trace", type=float, nargs=2, metavar=("P10", "P20"), help="iterate from this start")
    p.add_argument("--method", choices=("static", "adaptive"), default="adaptive")
    p.set_defaults(func=cmd_duopoly)

    p = sub.add_parser("validate", help="run every reference check on the built-in settings")
    p.add_argument("--out", help="directory for the reference tables and report")
    p.add_argument("--n-jobs", type=int, default=500_000, help="simulated jobs per load point")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigurationError, ValueError) as exc:
        note(f"specmarket: error: {exc}")
        return EXIT_USAGE
    except OSError as exc:
        note(f"specmarket: I/O error: {exc}")
        return EXIT_USAGE
    except ConsistencyError as exc:
        note(f"specmarket: internal consistency error: {exc}")
        return EXIT_CHECK


if __name__ == "__main__":
    sys.exit(main())
