"""Command-line entry point: solve, oracle, sweep, estimate, validate-sim.

Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.
"""
from __future__ import annotations

import argparse
import copy
import csv
import io
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .baselines import OracleTooLargeError, exhaustive_oracle, line_search_uniform
from .model import ScenarioError, mobility_to_dict, scenario_from_dict
from .objective import PartitionMatroid, Placement, cellular_fraction, is_independent
from .sim import TraceError, estimate_rates, read_trace_csv, simulate_offload
from .solver import SolverReport, local_search

log = logging.getLogger("d2dcache")

STRATEGIES = ("local_search", "oracle", "popular", "random")
AXES = ("n_users", "gamma_r", "td")


class UsageError(Exception):
    """Bad input; maps to exit status 2."""


def _load_json(path) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path}: invalid JSON ({exc})") from None


def _scenario(doc: dict):
    try:
        return scenario_from_dict(doc)
    except ScenarioError as exc:
        raise UsageError(f"invalid config: {exc}") from None


def _write(path, text: str) -> None:
    try:
        Path(path).write_text(text)
    except OSError as exc:
        raise RuntimeError(f"cannot write {path}: {exc.strerror}") from None


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _report_output(report: SolverReport, args, strategy: str) -> None:
    _write(args.out, _dump(report.to_dict()))
    placement_out = args.placement_out or str(Path(args.out).with_suffix("")) + ".placement.json"
    _write(placement_out, json.dumps(report.solution.to_json()) + "\n")
    print(f"normalized cost: {report.normalized_cost:.6f}")
    print(f"{strategy},{report.total_cost:.10g},{report.normalized_cost:.10g},{report.g:.10g},{len(report.solution)}")


def cmd_solve(args) -> int:
    scenario = _scenario(_load_json(args.config))
    report = local_search(scenario, best=args.best_improvement)
    _report_output(report, args, "local_search")
    return 0


def cmd_oracle(args) -> int:
    scenario = _scenario(_load_json(args.config))
    try:
        report = exhaustive_oracle(scenario, max_ground=args.max_ground)
    except OracleTooLargeError as exc:
        raise UsageError(str(exc)) from None
    _report_output(report, args, "oracle")
    return 0


def _sweep_doc(doc: dict, axis: str, value: float, seed: int | None) -> dict:
    doc = copy.deepcopy(doc)
    if axis == "n_users":
        if int(value) != value or value < 1:
            raise UsageError(f"n_users value {value!r} is not a positive integer")
        users = doc.get("users")
        if not isinstance(users, dict):
            raise UsageError('sweeping n_users needs "users": {"count": ..., "profile": {...}}')
        users["count"] = int(value)
        mob = doc.get("mobility")
        if not (isinstance(mob, dict) and "gamma" in mob):
            raise UsageError('sweeping n_users needs "mobility": {"gamma": {...}}')
    elif axis == "gamma_r":
        dem = doc.get("demand")
        if not (isinstance(dem, dict) and isinstance(dem.get("zipf"), dict)):
            raise UsageError('sweeping gamma_r needs "demand": {"zipf": {...}}')
        dem["zipf"]["gamma"] = value
    else:
        doc.setdefault("sim", {})
        if not isinstance(doc["sim"], dict):
            raise UsageError("sim must be an object")
        doc["sim"]["td_seconds"] = value
    mob = doc.get("mobility")
    if seed is not None and isinstance(mob, dict) and isinstance(mob.get("gamma"), dict):
        mob["gamma"]["seed"] = seed
    return doc


def _sweep_point(task):
    doc, axis, value, strategies, replications, max_ground, seed = task
    scenario = scenario_from_dict(doc)
    q1 = scenario.q(1.0)
    rows, warnings = [], []
    for strategy in strategies:
        if strategy == "local_search":
            cost = local_search(scenario).total_cost
        elif strategy == "oracle":
            try:
                cost = exhaustive_oracle(scenario, max_ground=max_ground).total_cost
            except OracleTooLargeError as exc:
                warnings.append(f"{axis}={value:g}: oracle skipped: {exc}")
                continue
        else:
            cost = line_search_uniform(scenario, strategy, replications, seed=seed or 0).expected_cost
        rows.append((value, strategy, cost / q1))
    return rows, warnings


def cmd_sweep(args) -> int:
    doc = _load_json(args.config)
    try:
        values = [float(v) for v in args.values.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"--values must be comma-separated numbers, got {args.values!r}") from None
    if not values:
        raise UsageError("--values is empty")
    strategies = [s.strip() for s in args.strategies.split(",") if s.strip()]
    unknown = [s for s in strategies if s not in STRATEGIES]
    if unknown or not strategies:
        raise UsageError(f"unknown strategies {unknown}; choose from {','.join(STRATEGIES)}")
    seed = args.seed
    if seed is None:
        gamma = doc.get("mobility", {}).get("gamma") if isinstance(doc.get("mobility"), dict) else None
        seed = gamma.get("seed", 0) if isinstance(gamma, dict) else 0
    tasks = []
    for value in values:
        point = _sweep_doc(doc, args.axis, value, args.seed)
        _scenario(point)
        tasks.append((point, args.axis, value, strategies, args.replications, args.max_ground, seed))

    if args.workers > 1:
        with ProcessPoolExecutor(args.workers) as pool:
            results = list(pool.map(_sweep_point, tasks))
    else:
        results = [_sweep_point(t) for t in tasks]

    rows = []
    for point_rows, warnings in results:
        for w in warnings:
            log.warning(w)
        rows.extend(point_rows)
    rows.sort(key=lambda r: (r[0], r[1]))
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["axis_value", "strategy", "normalized_cost", "seed"])
    for value, strategy, norm in rows:
        writer.writerow([f"{value:g}", strategy, f"{norm:.10g}", seed])
    if args.out:
        _write(args.out, buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())
    return 0


def cmd_estimate(args) -> int:
    if args.window_start is None or args.window_end is None:
        raise UsageError("--window-start and --window-end are required")
    try:
        trace = read_trace_csv(args.trace, (args.window_start, args.window_end), args.n_users)
        mobility = estimate_rates(trace)
    except TraceError as exc:
        raise UsageError(f"{args.trace}: {exc}") from None
    except OSError as exc:
        raise UsageError(f"cannot read {args.trace}: {exc.strerror}") from None
    text = _dump(mobility_to_dict(mobility, include_zero=True))
    if args.out:
        _write(args.out, text)
    else:
        sys.stdout.write(text)
    return 0


def _load_placement(path, scenario) -> Placement:
    doc = _load_json(path)
    if isinstance(doc, dict) and "solution" in doc:
        doc = doc["solution"]
    if not isinstance(doc, list) or not all(
        isinstance(e, list) and len(e) == 2 and all(isinstance(v, int) and not isinstance(v, bool) for v in e)
        for e in doc
    ):
        raise UsageError(f"{path}: expected a JSON array of [user, file] pairs")
    try:
        y = Placement.from_pairs([tuple(e) for e in doc], scenario.n_users, scenario.n_files)
    except ValueError as exc:
        raise UsageError(f"{path}: {exc}") from None
    if not is_independent(PartitionMatroid.for_scenario(scenario), y):
        raise UsageError(f"{path}: placement exceeds cache quotas")
    return y


def cmd_validate_sim(args) -> int:
    scenario = _scenario(_load_json(args.config))
    y = _load_placement(args.placement, scenario)
    analytic = cellular_fraction(y, scenario.mobility, scenario.demand, scenario.delay_budget_td)
    est = simulate_offload(y, scenario, args.n_requests, args.seed if args.seed is not None else 0)
    ok = est.within(analytic, 3.0)
    print(f"analytic P^c:  {analytic:.6f}")
    print(f"simulated:     {est.fraction:.6f}  (n={est.replications})")
    print(f"std error:     {est.standard_error:.6f}")
    print(f"|diff|/se:     {abs(est.fraction - analytic) / est.standard_error:.3f}" if est.standard_error else "|diff|/se:     n/a")
    print("PASS" if ok else "FAIL")
    return 0 if ok else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="d2dcache", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    for name, func, helptext in (
        ("solve", cmd_solve, "run the two-pass local search"),
        ("oracle", cmd_oracle, "exact optimum by enumeration (small instances)"),
    ):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--config", required=True)
        p.add_argument("--out", required=True, help="report JSON path")
        p.add_argument("--placement-out", help="placement JSON path (default: <out>.placement.json)")
        p.add_argument("--max-ground", type=int, default=20)
        p.add_argument("--best-improvement", action="store_true", help="take the largest-gain move")
        p.set_defaults(func=func)

    p = sub.add_parser("sweep", help="normalized cost of strategies along one scenario axis")
    p.add_argument("--config", required=True)
    p.add_argument("--axis", required=True, choices=AXES)
    p.add_argument("--values", required=True, help="comma-separated axis values")
    p.add_argument("--strategies", default="local_search,popular,random")
    p.add_argument("--replications", type=int, default=20)
    p.add_argument("--seed", type=int)
    p.add_argument("--max-ground", type=int, default=20)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("estimate", help="contact rates from an i,j,t trace CSV")
    p.add_argument("--trace", required=True)
    p.add_argument("--window-start", type=float)
    p.add_argument("--window-end", type=float)
    p.add_argument("--n-users", type=int)
    p.add_argument("--out")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("validate-sim", help="compare analytic and simulated cellular fraction")
    p.add_argument("--config", required=True)
    p.add_argument("--placement", required=True)
    p.add_argument("--n-requests", type=int, default=100_000)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_validate_sim)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    if getattr(args, "replications", 1) < 1:
        parser.error("--replications must be >= 1")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (RuntimeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
