"""Command-line entry points: run, check, verify, sweep.

Exit codes: 0 success, 1 configuration error, 2 runtime invariant abort
(partial output is kept), 3 condition-not-satisfied (check only).
"""

from __future__ import annotations

import argparse
import copy
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor

from . import __version__
from .config import ConfigError, build_sim_config, load_config, resolve_config, smallness_params
from .diagnostics import (
    InitialNorms,
    bkm_report,
    bkm_tail_geometric,
    energy_balance_residual,
    fit_decay_rate,
    smallness_gamma0_general,
    smallness_gamma1_2d,
    smallness_gamma1_general,
)
from .dynamics import initial_state, run_simulation
from .fields import lp_norm
from .littlewood_paley import BesovIndex, besov_norm, build_filter_bank
from .verify import run_verification

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_ABORT = 2
EXIT_NOT_SATISFIED = 3


def _fmt(x: float) -> str:
    return f"{x:.16e}"


def csv_columns(n_indices: int) -> list[str]:
    cols = ["t", "l2_u"]
    cols += [f"besov_u_{i}" for i in range(n_indices)]
    cols += ["l2_gradPi"]
    cols += [f"besov_gradPi_{i}" for i in range(n_indices)]
    cols += ["besov_rho_minus_1", "rho_min", "rho_max", "energy", "grad_u_inf", "bkm_running"]
    return cols


def write_records_csv(path: str, records, n_indices: int) -> None:
    with open(path, "w", newline="\n") as out:
        out.write(",".join(csv_columns(n_indices)) + "\n")
        for r in records:
            row = [r.t, r.l2_u, *r.besov_u, r.l2_grad_pi, *r.besov_grad_pi,
                   r.besov_rho_minus_1, r.rho_min, r.rho_max, r.energy,
                   r.grad_u_inf, r.bkm_running]
            out.write(",".join(_fmt(x) for x in row) + "\n")


def initial_norms(config) -> InitialNorms:
    from .fields import ScalarField

    bank = build_filter_bank(config.grid)
    state = initial_state(config)
    b1 = BesovIndex(1.0, math.inf, 1.0)
    rho_m1 = state.rho + ScalarField.constant(config.grid, -1.0)
    return InitialNorms(
        u_besov1=besov_norm(bank, state.u, b1),
        u_l2=lp_norm(state.u, 2),
        rho_besov1=besov_norm(bank, rho_m1, b1),
    )


def condition_reports(config, params) -> list:
    norms = initial_norms(config)
    reports = [smallness_gamma1_general(norms, config.alpha, params)]
    if config.gamma == 1:
        reports.append(smallness_gamma1_2d(norms, config.alpha, params))
    else:
        reports.append(smallness_gamma0_general(norms, config.alpha, params))
    return reports


def governing_report(reports, gamma: int):
    """The report whose verdict decides `check`: the planar condition for
    gamma = 1, the general pair for gamma = 0."""
    wanted = "gamma1_2d" if gamma == 1 else "gamma0_general"
    return next(r for r in reports if r.theorem_id == wanted)


def _fit_or_none(records, attr, index=None):
    series = []
    for r in records:
        value = getattr(r, attr)
        if index is not None:
            value = value[index]
        series.append((r.t, value))
    try:
        fit = fit_decay_rate(series)
    except ValueError:
        return None
    return {"rate": fit.rate, "intercept": fit.intercept,
            "r_squared": fit.r_squared, "window": list(fit.window)}


def build_summary(resolved: dict, config, result) -> dict:
    summary = {
        "version": __version__,
        "config": resolved,
        "completed": not result.failed,
        "failure": result.failure,
        "conditions": [],
        "decay_fits": {},
        "energy_balance_residual": None,
        "bkm": None,
    }
    if config.alpha > 0:
        params = smallness_params(resolved)
        summary["conditions"] = [r.as_dict() for r in condition_reports(config, params)]
    records = result.records
    if len(records) >= 5:
        summary["decay_fits"]["l2_u"] = _fit_or_none(records, "l2_u")
        summary["decay_fits"]["l2_gradPi"] = _fit_or_none(records, "l2_grad_pi")
        for i in range(len(config.besov_indices)):
            summary["decay_fits"][f"besov_u_{i}"] = _fit_or_none(records, "besov_u", i)
    if len(records) >= 3:
        try:
            summary["energy_balance_residual"] = energy_balance_residual(
                records, config.gamma, config.alpha
            )
        except ValueError:
            pass
    if len(records) >= 2:
        integral, increments = bkm_report(records)
        summary["bkm"] = {
            "integral": integral,
            "tail_increments": increments[-10:],
            "tail_geometric": bkm_tail_geometric(increments),
        }
    return summary


def cmd_run(config_path: str, out_dir: str) -> int:
    try:
        resolved = load_config(config_path)
        config = build_sim_config(resolved)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    os.makedirs(out_dir, exist_ok=True)
    result = run_simulation(config)
    write_records_csv(
        os.path.join(out_dir, "records.csv"), result.records, len(config.besov_indices)
    )
    summary = build_summary(resolved, config, result)
    with open(os.path.join(out_dir, "summary.json"), "w") as out:
        json.dump(summary, out, indent=2)
        out.write("\n")
    if result.failed:
        print(f"run aborted: {result.failure}", file=sys.stderr)
        return EXIT_ABORT
    return EXIT_OK


def cmd_check(config_path: str) -> int:
    try:
        resolved = load_config(config_path)
        config = build_sim_config(resolved)
        if config.alpha <= 0:
            raise ConfigError("physics.alpha", "condition check requires alpha > 0")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    params = smallness_params(resolved)
    reports = condition_reports(config, params)
    print(json.dumps([r.as_dict() for r in reports], indent=2))
    verdict = governing_report(reports, config.gamma)
    return EXIT_OK if verdict.satisfied else EXIT_NOT_SATISFIED


def cmd_verify(level: str) -> int:
    checks = run_verification(level)
    width = max(len(c.name) for c in checks)
    all_ok = True
    for c in checks:
        status = "PASS" if c.passed else "FAIL"
        all_ok &= c.passed
        print(f"{c.name:<{width}}  {status}  ({c.seconds:6.2f}s)  {c.detail}")
    print(f"verification {'passed' if all_ok else 'FAILED'} at level {level!r}")
    return EXIT_OK if all_ok else 1


def _set_config_key(doc: dict, dotted: str, value) -> None:
    parts = dotted.split(".")
    node = doc
    for part in parts[:-1]:
        if not isinstance(node, dict) or part not in node:
            raise ConfigError(dotted, "unknown config key")
        node = node[part]
    if not isinstance(node, dict) or parts[-1] not in node:
        raise ConfigError(dotted, "unknown config key")
    node[parts[-1]] = value


def _sweep_worker(args):
    resolved, out_dir = args
    config = build_sim_config(resolved)
    os.makedirs(out_dir, exist_ok=True)
    result = run_simulation(config)
    write_records_csv(
        os.path.join(out_dir, "records.csv"), result.records, len(config.besov_indices)
    )
    summary = build_summary(resolved, config, result)
    with open(os.path.join(out_dir, "summary.json"), "w") as out:
        json.dump(summary, out, indent=2)
        out.write("\n")
    return summary


def cmd_sweep(config_path: str, param: str, values: list, out_dir: str) -> int:
    if not values:
        print("sweep error: empty value list", file=sys.stderr)
        return EXIT_CONFIG
    try:
        resolved = load_config(config_path)
        jobs = []
        for value in values:
            doc = copy.deepcopy(resolved)
            _set_config_key(doc, param, value)
            doc = resolve_config(doc)
            jobs.append((doc, os.path.join(out_dir, f"{param}={value:g}")))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    os.makedirs(out_dir, exist_ok=True)

    workers = os.environ.get("THREADS")
    max_workers = int(workers) if workers else (os.cpu_count() or 1)
    max_workers = max(1, min(max_workers, len(jobs)))
    if max_workers == 1:
        summaries = [_sweep_worker(job) for job in jobs]
    else:
        with ProcessPoolExecutor(max_workers=max_workers) as pool:
            summaries = list(pool.map(_sweep_worker, jobs))

    sweep_summary = {
        "param": param,
        "values": values,
        "runs": {f"{v:g}": s for v, s in zip(values, summaries)},
    }
    with open(os.path.join(out_dir, "sweep_summary.json"), "w") as out:
        json.dump(sweep_summary, out, indent=2)
        out.write("\n")
    failed = any(not s["completed"] for s in summaries)
    return EXIT_ABORT if failed else EXIT_OK


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dampedeuler",
        description="Pseudo-spectral damped variable-density Euler solver",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="integrate one configuration")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--out", required=True)

    p_check = sub.add_parser("check", help="evaluate the smallness conditions")
    p_check.add_argument("--config", required=True)

    p_verify = sub.add_parser("verify", help="run the self-verification suite")
    p_verify.add_argument("--level", choices=("quick", "full"), default="quick")

    p_sweep = sub.add_parser("sweep", help="run one config over a parameter list")
    p_sweep.add_argument("--config", required=True)
    p_sweep.add_argument("--param", required=True, help="dotted config key, e.g. physics.alpha")
    p_sweep.add_argument("--values", required=True, help="comma-separated numbers")
    p_sweep.add_argument("--out", required=True)
    return parser


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    if args.command == "run":
        return cmd_run(args.config, args.out)
    if args.command == "check":
        return cmd_check(args.config)
    if args.command == "verify":
        return cmd_verify(args.level)
    if args.command == "sweep":
        try:
            values = [float(v) for v in args.values.split(",") if v.strip() != ""]
        except ValueError:
            print(f"sweep error: cannot parse values {args.values!r}", file=sys.stderr)
            return EXIT_CONFIG
        return cmd_sweep(args.config, args.param, values, args.out)
    raise AssertionError(f"unhandled command {args.command!r}")


if __name__ == "__main__":
    sys.exit(main())
