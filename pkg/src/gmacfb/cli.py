"""Command-line front end: ``gmacfb {capacity,sweep,depbal,verify}``.

Exit codes: 0 success, 1 a numeric check failed, 2 usage error.
"""
from __future__ import annotations

import argparse
import csv
import math
import os
import sys
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import lemma_verification as lv
from .cutset_bounds import cut_curve, rho_range, three_user_cuts, two_user_cuts
from .dependence_balance import depbal_feasible, dual_bound
from .errors import GMACError
from .gaussian_core import Partition, Unit, build_covariance, mutual_info_all
from .symmetric_capacity import solve_beta

SWEEP_QUANTITIES = ("two_user_cuts", "three_user_cuts", "general_cut", "capacity_vs_P")
SUITES = ("all", "bernoulli", "convexity", "amgm", "oppenheim", "factorization", "lambda_star")
DEFAULT_SEED = 42


def default_seed() -> int:
    value = os.environ.get("GMACFB_SEED")
    if value is None:
        return DEFAULT_SEED
    try:
        return int(value)
    except ValueError:
        raise SystemExit(f"gmacfb: GMACFB_SEED must be an integer, got {value!r}") from None


def _float_list(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _fmt(x: float) -> str:
    return "%.17g" % x


def _rate(value_nats: float, unit: Unit) -> float:
    # signed, so it also converts slacks
    return value_nats if unit is Unit.NATS else value_nats / math.log(2.0)


# ---------------------------------------------------------------- sweeps

@dataclass(frozen=True)
class SweepSpec:
    quantity: str
    start: float
    stop: float
    step: float
    num_users: int | None = None
    power: float | None = None
    k: int | None = None
    unit: Unit = Unit.NATS

    def __post_init__(self):
        if self.quantity not in SWEEP_QUANTITIES:
            raise ValueError(f"unknown sweep quantity {self.quantity!r}")
        if not self.step > 0:
            raise ValueError("step must be positive")
        if self.stop < self.start:
            raise ValueError("empty range: stop < start")
        if self.quantity in ("two_user_cuts", "three_user_cuts", "general_cut"):
            if self.power is None or not self.power > 0:
                raise ValueError("--power must be positive")
        if self.quantity in ("general_cut", "capacity_vs_P"):
            if self.num_users is None or self.num_users < 2:
                raise ValueError("--users must be an integer >= 2")
        if self.quantity == "general_cut" and self.k is not None and not 1 <= self.k <= self.num_users:
            raise ValueError(f"--k must lie in [1, {self.num_users}]")
        if self.quantity == "capacity_vs_P" and not self.start > 0:
            raise ValueError("power range must be positive")
        if self.quantity != "capacity_vs_P":
            J = {"two_user_cuts": 2, "three_user_cuts": 3}.get(self.quantity, self.num_users)
            lo, hi = rho_range(J)
            if self.start < lo - 1e-12 or self.stop > hi + 1e-12:
                raise ValueError(f"rho range must lie in [{lo:.6g}, 1] for J={J}")

    def points(self) -> list[float]:
        n = int(math.floor((self.stop - self.start) / self.step + 1e-9))
        return [round(self.start + i * self.step, 12) for i in range(n + 1)]


def sweep_rows(spec: SweepSpec) -> tuple[list[str], list[list[float]]]:
    """Header and rows (ascending in the swept variable) for a sweep."""
    u = spec.unit
    rows = []
    if spec.quantity == "two_user_cuts":
        header = ["rho", "f1", "f2"]
        for r in spec.points():
            rows.append([r] + [_rate(v, u) for v in two_user_cuts(spec.power, r)])
    elif spec.quantity == "three_user_cuts":
        header = ["rho", "g1", "g2", "g3"]
        for r in spec.points():
            rows.append([r] + [_rate(v, u) for v in three_user_cuts(spec.power, r)])
    elif spec.quantity == "general_cut":
        ks = [spec.k] if spec.k is not None else list(range(1, spec.num_users + 1))
        header = ["rho"] + [f"k{k}" for k in ks]
        for r in spec.points():
            values = cut_curve(spec.num_users, spec.power, r).values
            rows.append([r] + [_rate(values[k - 1], u) for k in ks])
    else:
        header = ["P", "beta_star", "capacity"]
        for p in spec.points():
            sol = solve_beta(spec.num_users, p)
            rows.append([p, sol.beta_star, sol.capacity.to(u).value])
    return header, rows


def write_csv(stream, header: Sequence[str], rows: Sequence[Sequence[float]]) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(x) for x in row])


# ---------------------------------------------------------------- verify suites

def suite_reports(name: str, trials: int, seed: int) -> list[lv.CheckReport]:
    suites: dict[str, Callable[[], list[lv.CheckReport]]] = {
        "bernoulli": lambda: [lv.check_bernoulli_gap(trials=trials)],
        "convexity": lambda: [lv.check_ell_convexity(J, P, trials=trials, seed=seed)
                              for J in (2, 3, 4, 10) for P in (0.3, 1.0, 10.0)],
        "amgm": lambda: [lv.check_amgm_cs(J, P, trials=trials, seed=seed)
                         for J in (3, 4, 5) for P in (0.3, 1.0, 10.0)],
        "oppenheim": lambda: [lv.check_oppenheim_step(trials=trials, seed=seed)],
        "factorization": lambda: [lv.check_factorization_identity(trials=trials, seed=seed)],
        "lambda_star": lambda: [lv.check_lambda_star_positive(trials=trials)],
    }
    names = [s for s in SUITES if s != "all"] if name == "all" else [name]
    out: list[lv.CheckReport] = []
    for n in names:
        out.extend(suites[n]())
    return out


# ---------------------------------------------------------------- commands

def cmd_capacity(args, out) -> int:
    sol = solve_beta(args.users, args.power, tol=args.tol)
    unit = Unit.parse(args.unit)
    print(f"users        {sol.num_users}", file=out)
    print(f"power        {sol.power:.12g}", file=out)
    print(f"beta_star    {sol.beta_star:.12g}", file=out)
    print(f"rho_star     {sol.rho_star:.12g}", file=out)
    print(f"capacity     {sol.capacity.to(unit).value:.12g} {unit.value}", file=out)
    print(f"lambda_star  {sol.lambda_star:.12g}", file=out)
    print(f"residual     {sol.residual:.3e}", file=out)
    print(f"iterations   {sol.iterations}", file=out)
    return 0


def cmd_sweep(args, out) -> int:
    spec = SweepSpec(args.quantity, args.start, args.stop, args.step, num_users=args.users,
                     power=args.power, k=args.k, unit=Unit.parse(args.unit))
    header, rows = sweep_rows(spec)
    if args.out:
        with open(args.out, "w", newline="") as fh:
            write_csv(fh, header, rows)
    else:
        write_csv(out, header, rows)
    return 0


def cmd_depbal(args, out) -> int:
    unit = Unit.parse(args.unit)
    powers = np.asarray(args.powers, dtype=float)
    partition = Partition.parse(args.partition) if args.partition else Partition.singletons(powers.size)
    if args.rho is not None:
        k = build_covariance(powers, np.asarray(args.rho, dtype=float))
        feas = depbal_feasible(k, partition)
        print(f"rho          {','.join('%.12g' % r for r in args.rho)}", file=out)
        print(f"feasible     {str(feas.feasible).lower()}", file=out)
        print(f"slack        {_rate(feas.slack, unit):.12g} {unit.value}", file=out)
        print(f"I(X;Y)       {mutual_info_all(k, unit).value:.12g} {unit.value}", file=out)
    res = dual_bound(powers, partition, unit=unit, seed=args.seed)
    corr = res.K_opt.correlation_vector()
    print(f"partition    {res.partition}", file=out)
    print(f"dual_bound   {res.bound.value:.12g} {unit.value}", file=out)
    print(f"lambda_opt   {res.lambda_opt:.10g}", file=out)
    print(f"K_opt_rho    {','.join('%.6f' % r for r in corr)}", file=out)
    if res.concavity_warning:
        print("warning      dual function not concave on evaluated points", file=out)
    return 0


def cmd_verify(args, out) -> int:
    reports = suite_reports(args.suite, args.trials, args.seed)
    for rep in reports:
        print(rep.summary(), file=out)
    failed = sum(not r.passed for r in reports)
    print(f"{len(reports) - failed}/{len(reports)} checks passed", file=out)
    return 0 if failed == 0 else 1


# ---------------------------------------------------------------- parser

def _positive_float(text: str) -> float:
    try:
        x = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not (x > 0 and math.isfinite(x)):
        raise argparse.ArgumentTypeError(f"power must be positive, got {text}")
    return x


def _users(text: str) -> int:
    try:
        j = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if j < 2:
        raise argparse.ArgumentTypeError("number of users must be >= 2")
    return j


def _positive_list(text: str) -> list[float]:
    values = _float_list(text)
    if len(values) < 2 or any(not (v > 0 and math.isfinite(v)) for v in values):
        raise argparse.ArgumentTypeError("need at least two positive power limits")
    return values


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gmacfb",
                                     description="Feedback sum-rate capacity and bounds for Gaussian MACs.")
    sub = parser.add_subparsers(dest="command", required=True)
    units = [u.value for u in Unit]

    p = sub.add_parser("capacity", help="symmetric feedback sum-rate capacity")
    p.add_argument("--users", "-J", type=_users, required=True)
    p.add_argument("--power", "-P", type=_positive_float, required=True)
    p.add_argument("--unit", choices=units, default="nats")
    p.add_argument("--tol", type=float, default=1e-12)
    p.set_defaults(func=cmd_capacity)

    p = sub.add_parser("sweep", help="sweep a curve and write CSV")
    p.add_argument("quantity", choices=SWEEP_QUANTITIES)
    p.add_argument("--start", type=float, required=True)
    p.add_argument("--stop", type=float, required=True)
    p.add_argument("--step", type=float, required=True)
    p.add_argument("--users", "-J", type=_users)
    p.add_argument("--power", "-P", type=_positive_float)
    p.add_argument("--k", type=int, help="cut size for general_cut (default: all)")
    p.add_argument("--unit", choices=units, default="nats")
    p.add_argument("--out", "-o", help="output CSV path (default: stdout)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("depbal", help="dependence-balance dual bound for arbitrary powers")
    p.add_argument("--powers", type=_positive_list, required=True, help="comma-separated, e.g. 1,4,9")
    p.add_argument("--rho", type=_float_list, help="correlations in upper-triangle order, e.g. 0.5,0.44,0.58")
    p.add_argument("--partition", help='user partition, 1-based, e.g. "{1},{2,3}"')
    p.add_argument("--unit", choices=units, default="nats")
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_depbal)

    p = sub.add_parser("verify", help="run randomized inequality checks")
    p.add_argument("--suite", choices=SUITES, default="all")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--trials", type=int, default=1000)
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv: Sequence[str] | None = None, out=None) -> int:
    out = sys.stdout if out is None else out
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "seed", 0) is None:
        args.seed = default_seed()
    if getattr(args, "trials", 1) < 1:
        parser.error("--trials must be >= 1")
    try:
        if args.command == "sweep":
            try:
                SweepSpec(args.quantity, args.start, args.stop, args.step, num_users=args.users,
                          power=args.power, k=args.k)
            except ValueError as exc:
                parser.error(str(exc))
        if args.command == "depbal" and args.partition:
            try:
                Partition.parse(args.partition)
            except GMACError as exc:
                parser.error(str(exc))
        return args.func(args, out)
    except GMACError as exc:
        print(f"gmacfb: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
