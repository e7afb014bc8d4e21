"""Command-line front end: CDF/PDF grids, sweeps, and simulation validation.

Three subcommands:

* ``solve``    -- evaluate the stationary distribution on an x-grid and emit
  CSV or JSON (plus mean, scalar mixture, residual report on request).
* ``validate`` -- compare the analytic CDF and mean against an independent
  discrete-event simulation; exit 4 when any z-score exceeds 4.
* ``sweep``    -- vary one parameter over a range and emit one metric row per
  value; invalid points get a status column instead of aborting the sweep.

Exit codes: 0 ok, 2 validation failure, 3 numerical failure, 4 statistical
mismatch.  Equal rates route to the Erlang-C reduction.  ``VQT_THREADS``
caps sweep/grid parallelism (0 or unset = auto).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import solver
from .errors import NumericalError, Unstable, ValidationError
from .model import inspect_params, validate_params
from .reference import erlang_c
from .simulator import SimConfig, simulate_replicated

__all__ = ["main", "run_solve", "run_validate", "run_sweep", "GridSpec",
           "OutputRecord"]

_EXIT_VALIDATION = 2
_EXIT_NUMERICAL = 3
_EXIT_STATISTICAL = 4


def _fmt(x: float) -> str:
    return f"{x:.15g}"


def _threads() -> int:
    raw = os.environ.get("VQT_THREADS", "0")
    try:
        n = int(raw)
    except ValueError:
        n = 0
    return n if n > 0 else (os.cpu_count() or 1)


def _add_model_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--c", type=int, required=True, help="number of servers")
    p.add_argument("--lambda", dest="lam", type=float, required=True,
                   help="arrival rate")
    p.add_argument("--mu1", type=float, required=True,
                   help="service rate for delays <= k")
    p.add_argument("--mu2", type=float, required=True,
                   help="service rate for delays > k")
    p.add_argument("--k", type=float, required=True, help="delay threshold")


def _add_grid_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--grid-max", type=float, default=None,
                   help="largest x on the grid (default 10*k)")
    p.add_argument("--grid-points", type=int, default=400)
    p.add_argument("--spacing", choices=("linear", "log"), default="linear")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--out", default=None, help="output path (default stdout)")
    p.add_argument("--mean", action="store_true", help="also report E[W]")
    p.add_argument("--mixture", action="store_true",
                   help="also report the scalar exponential terms")
    p.add_argument("--verify", action="store_true",
                   help="append the residual report")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="vqt",
        description="Stationary virtual-queueing-time distribution of an "
                    "M/M/c queue whose service rate switches at a delay "
                    "threshold.",
    )
    sub = p.add_subparsers(dest="command", required=True)

    ps = sub.add_parser("solve", help="emit CDF/PDF on a grid")
    _add_model_flags(ps)
    _add_grid_flags(ps)

    pv = sub.add_parser("validate", help="cross-check against simulation")
    _add_model_flags(pv)
    pv.add_argument("--events", type=int, default=1_000_000,
                    help="arrivals per replication")
    pv.add_argument("--seed", type=int, default=20260810)
    pv.add_argument("--replications", type=int, default=4)
    pv.add_argument("--grid", default=None,
                    help="comma-separated comparison points")
    pv.add_argument("--out", default=None)

    pw = sub.add_parser("sweep", help="vary one parameter, one row per value")
    _add_model_flags(pw)
    pw.add_argument("--sweep", required=True,
                    help="param=start:stop:steps with param one of "
                         "lambda, mu1, mu2, k, c")
    pw.add_argument("--metrics", default="mean",
                    help="comma list: mean, p_wait, cdf@X")
    pw.add_argument("--out", default=None)
    return p


@dataclass(frozen=True)
class GridSpec:
    """Evaluation grid; the threshold is always injected as an exact point."""

    x_max: float
    points: int
    spacing: str = "linear"

    def build(self, k: float) -> np.ndarray:
        if self.points < 2:
            raise ValidationError("grid needs at least 2 points")
        if self.x_max <= 0:
            raise ValidationError("grid-max must be > 0")
        if self.spacing == "linear":
            grid = np.linspace(0.0, self.x_max, self.points)
        else:
            grid = np.geomspace(self.x_max * 1e-3, self.x_max, self.points)
        if k <= self.x_max:
            grid = np.unique(np.concatenate([grid, [k]]))
            # drop near-duplicates of the injected threshold point
            keep = (np.abs(grid - k) > 1e-12 * max(k, 1.0)) | (grid == k)
            grid = grid[keep]
        return grid


@dataclass(frozen=True)
class OutputRecord:
    """One emitted grid row."""

    x: float
    components: np.ndarray | None   # None on the Erlang route
    cdf: float
    pdf: float


def _solve_or_route(args) -> tuple[object, str]:
    """Return (solution, model_tag); equal rates go to the Erlang reduction."""
    if args.mu1 == args.mu2:
        params = inspect_params(args.c, args.lam, args.mu1, args.mu2, args.k)
        if not params.stable:
            raise Unstable(f"lambda/(c*mu2) = {params.rho:.6g} >= 1")
        return erlang_c(params), "erlang_c"
    params = validate_params(args.c, args.lam, args.mu1, args.mu2, args.k)
    return solver.solve(params), "threshold"


def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w") as fh:
            fh.write(text)


def run_solve(args) -> int:
    sol, model = _solve_or_route(args)
    spec = GridSpec(
        x_max=10.0 * args.k if args.grid_max is None else args.grid_max,
        points=args.grid_points,
        spacing=args.spacing,
    )
    grid = spec.build(args.k)

    if model == "erlang_c":
        rows = [OutputRecord(x, None, sol.cdf(x), sol.density(x)) for x in grid]
        mean = sol.mean() if args.mean else None
        payload_extra = {"model": "erlang_c", "p_wait": sol.c_prob}
        pi_nested = None
        b_c = None
    else:
        rows = []
        for x in grid:
            comps, total = solver.eval_cdf(sol, x)
            rows.append(OutputRecord(
                x, comps, total, float(solver.eval_density(sol, x).sum())))
        mean = solver.mean_wait(sol) if args.mean else None
        payload_extra = {"model": "threshold"}
        pi_nested = [
            [max(sol.pi(i, j), 0.0) if sol.pi(i, j) > -1e-8 else sol.pi(i, j)
             for j in range(args.c - i)]
            for i in range(args.c)
        ]
        b_c = sol.b_c

    if args.format == "csv":
        lines = []
        if model == "erlang_c":
            lines.append("# model=erlang_c")
            lines.append("x,cdf,pdf")
            for r in rows:
                lines.append(f"{_fmt(r.x)},{_fmt(r.cdf)},{_fmt(r.pdf)}")
        else:
            header = ",".join(f"F_{i}" for i in range(args.c))
            lines.append(f"x,{header},cdf,pdf")
            for r in rows:
                comp_txt = ",".join(_fmt(v) for v in r.components)
                lines.append(f"{_fmt(r.x)},{comp_txt},{_fmt(r.cdf)},{_fmt(r.pdf)}")
        if mean is not None:
            lines.append(f"# mean={_fmt(mean)}")
        if args.mixture and model == "threshold":
            mix = solver.scalar_mixture(sol)
            for branch, terms, const in (
                ("below", mix.lower_terms, mix.lower_constant),
                ("above", mix.upper_terms, mix.upper_constant),
            ):
                for t in terms:
                    w = ";".join(_fmt(v) for v in t.weights)
                    lines.append(f"# mixture,{branch},rate={_fmt(t.rate)},weights={w}")
                w = ";".join(_fmt(v) for v in const)
                lines.append(f"# mixture,{branch},constant,weights={w}")
        if args.verify and model == "threshold":
            rep = solver.verify_solution(sol)
            for name, value in rep.residuals.items():
                lines.append(f"# residual,{name},{_fmt(value)}")
            for w in rep.warnings:
                lines.append(f"# warning,{w}")
        _emit("\n".join(lines) + "\n", args.out)
        return 0

    payload = {
        "params": {"c": args.c, "lambda": args.lam, "mu1": args.mu1,
                   "mu2": args.mu2, "k": args.k},
        **payload_extra,
        "grid": [float(r.x) for r in rows],
        "cdf": [float(r.cdf) for r in rows],
        "pdf": [float(r.pdf) for r in rows],
    }
    if model == "threshold":
        payload["pi"] = pi_nested
        payload["b_c"] = b_c
        payload["components"] = [[float(v) for v in r.components] for r in rows]
        payload["warnings"] = list(sol.warnings)
    if mean is not None:
        payload["mean"] = mean
    if args.mixture and model == "threshold":
        mix = solver.scalar_mixture(sol)
        payload["mixture"] = {
            "below": {
                "terms": [{"rate": t.rate, "weights": list(map(float, t.weights))}
                          for t in mix.lower_terms],
                "constant": list(map(float, mix.lower_constant)),
            },
            "above": {
                "terms": [{"rate": t.rate, "weights": list(map(float, t.weights))}
                          for t in mix.upper_terms],
                "constant": list(map(float, mix.upper_constant)),
                "rate_offset": mix.k,
            },
        }
    if args.verify and model == "threshold":
        payload["residuals"] = solver.verify_solution(sol).residuals
    _emit(json.dumps(payload, indent=1) + "\n", args.out)
    return 0


def _default_validate_grid(k: float) -> tuple[float, ...]:
    return tuple(k * f for f in (0.25, 0.5, 0.75, 1.0, 1.5, 2.0, 3.0, 4.0))


def run_validate(args) -> int:
    sol, model = _solve_or_route(args)
    grid = (tuple(float(v) for v in args.grid.split(","))
            if args.grid else _default_validate_grid(args.k))
    params = inspect_params(args.c, args.lam, args.mu1, args.mu2, args.k)
    est = simulate_replicated(params, SimConfig(
        num_arrivals=args.events, seed=args.seed,
        grid=tuple(sorted(grid)), replications=args.replications,
    ))

    if model == "erlang_c":
        analytic = [sol.cdf(x) for x in sorted(grid)]
        mean = sol.mean()
    else:
        analytic = [solver.eval_cdf(sol, x)[1] for x in sorted(grid)]
        mean = solver.mean_wait(sol)

    lines = ["x,analytic_cdf,sim_cdf,half_width,z"]
    worst = 0.0
    for x, ref, e in zip(sorted(grid), analytic, est.cdf_points):
        z = (e.value - ref) / (e.half_width / 1.96)
        worst = max(worst, abs(z))
        lines.append(f"{_fmt(x)},{_fmt(ref)},{_fmt(e.value)},"
                     f"{_fmt(e.half_width)},{z:+.3f}")
    zm = (est.mean_wait.value - mean) / (est.mean_wait.half_width / 1.96)
    worst = max(worst, abs(zm))
    lines.append(f"# mean analytic={_fmt(mean)} sim={_fmt(est.mean_wait.value)} "
                 f"half_width={_fmt(est.mean_wait.half_width)} z={zm:+.3f}")
    for w in est.warnings:
        lines.append(f"# warning,{w}")
    _emit("\n".join(lines) + "\n", args.out)
    return 0 if worst <= 4.0 else _EXIT_STATISTICAL


def _sweep_values(spec: str) -> tuple[str, list[float]]:
    try:
        name, rng = spec.split("=", 1)
        start, stop, steps = rng.split(":")
        values = np.linspace(float(start), float(stop), int(steps))
    except ValueError as exc:
        raise ValidationError(f"bad --sweep spec {spec!r}") from exc
    name = name.strip()
    if name not in ("lambda", "mu1", "mu2", "k", "c"):
        raise ValidationError(f"cannot sweep {name!r}")
    return name, [float(v) for v in values]


def _sweep_point(base: dict, name: str, value: float, metrics: list[str]):
    point = dict(base)
    point[name] = int(round(value)) if name == "c" else value
    row = {"value": value, "status": "ok"}
    try:
        if point["mu1"] == point["mu2"]:
            params = inspect_params(point["c"], point["lambda"], point["mu1"],
                                    point["mu2"], point["k"])
            if not params.stable:
                raise Unstable("unstable")
            ref = erlang_c(params)
            row["status"] = "erlang_c"
            evals = {"mean": ref.mean, "p_wait": lambda: ref.c_prob,
                     "cdf": ref.cdf}
        else:
            params = validate_params(point["c"], point["lambda"], point["mu1"],
                                     point["mu2"], point["k"])
            sol = solver.solve(params)
            evals = {"mean": lambda: solver.mean_wait(sol),
                     "p_wait": lambda: 1.0 - sol.p_wait_zero,
                     "cdf": lambda x: solver.eval_cdf(sol, x)[1]}
        for metric in metrics:
            if metric.startswith("cdf@"):
                row[metric] = evals["cdf"](float(metric[4:]))
            else:
                row[metric] = evals[metric]()
    except ValidationError as exc:
        row["status"] = type(exc).__name__.lower()
        for metric in metrics:
            row[metric] = None
    return row


def run_sweep(args) -> int:
    name, values = _sweep_values(args.sweep)
    metrics = [m.strip() for m in args.metrics.split(",") if m.strip()]
    for m in metrics:
        if m not in ("mean", "p_wait") and not m.startswith("cdf@"):
            raise ValidationError(f"unknown metric {m!r}")
    base = {"c": args.c, "lambda": args.lam, "mu1": args.mu1,
            "mu2": args.mu2, "k": args.k}

    workers = min(_threads(), len(values))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(
                lambda v: _sweep_point(base, name, v, metrics), values))
    else:
        rows = [_sweep_point(base, name, v, metrics) for v in values]

    if all(row["status"] not in ("ok", "erlang_c") for row in rows):
        raise ValidationError("every sweep point is invalid")

    lines = [f"{name},status," + ",".join(metrics)]
    for row in rows:
        cells = [_fmt(row["value"]), row["status"]]
        cells += ["" if row[m] is None else _fmt(row[m]) for m in metrics]
        lines.append(",".join(cells))
    _emit("\n".join(lines) + "\n", args.out)
    return 0


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    handler = {"solve": run_solve, "validate": run_validate, "sweep": run_sweep}
    try:
        return handler[args.command](args)
    except ValidationError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return _EXIT_VALIDATION
    except NumericalError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return _EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
