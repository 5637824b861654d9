"""Command-line surface: tw, solve, mc, and check subcommands.

Each command reads one configuration file (all values defaulted), writes
CSV/JSON results into the output directory, and renders the matching figures
unless the config disables them. Exit codes: 0 success, 2 configuration
problems, 3 solver failures, 4 invariant failures.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import plots
from .config import ConfigError, RunConfig, load_run_config
from .diagnostics import BoundaryExtractionError, check_invariants
from .mc import compare_mc_pde, pde_reference_price, price_bond_mc
from .solver import Grid, SolverError, run_solver
from .wave import build_traveling_wave, tw_derivative, tw_value

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVE = 3
EXIT_INVARIANT = 4


def _fmt(x: float) -> str:
    # 17 significant digits: enough for exact float64 round-trips
    return format(float(x), ".17g")


def _write_csv(path: Path, header, columns):
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in zip(*columns):
            fh.write(",".join(_fmt(x) for x in row) + "\n")


def _write_json(path: Path, data):
    with open(path, "w") as fh:
        json.dump(data, fh, indent=2, sort_keys=True)
        fh.write("\n")


def cmd_tw(cfg: RunConfig, out_dir: Path) -> int:
    """Write the steady profile table (tw.csv), its constants (tw_meta.json),
    and the profile figure."""
    tw = build_traveling_wave(cfg.model)
    # sample the configured count, with the two free boundaries as exact rows
    base = np.linspace(cfg.grid.xi_min, cfg.grid.xi_max,
                       max(2, cfg.tw_samples - 2))
    xs = np.sort(np.concatenate([base, [tw.kappa_star, tw.eta_star]]))
    k = tw_value(tw, xs)
    u_tw = np.exp(xs) * k
    dk = tw_derivative(tw, xs)
    _write_csv(out_dir / "tw.csv", ["xi", "K", "u_tw", "dK"],
               [xs, k, u_tw, dk])
    _write_json(out_dir / "tw_meta.json", {
        "kappa_star": tw.kappa_star,
        "eta_star": tw.eta_star,
        "psi_inv_gamma": tw.separation,
        "c_l": tw.constants.c_l,
        "c_h": tw.constants.c_h,
    })
    if cfg.figures:
        plots.wave_figure(out_dir / "tw.png", xs, k, u_tw,
                          tw.kappa_star, tw.eta_star)
    return EXIT_OK


def cmd_solve(cfg: RunConfig, out_dir: Path) -> int:
    """Run the finite-difference solver; write snapshots, the error series,
    the boundary traces, and the invariant report. Nonzero exit if any
    invariant fails."""
    field = run_solver(cfg.model, cfg.grid, cfg.solver,
                       snapshot_times=cfg.snapshots)
    report = check_invariants(field)

    xi = field.grid.points()
    t_col = np.repeat(field.times, field.grid.n_points)
    xi_col = np.tile(xi, len(field.times))
    _write_csv(out_dir / "snapshots.csv", ["t", "xi", "u"],
               [t_col, xi_col, field.values.ravel()])
    step_times = field.grid.times()
    _write_csv(out_dir / "error.csv", ["t", "sup_error"],
               [step_times, field.errors_vs_wave])
    _write_csv(out_dir / "boundaries.csv", ["t", "kappa_hat", "eta_hat"],
               [field.trace.times, field.trace.kappa_hat,
                field.trace.eta_hat])
    _write_json(out_dir / "diagnostics.json", report.to_dict())
    if cfg.figures:
        plots.snapshots_figure(out_dir / "snapshots.png", field)
        plots.error_figure(out_dir / "error.png", step_times,
                           field.errors_vs_wave)
        plots.boundaries_figure(out_dir / "boundaries.png", field.trace,
                                field.wave.kappa_star, field.wave.eta_star)
    print(report.table())
    return EXIT_OK if report.all_passed else EXIT_INVARIANT


def _mc_grid(cfg: RunConfig) -> Grid:
    # the boundary trace must cover every time-to-maturity the paths can see
    n_steps = max(1, int(math.ceil(cfg.mc.maturity / cfg.grid.dt - 1e-12)))
    return replace(cfg.grid, n_steps=n_steps)


def cmd_mc(cfg: RunConfig, out_dir: Path) -> int:
    """Solve to the Monte Carlo horizon, simulate, and write mc.json with the
    estimate and its distance to the PDE price."""
    grid = _mc_grid(cfg)
    field = run_solver(cfg.model, grid, cfg.solver)
    result = price_bond_mc(cfg.model, field.trace, cfg.mc, tw=field.wave)
    pde_price = pde_reference_price(field, cfg.mc.s0)
    record = compare_mc_pde(result, pde_price)
    _write_json(out_dir / "mc.json", {
        "price": result.price,
        "std_error": result.std_error,
        "n_default": result.n_default,
        "n_migrations": result.n_migrations,
        "n_paths": result.n_paths,
        "pde_price": pde_price,
        "abs_diff": record.abs_diff,
        "rel_diff": record.rel_diff,
        "z_score": record.z_score if math.isfinite(record.z_score) else None,
        "maturity": cfg.mc.maturity,
        "s0": cfg.mc.s0,
        "seed": cfg.mc.seed,
    })
    print(f"mc price = {result.price:.6f} +- {result.std_error:.2e}"
          f"  pde = {pde_price:.6f}  z = {record.z_score:.2f}")
    return EXIT_OK


def cmd_check(cfg: RunConfig, out_dir: Path) -> int:
    """Fresh solve plus the full invariant suite; print the table and gate
    the exit status on it."""
    field = run_solver(cfg.model, cfg.grid, cfg.solver,
                       snapshot_times=cfg.snapshots)
    report = check_invariants(field)
    print(report.table())
    return EXIT_OK if report.all_passed else EXIT_INVARIANT


_COMMANDS = {
    "tw": cmd_tw,
    "solve": cmd_solve,
    "mc": cmd_mc,
    "check": cmd_check,
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="creditmig",
        description="Double free boundary pricing of a defaultable bond "
                    "with credit-rating migration.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in _COMMANDS.items():
        p = sub.add_parser(name, help=fn.__doc__.splitlines()[0])
        p.add_argument("--config", default=None,
                       help="configuration file (INI sections: model, grid, "
                            "solver, mc, output)")
        p.add_argument("--out-dir", default="out",
                       help="directory for CSV/JSON/PNG output")
        p.add_argument("--snapshots", default=None,
                       help="comma-separated times to store solution rows")
        p.add_argument("--seed", type=int, default=None,
                       help="Monte Carlo seed override")
        p.set_defaults(fn=fn)
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = load_run_config(args.config)
        if args.seed is not None:
            cfg = cfg.with_seed(args.seed)
        if args.snapshots is not None:
            try:
                times = [float(tok) for tok in args.snapshots.split(",")]
            except ValueError:
                raise ConfigError(
                    f"--snapshots must be comma-separated numbers, got "
                    f"{args.snapshots!r}") from None
            cfg = cfg.with_snapshots(times)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    try:
        return args.fn(cfg, out_dir)
    except (SolverError, BoundaryExtractionError, ValueError) as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVE


if __name__ == "__main__":
    raise SystemExit(main())
