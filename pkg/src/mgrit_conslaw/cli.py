"""Command-line experiment runner writing CSV results and a JSON run manifest."""

import argparse
import csv
import json
import subprocess
import sys
from pathlib import Path

import numpy as np
from threadpoolctl import threadpool_limits

from . import __version__
from .exact_solutions import error_metrics, exact_space_time
from .grid import BUCKLEY_LEVERETT_MESHES, BURGERS_MESHES, BURGERS_SMOOTH_MESHES
from .linear_testbed import LinearTestConfig, run_linear_mgrit
from .linearization import LinearizationMode
from .outer_solver import SolverConfig, coarse_mesh_for, initial_iterate, outer_solve
from .problems import initial_cell_averages, make_discretization
from .time_integration import time_march

SOLVERS = {"direct": "direct", "mgrit2": "mgrit_two_level", "mgritV": "mgrit_vcycle"}
LINEARIZATIONS = {"newton": "newton_fd", "picard": "picard"}


def _fmt(value):
    return format(float(value), ".17g")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="mgrit-conslaw",
        description="Parallel-in-time solves of 1-D scalar conservation laws.",
    )
    parser.add_argument("--config", type=Path, help="key=value file; command-line flags override it")
    parser.add_argument("--problem", choices=["burgers", "bl"], default="burgers")
    parser.add_argument("--ic", choices=["square", "smooth"], default="square")
    parser.add_argument("--nx", type=int, default=64)
    parser.add_argument("--nt", type=int, help="time points (default: tabulated mesh family)")
    parser.add_argument("--k", type=int, choices=[1, 2], default=1)
    parser.add_argument("--flux", choices=["glf", "llf"], default="llf")
    parser.add_argument("--lin", choices=sorted(LINEARIZATIONS), default="newton")
    parser.add_argument("--solver", choices=sorted(SOLVERS), default="mgrit2")
    parser.add_argument("--m", type=int, default=8)
    parser.add_argument("--tol", type=float, default=1e-10)
    parser.add_argument("--max-iters", type=int, default=20)
    parser.add_argument("--nested", choices=["on", "off"], default="on")
    parser.add_argument("--correction", choices=["on", "off"], default="on",
                        help="truncation-error correction of the coarse propagators")
    parser.add_argument("--s-rk", type=float)
    parser.add_argument("--s-fv", type=float)
    parser.add_argument("--g-norm", choices=["factorial", "linear"], default="factorial")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", type=Path, default=Path("results"))
    parser.add_argument("--threads", type=int, help="cap on BLAS/OpenMP worker threads")
    parser.add_argument("--snapshots", default="0,-1", help="comma-separated time-level indices to save")
    parser.add_argument("--timing", choices=["on", "off"], default="on",
                        help="'off' writes zero wall times so repeated runs are byte-identical")
    parser.add_argument("--suite", choices=["fig3"], help="sweep the tabulated mesh family")
    parser.add_argument("--nx-max", type=int, default=1024, help="largest mesh in a suite sweep")
    linear = parser.add_argument_group("linear testbed")
    linear.add_argument("--linear", action="store_true")
    linear.add_argument("--alpha", choices=["const", "cos2", "sin2moving", "cosxcost"], default="const")
    linear.add_argument("--p", type=int, choices=[1, 3], default=1)
    linear.add_argument("--theta", type=float, default=0.0)
    linear.add_argument("--max-cycles", type=int, default=100)
    return parser


def read_config(path, parser):
    """Turn a key=value file into argv tokens, rejecting unknown keys."""
    known = {a.dest: a for a in parser._actions}
    tokens = []
    for number, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            parser.error(f"{path}:{number}: expected key=value, got {line!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        dest = key.replace("-", "_")
        if dest not in known or dest in ("config", "help"):
            parser.error(f"unknown config key {key!r}")
        flag = "--" + dest.replace("_", "-")
        if isinstance(known[dest], argparse._StoreTrueAction):
            if value.lower() in ("1", "true", "yes", "on"):
                tokens.append(flag)
        else:
            tokens += [flag, value]
    return tokens


def parse_args(argv=None):
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    first = parser.parse_args(argv)
    if first.config is not None:
        return parser.parse_args(read_config(first.config, parser) + argv)
    return first


def git_revision():
    try:
        out = subprocess.run(["git", "rev-parse", "HEAD"], capture_output=True, text=True,
                             cwd=Path(__file__).resolve().parent, check=True)
        return out.stdout.strip()
    except (OSError, subprocess.CalledProcessError):
        return "unknown"


def write_csv(path, header, rows):
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([v if isinstance(v, (str, int, np.integer)) else _fmt(v) for v in row])


def write_history(path, history, timing=True):
    walls = history.wall_ms if timing else [0.0] * len(history.rel_residuals)
    rows = [(i, r, w) for i, (r, w) in enumerate(zip(history.rel_residuals, walls))]
    write_csv(path, ["iter", "rel_residual_2norm", "wall_ms"], rows)


def write_snapshots(path, levels, times, centers, which):
    n_t = levels.shape[0]
    picked = sorted({int(i) % n_t for i in which})
    rows = [(times[n], x, u) for n in picked for x, u in zip(centers, levels[n])]
    write_csv(path, ["t", "x_center", "u"], rows)


def _snapshot_indices(text):
    return [int(tok) for tok in text.split(",") if tok.strip()]


def run_nonlinear(args, out, nx=None, n_t=None):
    nx = nx or args.nx
    cfg = make_discretization(args.problem, args.k, args.flux, nx, n_t or args.nt, args.ic)
    grid = cfg.grid
    scfg = SolverConfig(
        inner=SOLVERS[args.solver], m=args.m, tol=args.tol, max_iters=args.max_iters,
        lin_mode=LinearizationMode(LINEARIZATIONS[args.lin] if args.k == 2 else "exact_k1"),
        correct=args.correction == "on", s_rk=args.s_rk, s_fv=args.s_fv, g_normalization=args.g_norm,
    )
    u0 = initial_cell_averages(args.ic, grid)
    nested = args.nested == "on"
    coarse_grid = coarse_mesh_for(cfg, args.problem, args.ic) if nested else None
    coarse_u0 = initial_cell_averages(args.ic, coarse_grid) if nested else None
    U0 = initial_iterate(u0, cfg, nested, coarse_u0, coarse_grid)
    U, history = outer_solve(U0, u0, cfg, scfg)
    out.mkdir(parents=True, exist_ok=True)
    write_history(out / "history.csv", history, args.timing == "on")
    write_snapshots(out / "snapshots.csv", U, grid.times, grid.cell_centers, _snapshot_indices(args.snapshots))
    if args.problem == "burgers" and args.ic == "square" and history.termination != "diverged":
        sequential = time_march(u0, cfg).levels
        exact = exact_space_time(grid)
        disc = error_metrics(sequential, exact, grid.h)
        alg = error_metrics(U, sequential, grid.h)
        rows = [(t, a, b, c, d) for t, a, b, c, d in zip(
            grid.times, disc.l1_per_level, disc.linf_per_level, alg.l1_per_level, alg.linf_per_level)]
        write_csv(out / "errors.csv", ["t", "l1_discretization", "linf_discretization",
                                       "l1_algebraic", "linf_algebraic"], rows)
    return grid, history


def run_linear(args, out):
    cfg = LinearTestConfig(alpha=args.alpha, p=args.p, flux=args.flux, n_x=args.nx, m=args.m, theta=args.theta)
    E, history = run_linear_mgrit(cfg, seed=args.seed, correct=args.correction == "on",
                                  tol=args.tol, max_cycles=args.max_cycles)
    grid = cfg.grid()
    out.mkdir(parents=True, exist_ok=True)
    write_history(out / "history.csv", history, args.timing == "on")
    write_snapshots(out / "snapshots.csv", E, grid.times, grid.cell_centers, _snapshot_indices(args.snapshots))
    return grid, history


def suite_meshes(args):
    if args.problem == "bl":
        table = BUCKLEY_LEVERETT_MESHES
    else:
        table = BURGERS_SMOOTH_MESHES if args.ic == "smooth" else BURGERS_MESHES
    return [(nx, nt) for nx, nt in sorted(table.items()) if nx <= args.nx_max]


def write_manifest(out, args, results):
    config = {k: (str(v) if isinstance(v, Path) else v) for k, v in sorted(vars(args).items())}
    manifest = {
        "package_version": __version__,
        "git_revision": git_revision(),
        "seed": args.seed,
        "config": config,
        "runs": results,
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _summary(grid, history):
    return {
        "nx": grid.n_x, "nt": grid.n_t, "iterations": history.iterations,
        "termination": history.termination, "final_rel_residual": history.rel_residuals[-1],
    }


def run_experiment(args):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    np.random.seed(args.seed)
    if args.linear:
        results = [_summary(*run_linear(args, out))]
    elif args.suite == "fig3":
        results = []
        for nx, nt in suite_meshes(args):
            grid, history = run_nonlinear(args, out / f"nx{nx}", nx, nt)
            results.append(_summary(grid, history))
        write_csv(out / "summary.csv", ["nx", "nt", "iterations", "termination", "final_rel_residual"],
                  [tuple(r.values()) for r in results])
    else:
        results = [_summary(*run_nonlinear(args, out))]
    write_manifest(out, args, results)
    return results


def main(argv=None):
    args = parse_args(argv)
    try:
        if args.threads is not None:
            with threadpool_limits(limits=args.threads):
                results = run_experiment(args)
        else:
            results = run_experiment(args)
    except ValueError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    for r in results:
        print(f"nx={r['nx']} nt={r['nt']} iterations={r['iterations']} "
              f"termination={r['termination']} rel_residual={r['final_rel_residual']:.3e}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
