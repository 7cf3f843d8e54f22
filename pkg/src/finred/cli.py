"""Command-line front end: plan, solve, index, weyl.

Input is a sectioned key=value config file (see config module and README);
outputs are CSV artifacts plus a convergence log and a resolved-config
echo, all byte-deterministic for a fixed config and seed.  Verbosity is
controlled by the FINRED_LOG environment variable (debug|info|warning).
"""

from __future__ import annotations

import argparse
import logging
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, RunConfig, load_config, render_config
from .dirichlet import DirichletSolution, dirichlet_plan, solve_dirichlet, weyl_estimate
from .fourier import SinePath
from .functional import hessian_blocks
from .morse import index_full, index_jacobi, index_schur
from .reduction import fixed_point_cutoff, solve_reduced

log = logging.getLogger(__name__)

FLOAT_FMT = ".16e"  # 17 significant digits


def _fmt(x: float) -> str:
    return format(float(x), FLOAT_FMT)


# ---------------------------------------------------------------------------
# plan

def cmd_plan(cfg: RunConfig) -> int:
    plan = cfg.build_plan()
    lines = [f"kind = {cfg.kind}"]
    if cfg.kind == "mechanical":
        bp = cfg.boundary_problem()
        c_tilde = max(1.0, plan.c_bound)
        lines += [
            f"N = {plan.N}",
            f"mu = {plan.mu:.10g}",
            f"kappa = {plan.contraction:.10g}",
            f"M = {plan.M}",
            f"quad_points = {plan.quad_points}",
            f"fixedpoint_N = {fixed_point_cutoff(c_tilde, bp.T)}",
            f"dim_U = {plan.N * bp.n}",
            f"certified = {str(plan.certified).lower()}",
        ]
        if plan.N == 0:
            lines.append("note: reduced system is empty; the straight line is the unique solution candidate")
    else:
        lines += [
            f"N = {plan.N}",
            f"mu = {plan.mu:.10g}",
            f"kappa = {plan.contraction:.10g}",
            f"modes = {len(plan.modes)}",
            f"lambda_cut = {plan.lambda_cut:.10g}",
            f"dim_U = {plan.N}",
            f"certified = {str(plan.certified).lower()}",
        ]
        if plan.N == 0:
            lines.append("note: reduced system is empty; the tail contraction solves the whole problem")
    print("\n".join(lines))
    return 0


# ---------------------------------------------------------------------------
# solve

def _write(path: Path, text: str) -> None:
    path.write_text(text, encoding="utf-8")
    log.info("wrote %s", path)


def _solutions_csv(reports) -> str:
    rows = ["id,action,index,nullity,head_residual,tail_residual,certified"]
    for i, rep in enumerate(reports):
        rows.append(",".join([
            f"{i:03d}", _fmt(rep.action), str(rep.index), str(rep.nullity),
            _fmt(rep.head_residual), _fmt(rep.tail_residual),
            str(rep.certified).lower(),
        ]))
    return "\n".join(rows) + "\n"


def _trajectory_csv(bp, rep, points: int) -> str:
    ts = np.linspace(0.0, bp.T, points)
    gamma = bp.drift(ts) + rep.path.evaluate(ts)
    header = "t," + ",".join(f"gamma_{j + 1}" for j in range(bp.n))
    rows = [header]
    for i, t in enumerate(ts):
        rows.append(",".join([_fmt(t)] + [_fmt(g) for g in gamma[i]]))
    return "\n".join(rows) + "\n"


def _mech_coeffs_csv(rep) -> str:
    n = rep.path.n
    header = "k," + ",".join(f"c_{j + 1}" for j in range(n))
    rows = [header]
    for k in range(rep.path.M):
        rows.append(",".join([str(k + 1)] + [_fmt(v) for v in rep.path.coeffs[k]]))
    return "\n".join(rows) + "\n"


def _field_csv(sol: DirichletSolution, points: int) -> str:
    dom = sol.field.domain
    if dom.m == 1:
        xs = np.linspace(0.0, dom.lengths[0], points)
        vals = sol.field.evaluate(xs[:, None])
        rows = ["x,phi"]
        for x, v in zip(xs, vals):
            rows.append(f"{_fmt(x)},{_fmt(v)}")
    else:
        xs = np.linspace(0.0, dom.lengths[0], points)
        ys = np.linspace(0.0, dom.lengths[1], points)
        X, Y = np.meshgrid(xs, ys, indexing="ij")
        pts = np.stack([X.ravel(), Y.ravel()], axis=-1)
        vals = sol.field.evaluate(pts)
        rows = ["x,y,phi"]
        for (x, y), v in zip(pts, vals):
            rows.append(f"{_fmt(x)},{_fmt(y)},{_fmt(v)}")
    return "\n".join(rows) + "\n"


def _dirichlet_coeffs_csv(sol: DirichletSolution) -> str:
    m = sol.field.domain.m
    header = ("k1,lambda,coeff" if m == 1 else "k1,k2,lambda,coeff")
    rows = [header]
    for em, cm in zip(sol.field.modes, sol.field.coeffs):
        idx = ",".join(str(k) for k in em.indices)
        rows.append(f"{idx},{_fmt(em.lam)},{_fmt(cm)}")
    return "\n".join(rows) + "\n"


def _convergence_log(reports, seed_records) -> str:
    lines = ["# per-seed solves (seed order)"]
    for i, res in enumerate(seed_records):
        lines.append(
            f"seed {i:03d} converged={str(res.converged).lower()} "
            f"newton_iterations={res.iterations} tail_iterations={res.tail_iterations} "
            f"head_residual={_fmt(res.head_residual)} tail_residual={_fmt(res.tail_residual)}")
        if res.head_history:
            lines.append("  head_residual_history: " + " ".join(_fmt(r) for r in res.head_history))
    lines.append("# deduplicated solutions (sorted by action)")
    for i, rep in enumerate(reports):
        lines.append(
            f"solution {i:03d} seed={rep.seed_index} converged={str(rep.converged).lower()} "
            f"newton_iterations={rep.newton_iterations} tail_iterations={rep.tail_iterations} "
            f"head_residual={_fmt(rep.head_residual)} tail_residual={_fmt(rep.tail_residual)}"
            + (f" truncation_drift={_fmt(rep.truncation_drift)}" if rep.truncation_drift is not None else ""))
    return "\n".join(lines) + "\n"


def cmd_solve(cfg: RunConfig) -> int:
    out = Path(cfg.directory)
    out.mkdir(parents=True, exist_ok=True)
    plan = cfg.build_plan()

    seed_records: list = []
    if cfg.kind == "mechanical":
        bp = cfg.boundary_problem()
        cfg.N, cfg.M, cfg.quad_points = plan.N, plan.M, plan.quad_points
        reports = solve_reduced(
            bp, plan, count=cfg.count, radius=cfg.radius, seed=cfg.seed,
            method=cfg.method, workers=cfg.workers, refine=cfg.refine,
            seed_records=seed_records)
        _write(out / "solutions.csv", _solutions_csv(reports))
        for i, rep in enumerate(reports):
            _write(out / f"solution_{i:03d}_trajectory.csv",
                   _trajectory_csv(bp, rep, cfg.trajectory_points))
            _write(out / f"solution_{i:03d}_coeffs.csv", _mech_coeffs_csv(rep))
    else:
        dom, pot = cfg.domain(), cfg.potential()
        cfg.N, cfg.lambda_cut = plan.N, plan.lambda_cut
        radius = cfg.radius if cfg.radius is not None else 2.0
        reports = solve_dirichlet(
            dom, pot, plan, count=cfg.count, radius=radius, seed=cfg.seed,
            method=cfg.method, workers=cfg.workers, refine=cfg.refine,
            seed_records=seed_records)
        _write(out / "solutions.csv", _solutions_csv(reports))
        for i, sol in enumerate(reports):
            _write(out / f"solution_{i:03d}_field.csv", _field_csv(sol, cfg.field_points))
            _write(out / f"solution_{i:03d}_coeffs.csv", _dirichlet_coeffs_csv(sol))

    _write(out / "convergence.log", _convergence_log(reports, seed_records))
    _write(out / "resolved.cfg", render_config(cfg))

    converged = sum(1 for r in reports if r.converged)
    print(f"{converged} solution(s) converged; artifacts in {out}")
    return 0 if converged >= 1 else 2


# ---------------------------------------------------------------------------
# index

def _load_mech_coeffs(path: Path, T: float) -> SinePath:
    rows = path.read_text(encoding="utf-8").strip().splitlines()[1:]
    coeffs = np.array([[float(v) for v in row.split(",")[1:]] for row in rows])
    return SinePath(T, coeffs)


def cmd_index(cfg: RunConfig, solution_id: int) -> int:
    out = Path(cfg.directory)
    coeff_file = out / f"solution_{solution_id:03d}_coeffs.csv"
    if not coeff_file.exists():
        print(f"error: missing artifact {coeff_file}; run 'solve' first", file=sys.stderr)
        return 1

    if cfg.kind == "mechanical":
        bp = cfg.boundary_problem()
        plan = cfg.build_plan()
        path = _load_mech_coeffs(coeff_file, bp.T)
        blocks = hessian_blocks(bp, path, plan.N)
        schur = index_schur(blocks)
        full = index_full(blocks)
        jacobi = index_jacobi(bp, path)
        agree = schur.index == full.index == jacobi.index
        print(f"schur={schur.index} full={full.index} jacobi={jacobi.index} "
              f"{'AGREE' if agree else 'DISAGREE'}")
        if schur.nullity or full.nullity:
            print(f"nullity: schur={schur.nullity} full={full.nullity} (degenerate solution)")
        if jacobi.nullity:
            print(f"warning: variation matrix nearly singular at the right endpoint "
                  f"(margin {jacobi.min_abs_eigenvalue:.3e})")
        return 0 if agree else 1

    # dirichlet: matrix methods only (no time ODE to shoot)
    rows = coeff_file.read_text(encoding="utf-8").strip().splitlines()[1:]
    dom = cfg.domain()
    pot = cfg.potential()
    lam_max = max(float(r.split(",")[-2]) for r in rows)
    plan = dirichlet_plan(dom, pot, N=cfg.N, lambda_cut=lam_max,
                          allow_uncertified=True)
    coeffs = np.array([float(r.split(",")[-1]) for r in rows])
    from .dirichlet import DirichletSystem
    system = DirichletSystem(dom, pot, plan)
    if len(coeffs) != len(plan.modes):
        print(f"error: artifact has {len(coeffs)} modes, plan rebuilt {len(plan.modes)}",
              file=sys.stderr)
        return 1
    from .dirichlet import _blocks_at
    blocks = _blocks_at(system, plan.N, coeffs)
    schur = index_schur(blocks)
    full = index_full(blocks)
    agree = schur.index == full.index
    print(f"schur={schur.index} full={full.index} jacobi=n/a {'AGREE' if agree else 'DISAGREE'}")
    if schur.nullity or full.nullity:
        print(f"nullity: schur={schur.nullity} full={full.nullity} (degenerate solution)")
    return 0 if agree else 1


# ---------------------------------------------------------------------------
# weyl

def cmd_weyl(cfg: RunConfig, c_values: list[float]) -> int:
    dom = cfg.domain() if cfg.kind == "dirichlet" else None
    if dom is None:
        print("error: the weyl command needs a dirichlet config", file=sys.stderr)
        return 1
    print("C,exact_count,weyl_count,relative_error")
    for C in c_values:
        exact, weyl, rel = weyl_estimate(dom, C)
        print(f"{C:g},{exact},{_fmt(weyl)},{_fmt(rel) if math.isfinite(rel) else 'inf'}")
    return 0


# ---------------------------------------------------------------------------
# entry point

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="finred",
        description="Stationary paths and fields by exact finite-dimensional reduction, "
                    "with certified Morse indices.",
        epilog="Set FINRED_LOG=debug|info|warning for log verbosity.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", required=True, help="path to the config file")
        p.add_argument("--out", help="override [output] directory")
        p.add_argument("--seeds", type=int, help="override [multistart] count")
        p.add_argument("--seed", help="override [multistart] seed (accepts hex, e.g. 0xAC21)")
        p.add_argument("--method", choices=("newton", "picard"), help="override tail solver")

    p_plan = sub.add_parser("plan", help="print the certified reduction parameters")
    add_common(p_plan)
    p_solve = sub.add_parser("solve", help="run the solver and write CSV artifacts")
    add_common(p_solve)
    p_index = sub.add_parser("index", help="cross-check Morse indices of a stored solution")
    add_common(p_index)
    p_index.add_argument("solution_id", type=int, help="solution id from solutions.csv")
    p_weyl = sub.add_parser("weyl", help="print the eigenvalue-count table")
    add_common(p_weyl)
    p_weyl.add_argument("--c-values", default="100,1000,10000",
                        help="comma-separated thresholds (default 100,1000,10000)")
    return parser


def main(argv=None) -> int:
    level = {"debug": logging.DEBUG, "info": logging.INFO}.get(
        os.environ.get("FINRED_LOG", "").lower(), logging.WARNING)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")

    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = load_config(Path(args.config).read_text(encoding="utf-8"))
        if args.out:
            cfg.directory = args.out
        if args.seeds:
            cfg.count = args.seeds
        if args.seed:
            cfg.seed = int(args.seed, 0)
        if args.method:
            cfg.method = args.method

        if args.command == "plan":
            return cmd_plan(cfg)
        if args.command == "solve":
            return cmd_solve(cfg)
        if args.command == "index":
            return cmd_index(cfg, args.solution_id)
        if args.command == "weyl":
            c_values = [float(v) for v in args.c_values.split(",")]
            return cmd_weyl(cfg, c_values)
        parser.error(f"unknown command {args.command!r}")
    except (ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
