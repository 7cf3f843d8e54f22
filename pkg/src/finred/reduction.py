"""Certified reduction of the variational problem to finitely many equations.

For a potential with sup |V''| <= C, every mode above the cutoff

    N = floor(T sqrt(C) / pi)

enters a strongly monotone tail problem with constant

    mu = 1 - C T^2 / (pi (N+1))^2  in (0, 1],

so the tail coefficients are a function v(u) of the head u alone, the
fixed-point iteration contracts at rate 1 - mu, and solving the original
problem is exactly equivalent to finding the roots of the reduced head
gradient.  The reduced Hessian used as the Newton Jacobian is the Schur
complement of the tail block and carries the full Morse data.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from . import core
from .core import MechanicalSystem, TailStats
from .fourier import BoundaryProblem, SinePath
from .functional import HessianBlocks
from .morse import index_full, index_schur

__all__ = [
    "ReductionPlan",
    "SolutionReport",
    "UncertifiedPotentialError",
    "make_plan",
    "fixed_point_cutoff",
    "solve_tail",
    "reduced_gradient",
    "reduced_hessian_matrix",
    "solve_reduced",
    "DEFAULT_MULTISTART_SEED",
]

# Documented default seed for multistart draws (hex AC21).
DEFAULT_MULTISTART_SEED = 0xAC21
DEFAULT_MULTISTART_COUNT = 64
DEDUP_TOL = 1e-6
REFINE_DRIFT_TOL = 1e-7


class UncertifiedPotentialError(ValueError):
    """Raised when planning with an uncertified curvature bound without opt-in."""


@dataclass(frozen=True)
class ReductionPlan:
    """Certified reduction parameters for one boundary problem."""

    N: int
    mu: float
    contraction: float  # 1 - mu, the guaranteed Picard rate on the tail
    M: int
    tail_tol: float
    certified: bool
    c_bound: float
    head_tol: float = 1e-9
    quad_points: int = 0  # resolved to >= 2M+1 at construction

    def __post_init__(self):
        if self.N < 0:
            raise ValueError(f"cutoff must be nonnegative, got {self.N}")
        if self.M < self.N + 1:
            raise ValueError(f"truncation must exceed the cutoff, got M={self.M}, N={self.N}")
        if not 0.0 < self.mu <= 1.0:
            raise ValueError(f"monotonicity constant must be in (0, 1], got {self.mu}")
        if self.quad_points and self.quad_points < 2 * self.M + 1:
            raise ValueError(
                f"quadrature needs at least 2M+1 = {2 * self.M + 1} points, got {self.quad_points}")


@dataclass
class SolutionReport:
    """One stationary path with residuals, Morse data and provenance."""

    head: np.ndarray
    tail: SinePath
    path: SinePath
    action: float
    head_residual: float
    tail_residual: float
    index: int
    nullity: int
    certified: bool
    converged: bool
    newton_iterations: int
    tail_iterations: int
    oracle_index: Optional[int] = None
    seed_index: int = -1
    truncation_drift: Optional[float] = None
    residual_history: list = field(default_factory=list)


def cutoff_formula(C: float, T: float) -> int:
    return int(math.floor(T * math.sqrt(C) / math.pi))


def monotonicity_constant(C: float, T: float, N: int) -> float:
    return 1.0 - C * T * T / (math.pi * (N + 1)) ** 2


def make_plan(bp: BoundaryProblem, *, N: int | None = None, M: int | None = None,
              quad_points: int | None = None, tail_tol: float = 1e-10,
              head_tol: float = 1e-9, allow_uncertified: bool = False) -> ReductionPlan:
    """Compute the certified cutoff and tail constants for a problem.

    N defaults to floor(T sqrt(C)/pi) and may only be overridden upward
    (mu is recomputed for the override).  M defaults to max(2N+8, 32).
    Planning with an uncertified bound (sampled estimate or unbounded
    curvature) requires ``allow_uncertified=True``.
    """
    pot = bp.potential
    C = pot.c_bound
    if not math.isfinite(C):
        raise ValueError("potential curvature bound must be finite")
    if not pot.certified and not allow_uncertified:
        raise UncertifiedPotentialError(
            "potential curvature bound is not certified "
            f"(source={pot.c_source!r}, unbounded_warning={pot.unbounded_warning}); "
            "pass allow_uncertified=True to proceed at your own risk")
    n_min = cutoff_formula(C, bp.T)
    if N is None:
        N = n_min
    elif N < n_min:
        raise ValueError(f"cutoff override {N} is below the certified minimum {n_min}")
    mu = monotonicity_constant(C, bp.T, N)
    if M is None:
        M = max(2 * N + 8, 32)
    if quad_points is None:
        quad_points = 2 * M + 1
    return ReductionPlan(N=int(N), mu=mu, contraction=1.0 - mu, M=int(M),
                         tail_tol=tail_tol, head_tol=head_tol,
                         certified=pot.certified, c_bound=C,
                         quad_points=int(quad_points))


def fixed_point_cutoff(c_tilde: float, T: float) -> int:
    """Smallest integer m >= 1 with (c_tilde T / (2 pi m)) (1 + sqrt(2m)) < 1.

    This is the cutoff demanded by the older fixed-point contraction
    criterion; it always exceeds floor(T sqrt(C)/pi), so the monotonicity
    cutoff is the sharper one.
    """
    if c_tilde <= 0 or T <= 0:
        raise ValueError("c_tilde and T must be positive")

    def crit(m: int) -> float:
        return c_tilde * T / (2.0 * math.pi * m) * (1.0 + math.sqrt(2.0 * m))

    if crit(1) < 1.0:
        return 1
    lo, hi = 1, 2
    while crit(hi) >= 1.0:  # crit is strictly decreasing
        lo, hi = hi, hi * 2
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if crit(mid) < 1.0:
            hi = mid
        else:
            lo = mid
    return hi


def _system_for(bp: BoundaryProblem, plan: ReductionPlan) -> MechanicalSystem:
    return MechanicalSystem(bp, plan.M, plan.quad_points or None)


def _tail_path(system: MechanicalSystem, plan: ReductionPlan, v: np.ndarray) -> SinePath:
    flat = np.concatenate([np.zeros(plan.N * system.n), v])
    return SinePath(system.T, system.unflatten(flat))


def solve_tail(bp: BoundaryProblem, plan: ReductionPlan, u: np.ndarray,
               v0: SinePath | None = None, method: str = "newton") -> tuple[SinePath, TailStats]:
    """Tail coefficients v(u) with residual below plan.tail_tol (H10 dual norm).

    Newton (tail curvature block as Jacobian, Picard fallback when a step
    does not decrease the residual) is the default; ``method="picard"``
    runs the bare contraction.
    """
    system = _system_for(bp, plan)
    head_dim = plan.N * system.n
    u = np.asarray(u, dtype=float).reshape(head_dim)
    v_start = None
    if v0 is not None:
        v_start = system.flatten(v0.coeffs)[head_dim:]
    v, stats = core.solve_tail(system, head_dim, u, v0=v_start,
                               tol=plan.tail_tol, method=method)
    return _tail_path(system, plan, v), stats


def reduced_gradient(bp: BoundaryProblem, plan: ReductionPlan, u: np.ndarray,
                     method: str = "newton") -> np.ndarray:
    """Head block of the stationarity residual at u + v(u), L2 convention."""
    system = _system_for(bp, plan)
    head_dim = plan.N * system.n
    u = np.asarray(u, dtype=float).reshape(head_dim)
    v, stats = core.solve_tail(system, head_dim, u, tol=plan.tail_tol, method=method)
    if not stats.converged:
        raise RuntimeError(
            f"tail solve did not reach tolerance {plan.tail_tol} "
            f"(best residual {stats.residuals[-1]:.3e})")
    r = system.residual(np.concatenate([u, v]))
    return r[:head_dim]


def reduced_hessian_matrix(bp: BoundaryProblem, plan: ReductionPlan,
                           u: np.ndarray) -> np.ndarray:
    """Schur complement of the tail block at u + v(u) (the reduced Hessian)."""
    system = _system_for(bp, plan)
    head_dim = plan.N * system.n
    u = np.asarray(u, dtype=float).reshape(head_dim)
    v, _ = core.solve_tail(system, head_dim, u, tol=plan.tail_tol)
    K = system.hessian_matrix(np.concatenate([u, v]))
    A, B, D = core.split_blocks(K, head_dim)
    return core.schur_matrix(A, B, D)


def _blocks_at(system: MechanicalSystem, plan: ReductionPlan, c_flat: np.ndarray) -> HessianBlocks:
    K = system.hessian_matrix(c_flat)
    hd = plan.N * system.n
    return HessianBlocks(N=plan.N, M=plan.M, n=system.n,
                         A=K[:hd, :hd], B=K[:hd, hd:], D=K[hd:, hd:])


def _build_report(bp: BoundaryProblem, plan: ReductionPlan, system: MechanicalSystem,
                  res: core.ReducedResult, seed_index: int,
                  with_oracles: bool) -> SolutionReport:
    c_flat = np.concatenate([res.u, res.v])
    blocks = _blocks_at(system, plan, c_flat)
    idx = index_schur(blocks)
    oracle = None
    if with_oracles:
        oracle = index_full(blocks).index
    return SolutionReport(
        head=res.u.copy(),
        tail=_tail_path(system, plan, res.v),
        path=SinePath(system.T, system.unflatten(c_flat)),
        action=system.action(c_flat),
        head_residual=res.head_residual,
        tail_residual=res.tail_residual,
        index=idx.index,
        nullity=idx.nullity,
        certified=plan.certified,
        converged=res.converged,
        newton_iterations=res.iterations,
        tail_iterations=res.tail_iterations,
        oracle_index=oracle,
        seed_index=seed_index,
        residual_history=list(res.head_history),
    )


def default_radius(bp: BoundaryProblem) -> float:
    return 2.0 * (1.0 + float(np.linalg.norm(bp.qT - bp.q0)))


def solve_reduced(bp: BoundaryProblem, plan: ReductionPlan,
                  seeds: list[np.ndarray] | None = None, *,
                  count: int = DEFAULT_MULTISTART_COUNT,
                  radius: float | None = None,
                  seed: int = DEFAULT_MULTISTART_SEED,
                  method: str = "newton",
                  workers: int = 1,
                  refine: bool = True,
                  with_oracles: bool = False,
                  seed_records: list | None = None) -> list[SolutionReport]:
    """Find stationary paths by damped Newton on the reduced system.

    Seeds default to a multistart draw: the origin plus ``count - 1``
    points uniform in the radius ball (radius 2 (1 + |qT - q0|) unless
    given), from a fixed-seed generator.  Converged roots are
    deduplicated on head distance and each is expanded to a full report;
    with ``refine=True`` every root is re-solved at doubled truncation
    and must reproduce its head to 1e-7 (else the truncation escalates).
    Reports are sorted by action value, then lexicographic head.  When a
    list is passed as ``seed_records`` it receives the raw per-seed solve
    results in seed order (for convergence logging).
    """
    system = _system_for(bp, plan)
    head_dim = plan.N * system.n
    if seeds is None:
        r = default_radius(bp) if radius is None else float(radius)
        seeds = core.draw_seeds(head_dim, count, r, seed)
    else:
        seeds = [np.asarray(s, dtype=float).reshape(head_dim) for s in seeds]

    results = core.run_seeds(system, head_dim, seeds, workers=workers,
                             head_tol=plan.head_tol, tail_tol=plan.tail_tol,
                             tail_method=method)
    for i, res in enumerate(results):
        res.seed_index = i  # type: ignore[attr-defined]
    if seed_records is not None:
        seed_records.extend(results)
    roots = core.dedup_roots(results, tol=DEDUP_TOL)

    reports = []
    for res in roots:
        seed_index = getattr(res, "seed_index", -1)
        use_plan, use_system, use_res, drift = plan, system, res, None
        if refine:
            use_plan, use_system, use_res, drift = _refine_root(bp, plan, res, method)
        report = _build_report(bp, use_plan, use_system, use_res, seed_index, with_oracles)
        report.truncation_drift = drift
        reports.append(report)

    reports.sort(key=lambda rep: (rep.action, tuple(rep.head)))
    return reports


def _refine_root(bp: BoundaryProblem, plan: ReductionPlan, res: core.ReducedResult,
                 method: str, max_refinements: int = 2):
    """Double M until the re-solved head moves less than the drift tolerance."""
    cur_plan, cur_res = plan, res
    cur_system = _system_for(bp, plan)
    drift = None
    for _ in range(max_refinements):
        fine_plan = replace(cur_plan, M=2 * cur_plan.M, quad_points=2 * (2 * cur_plan.M) + 1)
        fine_system = _system_for(bp, fine_plan)
        head_dim = fine_plan.N * fine_system.n
        fine_res = core.reduced_newton(fine_system, head_dim, cur_res.u,
                                       head_tol=fine_plan.head_tol,
                                       tail_tol=fine_plan.tail_tol,
                                       tail_method=method)
        drift = float(np.linalg.norm(fine_res.u - cur_res.u))
        if not fine_res.converged:
            break
        cur_plan, cur_system, cur_res = fine_plan, fine_system, fine_res
        if drift <= REFINE_DRIFT_TOL:
            break
    return cur_plan, cur_system, cur_res, drift
