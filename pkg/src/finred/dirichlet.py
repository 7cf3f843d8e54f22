"""The same reduction for scalar semilinear Dirichlet problems on rectangles.

Weak solutions of  Delta phi = -V'(phi),  phi = 0 on the boundary, are the
stationary points of  int ( 1/2 |grad phi|^2 - V(phi) ).  On a rectangle
the Laplacian eigenbasis is the explicit tensor sine basis, so the whole
head/tail machinery carries over with the mode eigenvalues

    lambda_k = sum_i (pi k_i / L_i)^2

replacing (pi k / T)^2: the head collects the modes with lambda <= C, the
tail constant is mu = 1 - C / lambda_{N+1}, and the reduced Hessian is the
Schur complement of the tail block.  Dimensions m in {1, 2} are supported.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.fft import dst

from . import core
from .functional import HessianBlocks
from .morse import index_full, index_schur
from .potentials import Potential

__all__ = [
    "RectangleDomain",
    "EigenMode",
    "DirichletPlan",
    "DirichletField",
    "DirichletSolution",
    "enumerate_modes",
    "dirichlet_plan",
    "weyl_estimate",
    "solve_dirichlet",
]

MODE_CAP = 100_000
DEFAULT_MULTISTART_RADIUS = 2.0


@dataclass(frozen=True)
class RectangleDomain:
    """Axis-aligned box (0, L1) x ... x (0, Lm), m in {1, 2}."""

    lengths: tuple

    def __post_init__(self):
        lengths = tuple(float(L) for L in np.atleast_1d(self.lengths))
        if len(lengths) not in (1, 2):
            raise ValueError(f"only 1- and 2-dimensional rectangles are supported, got m={len(lengths)}")
        if any(L <= 0 for L in lengths):
            raise ValueError(f"side lengths must be positive, got {lengths}")
        object.__setattr__(self, "lengths", lengths)

    @property
    def m(self) -> int:
        return len(self.lengths)

    @property
    def volume(self) -> float:
        return float(np.prod(self.lengths))


@dataclass(frozen=True, order=True)
class EigenMode:
    """Laplacian eigenmode: sort key is (eigenvalue, multi-index)."""

    lam: float
    indices: tuple


def mode_eigenvalue(dom: RectangleDomain, indices) -> float:
    return float(sum((math.pi * k / L) ** 2 for k, L in zip(indices, dom.lengths)))


def enumerate_modes(dom: RectangleDomain, lambda_max: float,
                    cap: int = MODE_CAP) -> list[EigenMode]:
    """All modes with eigenvalue <= lambda_max, ascending, ties lexicographic."""
    if lambda_max <= 0:
        raise ValueError(f"lambda_max must be positive, got {lambda_max}")
    kmax = [int(math.floor(L * math.sqrt(lambda_max) / math.pi)) for L in dom.lengths]
    modes = []
    if dom.m == 1:
        for k in range(1, kmax[0] + 1):
            lam = mode_eigenvalue(dom, (k,))
            if lam <= lambda_max:
                modes.append(EigenMode(lam, (k,)))
    else:
        for k1 in range(1, kmax[0] + 1):
            for k2 in range(1, kmax[1] + 1):
                lam = mode_eigenvalue(dom, (k1, k2))
                if lam <= lambda_max:
                    modes.append(EigenMode(lam, (k1, k2)))
    if len(modes) > cap:
        raise ValueError(f"mode list would hold {len(modes)} entries, above the cap {cap}")
    modes.sort()
    return modes


def weyl_estimate(dom: RectangleDomain, C: float) -> tuple[int, float, float]:
    """Exact eigenvalue count below C vs the volume-term asymptotic.

    Returns (exact_count, weyl_count, relative_error) with
    weyl_count = vol(B_m) (2 pi)^{-m} vol(domain) C^{m/2}.
    """
    if C <= 0:
        raise ValueError(f"threshold must be positive, got {C}")
    exact = len(enumerate_modes(dom, C))
    ball = 2.0 if dom.m == 1 else math.pi
    weyl = ball * (2.0 * math.pi) ** (-dom.m) * dom.volume * C ** (dom.m / 2.0)
    rel = abs(exact - weyl) / exact if exact > 0 else math.inf
    return exact, weyl, rel


@dataclass(frozen=True)
class DirichletPlan:
    """Reduction parameters plus the explicit truncated mode list."""

    domain: RectangleDomain
    modes: tuple  # EigenMode, ascending; head = first N entries
    N: int
    mu: float
    contraction: float
    lambda_cut: float
    tail_tol: float
    certified: bool
    c_bound: float
    head_tol: float = 1e-9
    grid_shape: tuple = ()

    def __post_init__(self):
        if not 0.0 < self.mu <= 1.0:
            raise ValueError(f"monotonicity constant must be in (0, 1], got {self.mu}")
        if self.N < 0 or self.N >= len(self.modes):
            raise ValueError(f"head size {self.N} incompatible with {len(self.modes)} modes")


def dirichlet_plan(dom: RectangleDomain, pot: Potential, *,
                   N: int | None = None, lambda_cut: float | None = None,
                   tail_tol: float = 1e-10, head_tol: float = 1e-9,
                   grid_shape: tuple | None = None,
                   allow_uncertified: bool = False) -> DirichletPlan:
    """Eigenvalue-threshold cutoff: head = modes with lambda <= C.

    mu = 1 - C / lambda_{N+1} > 0.  The stored mode set keeps every mode
    with lambda <= lambda_cut (default 4 max(C, lambda_{N+1})); N may be
    overridden upward only.
    """
    if pot.dim != 1:
        raise ValueError(f"Dirichlet problems take scalar potentials, got dimension {pot.dim}")
    C = pot.c_bound
    if not math.isfinite(C):
        raise ValueError("potential curvature bound must be finite")
    if not pot.certified and not allow_uncertified:
        from .reduction import UncertifiedPotentialError
        raise UncertifiedPotentialError(
            "potential curvature bound is not certified "
            f"(source={pot.c_source!r}, unbounded_warning={pot.unbounded_warning}); "
            "pass allow_uncertified=True to proceed at your own risk")

    lam1 = mode_eigenvalue(dom, (1,) * dom.m)
    probe = max(C, lam1) * 4.0 + 1.0
    modes_probe = enumerate_modes(dom, probe)
    n_min = sum(1 for em in modes_probe if em.lam <= C)
    if N is None:
        N = n_min
    elif N < n_min:
        raise ValueError(f"head override {N} is below the certified minimum {n_min}")
    while N >= len(modes_probe):
        probe *= 4.0
        modes_probe = enumerate_modes(dom, probe)
    lam_next = modes_probe[N].lam
    mu = 1.0 - C / lam_next
    if lambda_cut is None:
        lambda_cut = 4.0 * max(C, lam_next)
    if lambda_cut <= lam_next:
        raise ValueError(f"lambda_cut {lambda_cut} leaves no tail modes (lambda_N+1 = {lam_next})")
    modes = tuple(enumerate_modes(dom, lambda_cut))
    if grid_shape is None:
        kmax = _box_extents(modes, dom.m)
        grid_shape = tuple(2 * k + 1 for k in kmax)
    return DirichletPlan(domain=dom, modes=modes, N=int(N), mu=mu, contraction=1.0 - mu,
                         lambda_cut=float(lambda_cut), tail_tol=tail_tol, head_tol=head_tol,
                         certified=pot.certified, c_bound=C, grid_shape=tuple(grid_shape))


def _box_extents(modes, m: int) -> list[int]:
    return [max(em.indices[axis] for em in modes) for axis in range(m)]


@dataclass(frozen=True)
class DirichletField:
    """Scalar field on the rectangle, stored as coefficients on a mode list."""

    domain: RectangleDomain
    modes: tuple
    coeffs: np.ndarray

    def __post_init__(self):
        coeffs = np.asarray(self.coeffs, dtype=float)
        coeffs.flags.writeable = False
        object.__setattr__(self, "coeffs", coeffs)

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        """Field values at points of shape (S, m)."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        out = np.zeros(points.shape[0])
        for em, cm in zip(self.modes, self.coeffs):
            basis = np.ones(points.shape[0])
            for axis, (k, L) in enumerate(zip(em.indices, self.domain.lengths)):
                basis *= math.sqrt(2.0 / L) * np.sin(k * math.pi * points[:, axis] / L)
            out += cm * basis
        return out

    def h1_norm(self) -> float:
        lams = np.array([em.lam for em in self.modes])
        return float(np.sqrt(np.sum(lams * self.coeffs ** 2)))


class DirichletSystem:
    """Tensor sine-Galerkin discretization of the semilinear Dirichlet problem."""

    def __init__(self, dom: RectangleDomain, pot: Potential, plan: DirichletPlan):
        self.dom = dom
        self.pot = pot
        self.plan = plan
        self.modes = plan.modes
        self.m = dom.m
        self.eigenvalues = np.array([em.lam for em in self.modes])
        self.kbox = _box_extents(self.modes, self.m)
        self.P = tuple(plan.grid_shape)
        for axis in range(self.m):
            if self.P[axis] < 2 * self.kbox[axis] + 1:
                raise ValueError(
                    f"grid axis {axis} needs at least {2 * self.kbox[axis] + 1} points, got {self.P[axis]}")
        self.axes = [np.arange(1, P + 1) * L / (P + 1)
                     for P, L in zip(self.P, dom.lengths)]
        # flat scatter/gather between the mode list and the coefficient box
        self._box_index = np.array(
            [np.ravel_multi_index(tuple(k - 1 for k in em.indices), tuple(self.kbox))
             for em in self.modes])
        self._sine = None
        self._gauss = None
        self._const_coeffs = self._constant_coeffs()

    def _constant_coeffs(self) -> np.ndarray:
        out = np.empty(len(self.modes))
        for i, em in enumerate(self.modes):
            val = 1.0
            for k, L in zip(em.indices, self.dom.lengths):
                val *= math.sqrt(2.0 * L) * (1.0 - (-1.0) ** k) / (k * math.pi)
            out[i] = val
        return out

    # -- transforms ----------------------------------------------------------
    def _scatter(self, c: np.ndarray) -> np.ndarray:
        box = np.zeros(int(np.prod(self.kbox)))
        box[self._box_index] = c
        return box.reshape(tuple(self.kbox))

    def sample(self, c: np.ndarray) -> np.ndarray:
        """Field values on the tensor grid, shape self.P."""
        box = self._scatter(c)
        values = box
        for axis in range(self.m):
            pad_shape = list(values.shape)
            pad_shape[axis] = self.P[axis]
            padded = np.zeros(pad_shape)
            sl = [slice(None)] * self.m
            sl[axis] = slice(0, values.shape[axis])
            padded[tuple(sl)] = values
            values = 0.5 * math.sqrt(2.0 / self.dom.lengths[axis]) * dst(padded, type=1, axis=axis)
        return values

    def analyze(self, values: np.ndarray) -> np.ndarray:
        box = values
        for axis in range(self.m):
            L = self.dom.lengths[axis]
            P = self.P[axis]
            box = dst(box, type=1, axis=axis) * (math.sqrt(2.0 * L) / (2.0 * (P + 1)))
            sl = [slice(None)] * self.m
            sl[axis] = slice(0, self.kbox[axis])
            box = box[tuple(sl)]
        return box.reshape(-1)[self._box_index]

    def nonlinear_coeffs(self, c: np.ndarray) -> np.ndarray:
        """Coefficients of V'(phi); the constant boundary part added exactly."""
        phi = self.sample(c)
        F = self.pot.grad(phi[..., None])[..., 0]
        v0 = float(self.pot.grad(np.zeros(1))[0])
        return self.analyze(F - v0) + v0 * self._const_coeffs

    def residual(self, c: np.ndarray) -> np.ndarray:
        return self.eigenvalues * c - self.nonlinear_coeffs(c)

    # -- curvature -------------------------------------------------------------
    def _sine_table(self) -> np.ndarray:
        if self._sine is None:
            weight = 1.0
            axis_tables = []
            for axis in range(self.m):
                L, P = self.dom.lengths[axis], self.P[axis]
                h = L / (P + 1)
                weight *= h
                k = np.arange(1, self.kbox[axis] + 1)
                axis_tables.append(np.sqrt(2.0 / L) * np.sin(np.outer(self.axes[axis], k) * math.pi / L))
            if self.m == 1:
                table = axis_tables[0]
            else:
                table = np.einsum("pa,qb->pqab", axis_tables[0], axis_tables[1])
                table = table.reshape(self.P[0] * self.P[1], self.kbox[0] * self.kbox[1])
            self._sine = math.sqrt(weight) * table[:, self._box_index]
        return self._sine

    def curvature_matrix(self, c: np.ndarray) -> np.ndarray:
        Dn = len(self.modes)
        if self.pot.is_linear():
            return np.zeros((Dn, Dn))
        phi = self.sample(c)
        H = self.pot.hess(phi[..., None])[..., 0, 0].reshape(-1)
        S = self._sine_table()
        return (S * H[:, None]).T @ S

    def hessian_matrix(self, c: np.ndarray) -> np.ndarray:
        K = -self.curvature_matrix(c)
        K[np.diag_indices_from(K)] += self.eigenvalues
        return K

    # -- action -------------------------------------------------------------------
    def _gauss_rule(self):
        if self._gauss is None:
            x, w = np.polynomial.legendre.leggauss(core.GAUSS_NODES_PER_PANEL)
            per_axis = []
            for axis in range(self.m):
                L = self.dom.lengths[axis]
                panels = max(8, int(math.ceil(self.kbox[axis] / 3)))
                edges = np.linspace(0.0, L, panels + 1)
                mid = 0.5 * (edges[:-1] + edges[1:])
                half = 0.5 * (edges[1:] - edges[:-1])
                nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
                weights = (half[:, None] * w[None, :]).ravel()
                k = np.arange(1, self.kbox[axis] + 1)
                basis = np.sqrt(2.0 / L) * np.sin(np.outer(nodes, k) * math.pi / L)
                per_axis.append((nodes, weights, basis))
            self._gauss = per_axis
        return self._gauss

    def action(self, c: np.ndarray) -> float:
        """1/2 sum lambda c^2 minus the Gauss-quadrature integral of V(phi)."""
        kinetic = 0.5 * float(np.sum(self.eigenvalues * c * c))
        rule = self._gauss_rule()
        box = self._scatter(c)
        if self.m == 1:
            _, w0, B0 = rule[0]
            vals = B0 @ box
            potential = float(w0 @ self.pot.eval(vals[:, None]))
        else:
            _, w0, B0 = rule[0]
            _, w1, B1 = rule[1]
            vals = B0 @ box @ B1.T
            potential = float(w0 @ self.pot.eval(vals[..., None]) @ w1)
        return kinetic - potential


@dataclass
class DirichletSolution:
    """One stationary field with residuals and Morse data."""

    head: np.ndarray
    tail: DirichletField
    field: DirichletField
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


def _blocks_at(system: DirichletSystem, head_dim: int, c: np.ndarray) -> HessianBlocks:
    K = system.hessian_matrix(c)
    return HessianBlocks(N=head_dim, M=len(system.modes), n=1,
                         A=K[:head_dim, :head_dim], B=K[:head_dim, head_dim:],
                         D=K[head_dim:, head_dim:])


def _build_solution(system: DirichletSystem, plan: DirichletPlan,
                    res: core.ReducedResult, seed_index: int,
                    with_oracles: bool) -> DirichletSolution:
    c = np.concatenate([res.u, res.v])
    blocks = _blocks_at(system, plan.N, c)
    idx = index_schur(blocks)
    oracle = index_full(blocks).index if with_oracles else None
    tail_coeffs = np.concatenate([np.zeros(plan.N), res.v])
    return DirichletSolution(
        head=res.u.copy(),
        tail=DirichletField(plan.domain, plan.modes, tail_coeffs),
        field=DirichletField(plan.domain, plan.modes, c),
        action=system.action(c),
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


def solve_dirichlet(dom: RectangleDomain, pot: Potential, plan: DirichletPlan,
                    seeds: list[np.ndarray] | None = None, *,
                    count: int = 64, radius: float = DEFAULT_MULTISTART_RADIUS,
                    seed: int | None = None, method: str = "newton",
                    workers: int = 1, refine: bool = True,
                    with_oracles: bool = False,
                    seed_records: list | None = None) -> list[DirichletSolution]:
    """Multistart reduced Newton for the Dirichlet problem; see solve_reduced."""
    from .reduction import DEFAULT_MULTISTART_SEED
    if seed is None:
        seed = DEFAULT_MULTISTART_SEED
    system = DirichletSystem(dom, pot, plan)
    head_dim = plan.N
    if seeds is None:
        seeds = core.draw_seeds(head_dim, count, radius, seed)
    else:
        seeds = [np.asarray(s, dtype=float).reshape(head_dim) for s in seeds]

    results = core.run_seeds(system, head_dim, seeds, workers=workers,
                             head_tol=plan.head_tol, tail_tol=plan.tail_tol,
                             tail_method=method)
    for i, res in enumerate(results):
        res.seed_index = i  # type: ignore[attr-defined]
    if seed_records is not None:
        seed_records.extend(results)
    roots = core.dedup_roots(results)

    solutions = []
    for res in roots:
        seed_index = getattr(res, "seed_index", -1)
        use_plan, use_system, use_res, drift = plan, system, res, None
        if refine:
            use_plan, use_system, use_res, drift = _refine_root(dom, pot, plan, res, method)
        sol = _build_solution(use_system, use_plan, use_res, seed_index, with_oracles)
        sol.truncation_drift = drift
        solutions.append(sol)

    solutions.sort(key=lambda s: (s.action, tuple(s.head)))
    return solutions


def _refine_root(dom: RectangleDomain, pot: Potential, plan: DirichletPlan,
                 res: core.ReducedResult, method: str, max_refinements: int = 2):
    from .reduction import REFINE_DRIFT_TOL
    cur_plan, cur_res = plan, res
    cur_system = DirichletSystem(dom, pot, plan)
    drift = None
    for _ in range(max_refinements):
        fine_plan = dirichlet_plan(dom, pot, N=cur_plan.N,
                                   lambda_cut=4.0 * cur_plan.lambda_cut,
                                   tail_tol=cur_plan.tail_tol, head_tol=cur_plan.head_tol,
                                   allow_uncertified=True)
        fine_system = DirichletSystem(dom, pot, fine_plan)
        fine_res = core.reduced_newton(fine_system, fine_plan.N, cur_res.u,
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
