"""Internal Galerkin engine shared by the mechanical and Dirichlet pipelines.

A "system" exposes the diagonal stiffness of its stored modes plus the
sampled nonlinearity; everything downstream (tail contraction/Newton,
reduced Newton with the Schur-complement Jacobian, multistart) is written
against that surface.  Coefficient vectors are flat, head block first.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .fourier import (BoundaryProblem, affine_coeffs, analyze_values, grid_points,
                      mode_eigenvalues, synthesize_coeffs)

log = logging.getLogger(__name__)

GAUSS_NODES_PER_PANEL = 8


class TruncationError(RuntimeError):
    """Tail curvature block failed to be positive definite."""


@dataclass
class TailStats:
    method: str
    iterations: int = 0
    fallbacks: int = 0
    converged: bool = False
    residuals: list = field(default_factory=list)
    increments: list = field(default_factory=list)  # H1 sizes of Picard steps


@dataclass
class ReducedResult:
    u: np.ndarray
    v: np.ndarray  # tail coefficients (flat, length D - head)
    converged: bool
    iterations: int
    head_residual: float
    tail_residual: float
    head_history: list
    tail_iterations: int


class MechanicalSystem:
    """Sine-Galerkin discretization of the fixed-endpoint action problem."""

    def __init__(self, bp: BoundaryProblem, M: int, quad_points: int | None = None):
        if M < 1:
            raise ValueError(f"truncation must be positive, got {M}")
        P = 2 * M + 1 if quad_points is None else int(quad_points)
        if P < 2 * M + 1:
            raise ValueError(f"quadrature needs P >= 2M+1 = {2 * M + 1}, got {P}")
        self.bp = bp
        self.n = bp.n
        self.M = M
        self.P = P
        self.T = bp.T
        self.mode_eigs = mode_eigenvalues(bp.T, M)  # (M,)
        self.eigenvalues = np.repeat(self.mode_eigs, self.n)  # flat, mode-major
        self.t = grid_points(bp.T, P)
        self.drift_values = bp.drift(self.t)  # (P, n)
        self._sine = None  # (P, M) weighted sine table, built on demand
        self._gauss = None

    # -- flat <-> (M, n) ---------------------------------------------------
    def unflatten(self, c: np.ndarray) -> np.ndarray:
        return np.asarray(c, dtype=float).reshape(self.M, self.n)

    def flatten(self, coeffs: np.ndarray) -> np.ndarray:
        return np.asarray(coeffs, dtype=float).reshape(self.M * self.n)

    # -- transforms ---------------------------------------------------------
    def sample(self, c: np.ndarray) -> np.ndarray:
        return synthesize_coeffs(self.unflatten(c), self.P, self.T)

    def path_values(self, c: np.ndarray) -> np.ndarray:
        return self.drift_values + self.sample(c)

    def nonlinear_coeffs(self, c: np.ndarray) -> np.ndarray:
        """Sine coefficients of t -> V'(path(t)), affine part handled exactly."""
        pot = self.bp.potential
        F = pot.grad(self.path_values(c))  # (P, n)
        a0 = pot.grad(self.bp.q0)
        a1 = pot.grad(self.bp.qT)
        ell = a0[None, :] + np.outer(self.t / self.T, a1 - a0)
        g = (analyze_values(F - ell, self.T, self.M)
             + affine_coeffs(self.T, self.M, a0, (a1 - a0) / self.T))
        return self.flatten(g)

    def residual(self, c: np.ndarray) -> np.ndarray:
        return self.eigenvalues * c - self.nonlinear_coeffs(c)

    # -- curvature -----------------------------------------------------------
    def _sine_table(self) -> np.ndarray:
        if self._sine is None:
            k = np.arange(1, self.M + 1)
            h = self.T / (self.P + 1)
            self._sine = np.sqrt(h * 2.0 / self.T) * np.sin(np.outer(self.t, k) * np.pi / self.T)
        return self._sine

    def curvature_matrix(self, c: np.ndarray) -> np.ndarray:
        """W[a, b] = quadrature of V''(path)_{ij} phi_k phi_l, flat indexing."""
        D = self.M * self.n
        if self.bp.potential.is_linear():
            return np.zeros((D, D))
        H = self.bp.potential.hess(self.path_values(c))  # (P, n, n)
        H = 0.5 * (H + np.swapaxes(H, -1, -2))
        S = self._sine_table()
        W = np.einsum("qk,ql,qij->kilj", S, S, H, optimize=True)
        return W.reshape(D, D)

    def hessian_matrix(self, c: np.ndarray) -> np.ndarray:
        K = -self.curvature_matrix(c)
        K[np.diag_indices_from(K)] += self.eigenvalues
        return K

    # -- action ----------------------------------------------------------------
    def _gauss_rule(self):
        if self._gauss is None:
            panels = max(16, int(np.ceil(self.M / 3)))
            x, w = np.polynomial.legendre.leggauss(GAUSS_NODES_PER_PANEL)
            edges = np.linspace(0.0, self.T, panels + 1)
            mid = 0.5 * (edges[:-1] + edges[1:])
            half = 0.5 * (edges[1:] - edges[:-1])
            nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
            weights = (half[:, None] * w[None, :]).ravel()
            k = np.arange(1, self.M + 1)
            basis = np.sqrt(2.0 / self.T) * np.sin(np.outer(nodes, k) * np.pi / self.T)
            self._gauss = (nodes, weights, basis)
        return self._gauss

    def action(self, c: np.ndarray) -> float:
        """Kinetic part exact in coefficients; potential part by composite Gauss."""
        d = self.bp.qT - self.bp.q0
        kinetic = float(d @ d) / (2.0 * self.T) + 0.5 * float(np.sum(self.eigenvalues * c * c))
        nodes, weights, basis = self._gauss_rule()
        path = self.bp.drift(nodes) + basis @ self.unflatten(c)
        potential = float(weights @ self.bp.potential.eval(path))
        return kinetic - potential


# ---------------------------------------------------------------------------
# residual norms

def tail_residual_norm(system, r: np.ndarray, head_dim: int) -> float:
    """Dual (Riesz) H1 norm of the tail residual: sqrt(sum r^2 / eig)."""
    tail = r[head_dim:]
    return float(np.sqrt(np.sum(tail * tail / system.eigenvalues[head_dim:])))


def head_residual_norm(r: np.ndarray, head_dim: int) -> float:
    return float(np.linalg.norm(r[:head_dim]))


def tail_h1_norm(system, v: np.ndarray, head_dim: int) -> float:
    return float(np.sqrt(np.sum(system.eigenvalues[head_dim:] * v * v)))


# ---------------------------------------------------------------------------
# tail solvers

def solve_tail(system, head_dim: int, u: np.ndarray, v0: np.ndarray | None = None,
               tol: float = 1e-10, method: str = "newton",
               max_newton: int = 50, max_picard: int = 5000) -> tuple[np.ndarray, TailStats]:
    """Solve the tail stationarity equations at frozen head u.

    ``picard`` iterates the contraction v <- g_tail / eig_tail (guaranteed
    rate 1 - mu); ``newton`` uses the tail curvature block as Jacobian and
    falls back to a Picard step whenever a Newton step fails to decrease
    the residual.  Starts from v0 = 0 unless a warm start is given.
    """
    if method not in ("newton", "picard"):
        raise ValueError(f"unknown tail method {method!r}")
    eig_tail = system.eigenvalues[head_dim:]
    tail_len = eig_tail.shape[0]
    u = np.asarray(u, dtype=float)
    v = np.zeros(tail_len) if v0 is None else np.array(v0, dtype=float)
    stats = TailStats(method=method)

    if tail_len == 0:
        stats.converged = True
        return v, stats

    max_iter = max_newton if method == "newton" else max_picard
    for _ in range(max_iter):
        c = np.concatenate([u, v])
        r = system.residual(c)
        res = tail_residual_norm(system, r, head_dim)
        stats.residuals.append(res)
        if res <= tol:
            stats.converged = True
            return v, stats
        stats.iterations += 1
        if method == "picard":
            g = system.nonlinear_coeffs(c)
            v_new = g[head_dim:] / eig_tail
            stats.increments.append(tail_h1_norm(system, v_new - v, head_dim))
            v = v_new
            continue
        # Newton step on the tail block
        K = system.hessian_matrix(c)
        D = K[head_dim:, head_dim:]
        try:
            chol = cho_factor(D, lower=True, check_finite=False)
            step = cho_solve(chol, r[head_dim:], check_finite=False)
        except np.linalg.LinAlgError:
            smallest = float(np.min(np.linalg.eigvalsh(D)))
            raise TruncationError(
                f"tail curvature block is not positive definite "
                f"(smallest eigenvalue {smallest:.3e}); increase the cutoff or truncation")
        v_try = v - step
        r_try = system.residual(np.concatenate([u, v_try]))
        res_try = tail_residual_norm(system, r_try, head_dim)
        if res_try < res:
            v = v_try
            continue
        # contraction step is always safe
        stats.fallbacks += 1
        g = system.nonlinear_coeffs(c)
        v = g[head_dim:] / eig_tail
    # cap exceeded: report best effort
    c = np.concatenate([u, v])
    stats.residuals.append(tail_residual_norm(system, system.residual(c), head_dim))
    return v, stats


# ---------------------------------------------------------------------------
# reduced system

def split_blocks(K: np.ndarray, head_dim: int):
    A = K[:head_dim, :head_dim]
    B = K[:head_dim, head_dim:]
    D = K[head_dim:, head_dim:]
    return A, B, D


def schur_matrix(A: np.ndarray, B: np.ndarray, D: np.ndarray) -> np.ndarray:
    """A - B D^{-1} B^T through a Cholesky factorization of D."""
    if A.shape[0] == 0:
        return A.copy()
    if D.shape[0] == 0:
        return 0.5 * (A + A.T)
    try:
        chol = cho_factor(D, lower=True, check_finite=False)
    except np.linalg.LinAlgError:
        smallest = float(np.min(np.linalg.eigvalsh(D)))
        raise TruncationError(
            f"tail curvature block is not positive definite "
            f"(smallest eigenvalue {smallest:.3e}); increase the cutoff or truncation")
    S = A - B @ cho_solve(chol, B.T, check_finite=False)
    return 0.5 * (S + S.T)


def reduced_newton(system, head_dim: int, u0: np.ndarray,
                   head_tol: float = 1e-9, tail_tol: float = 1e-10,
                   tail_method: str = "newton", max_iter: int = 60,
                   max_halvings: int = 30) -> ReducedResult:
    """Damped Newton on the reduced gradient, Jacobian = Schur complement."""
    u = np.array(u0, dtype=float)
    v = None
    history = []
    tail_total = 0
    hnorm = np.inf
    tstats = TailStats(method=tail_method, converged=True)
    for it in range(max_iter + 1):
        v, tstats = solve_tail(system, head_dim, u, v0=v, tol=tail_tol, method=tail_method)
        tail_total += tstats.iterations
        c = np.concatenate([u, v])
        r = system.residual(c)
        hnorm = head_residual_norm(r, head_dim)
        history.append(hnorm)
        if hnorm <= head_tol and tstats.converged:
            return ReducedResult(u, v, True, it, hnorm,
                                 tail_residual_norm(system, r, head_dim), history, tail_total)
        if it == max_iter or head_dim == 0:
            break
        K = system.hessian_matrix(c)
        A, B, D = split_blocks(K, head_dim)
        S = schur_matrix(A, B, D)
        step = np.linalg.solve(S, r[:head_dim])
        lam = 1.0
        accepted = False
        v_trial = v
        for _ in range(max_halvings + 1):
            u_try = u - lam * step
            v_try, ts = solve_tail(system, head_dim, u_try, v0=v, tol=tail_tol, method=tail_method)
            tail_total += ts.iterations
            r_try = system.residual(np.concatenate([u_try, v_try]))
            if head_residual_norm(r_try, head_dim) < hnorm:
                u, v_trial = u_try, v_try
                accepted = True
                break
            lam *= 0.5
        if not accepted:
            log.debug("reduced Newton stalled at residual %.3e", hnorm)
            break
        v = v_trial
    c = np.concatenate([u, v])
    r = system.residual(c)
    return ReducedResult(u, v, False, len(history) - 1, head_residual_norm(r, head_dim),
                         tail_residual_norm(system, r, head_dim), history, tail_total)


# ---------------------------------------------------------------------------
# multistart

def draw_seeds(head_dim: int, count: int, radius: float, seed: int) -> list[np.ndarray]:
    """Origin plus count-1 points uniform in the radius-ball of R^head_dim."""
    if head_dim == 0:
        return [np.zeros(0)]
    rng = np.random.default_rng(seed)
    seeds = [np.zeros(head_dim)]
    for _ in range(max(0, count - 1)):
        x = rng.standard_normal(head_dim)
        norm = np.linalg.norm(x)
        if norm == 0.0:
            seeds.append(np.zeros(head_dim))
            continue
        r = radius * rng.uniform() ** (1.0 / head_dim)
        seeds.append(r * x / norm)
    return seeds


def run_seeds(system, head_dim: int, seeds, workers: int = 1, **newton_kwargs) -> list[ReducedResult]:
    """Solve every seed; results come back in seed order regardless of scheduling."""
    def solve_one(u0):
        return reduced_newton(system, head_dim, u0, **newton_kwargs)

    if workers <= 1 or len(seeds) <= 1:
        return [solve_one(u0) for u0 in seeds]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(solve_one, seeds))


def dedup_roots(results: list[ReducedResult], tol: float = 1e-6) -> list[ReducedResult]:
    """Drop duplicate converged roots (head distance <= tol), keep best residual."""
    kept: list[ReducedResult] = []
    for res in results:
        if not res.converged:
            continue
        match = None
        for i, other in enumerate(kept):
            if np.linalg.norm(res.u - other.u) <= tol:
                match = i
                break
        if match is None:
            kept.append(res)
        elif res.head_residual < kept[match].head_residual:
            kept[match] = res
    return kept
