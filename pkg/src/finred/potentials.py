"""Potential energies with exact derivatives and a certified curvature bound.

A :class:`Potential` bundles V, V', V'' together with ``c_bound``, a global
bound on the operator norm of V''.  The reduction machinery consumes only
this interface; how the bound was obtained is recorded in ``c_source``:

* ``exact``           -- derived analytically (built-in families),
* ``user_supplied``   -- asserted by the caller,
* ``sampled_estimate``-- 1.25 x the largest Hessian norm seen on a
  deterministic sample grid (a practical fallback, never a proof).

All callables are batched: for points of shape ``(..., n)`` they return
values of shape ``(...)``, gradients ``(..., n)`` and Hessians
``(..., n, n)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import sympy as sp

from . import exprparse
from .exprparse import ExpressionError

__all__ = [
    "Potential",
    "builtin_potential",
    "parse_potential",
    "BUILTIN_FAMILIES",
    "ExpressionError",
]

BUILTIN_FAMILIES = ("zero", "harmonic", "pendulum", "coupled_pendula")

# Deterministic sampling used for estimated curvature bounds: a tensor grid
# with 41 points per axis on [-10, 10] (for n <= 3, else per-axis lines
# through the origin) plus 200 uniform pseudorandom points, seed 20240.
_SAMPLE_SEED = 20240
_SAMPLE_HALF_WIDTH = 10.0
_SAMPLE_AXIS_POINTS = 41
_SAMPLE_RANDOM_POINTS = 200
_SAMPLE_SAFETY = 1.25


@dataclass(frozen=True)
class Potential:
    """Energy V: R^n -> R with exact first/second derivatives.

    ``c_bound`` bounds sup over q of the spectral norm of V''(q) whenever
    ``certified`` is true; otherwise it is a best-effort estimate and every
    downstream report must be flagged accordingly.
    """

    dim: int
    eval: Callable[[np.ndarray], np.ndarray]
    grad: Callable[[np.ndarray], np.ndarray]
    hess: Callable[[np.ndarray], np.ndarray]
    c_bound: float
    c_source: str  # 'exact' | 'user_supplied' | 'sampled_estimate'
    unbounded_warning: bool = False
    label: str = ""
    expression: str = field(default="", compare=False)

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError(f"dimension must be positive, got {self.dim}")
        if not math.isfinite(self.c_bound) or self.c_bound < 0:
            raise ValueError(f"c_bound must be finite and nonnegative, got {self.c_bound}")
        if self.c_source not in ("exact", "user_supplied", "sampled_estimate"):
            raise ValueError(f"unknown c_source {self.c_source!r}")

    @property
    def certified(self) -> bool:
        return self.c_source in ("exact", "user_supplied") and not self.unbounded_warning

    def is_linear(self) -> bool:
        """True when V'' vanishes identically (certified c_bound == 0)."""
        return self.c_bound == 0.0 and self.certified


def _as_points(q: np.ndarray, dim: int) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    if q.shape[-1:] != (dim,):
        raise ValueError(f"points must have trailing dimension {dim}, got shape {q.shape}")
    return q


def builtin_potential(family: str, params=(), dim: int | None = None) -> Potential:
    """Construct a built-in potential with an exact curvature bound.

    Families (q in R^n):

    * ``zero``                    V = 0
    * ``harmonic``                V = 1/2 sum_i w_i^2 q_i^2, params = per-axis
                                  frequencies (single value broadcasts)
    * ``pendulum``                V = -g sum_i cos(q_i), params = (g,)
    * ``coupled_pendula``         V = -g sum_i cos(q_i)
                                  - (kappa/2) sum_i cos(q_i - q_{i+1}),
                                  params = (g, kappa); bound g + 2 kappa
                                  covers the worst chain configuration
    """
    params = tuple(float(p) for p in params)
    if any(not math.isfinite(p) for p in params):
        raise ValueError("potential parameters must be finite")

    if family == "zero":
        n = int(dim) if dim is not None else 1
        if n < 1:
            raise ValueError(f"dimension must be positive, got {n}")
        return Potential(
            dim=n,
            eval=lambda q: np.zeros(np.asarray(q, dtype=float).shape[:-1]),
            grad=lambda q: np.zeros_like(np.asarray(q, dtype=float)),
            hess=lambda q: np.zeros(np.asarray(q, dtype=float).shape + (n,)),
            c_bound=0.0,
            c_source="exact",
            label="zero",
        )

    if family == "harmonic":
        if not params:
            raise ValueError("harmonic potential needs at least one frequency")
        n = int(dim) if dim is not None else len(params)
        if n < 1:
            raise ValueError(f"dimension must be positive, got {n}")
        if len(params) == 1:
            omega = np.full(n, params[0])
        elif len(params) == n:
            omega = np.array(params)
        else:
            raise ValueError(f"harmonic expects 1 or {n} frequencies, got {len(params)}")
        w2 = omega ** 2

        def h_eval(q):
            q = _as_points(q, n)
            return 0.5 * np.sum(w2 * q * q, axis=-1)

        def h_grad(q):
            q = _as_points(q, n)
            return w2 * q

        def h_hess(q):
            q = _as_points(q, n)
            out = np.zeros(q.shape + (n,))
            idx = np.arange(n)
            out[..., idx, idx] = w2
            return out

        return Potential(n, h_eval, h_grad, h_hess,
                         c_bound=float(np.max(w2)), c_source="exact", label="harmonic")

    if family == "pendulum":
        if len(params) != 1:
            raise ValueError("pendulum expects a single parameter g")
        g = params[0]
        if g < 0:
            raise ValueError(f"pendulum strength g must be nonnegative, got {g}")
        n = int(dim) if dim is not None else 1
        if n < 1:
            raise ValueError(f"dimension must be positive, got {n}")

        def p_eval(q):
            q = _as_points(q, n)
            return -g * np.sum(np.cos(q), axis=-1)

        def p_grad(q):
            q = _as_points(q, n)
            return g * np.sin(q)

        def p_hess(q):
            q = _as_points(q, n)
            out = np.zeros(q.shape + (n,))
            idx = np.arange(n)
            out[..., idx, idx] = g * np.cos(q)
            return out

        return Potential(n, p_eval, p_grad, p_hess,
                         c_bound=g, c_source="exact", label="pendulum")

    if family == "coupled_pendula":
        if len(params) != 2:
            raise ValueError("coupled_pendula expects parameters (g, kappa)")
        g, kappa = params
        if g < 0 or kappa < 0:
            raise ValueError(f"coupled_pendula needs g, kappa >= 0, got ({g}, {kappa})")
        n = int(dim) if dim is not None else 2
        if n < 1:
            raise ValueError(f"dimension must be positive, got {n}")

        def c_eval(q):
            q = _as_points(q, n)
            on_site = -g * np.sum(np.cos(q), axis=-1)
            if n == 1:
                return on_site
            diff = q[..., :-1] - q[..., 1:]
            return on_site - 0.5 * kappa * np.sum(np.cos(diff), axis=-1)

        def c_grad(q):
            q = _as_points(q, n)
            out = g * np.sin(q)
            if n > 1:
                s = 0.5 * kappa * np.sin(q[..., :-1] - q[..., 1:])
                out[..., :-1] += s
                out[..., 1:] -= s
            return out

        def c_hess(q):
            q = _as_points(q, n)
            out = np.zeros(q.shape + (n,))
            idx = np.arange(n)
            out[..., idx, idx] = g * np.cos(q)
            if n > 1:
                cdiff = 0.5 * kappa * np.cos(q[..., :-1] - q[..., 1:])
                i = np.arange(n - 1)
                out[..., i, i] += cdiff
                out[..., i + 1, i + 1] += cdiff
                out[..., i, i + 1] -= cdiff
                out[..., i + 1, i] -= cdiff
            return out

        # pair terms contribute at most (kappa/2) * lambda_max(path Laplacian) < 2 kappa
        return Potential(n, c_eval, c_grad, c_hess,
                         c_bound=g + 2.0 * kappa, c_source="exact", label="coupled_pendula")

    raise ValueError(f"unknown potential family {family!r}; choose from {BUILTIN_FAMILIES}")


def _sample_points(dim: int) -> np.ndarray:
    axis = np.linspace(-_SAMPLE_HALF_WIDTH, _SAMPLE_HALF_WIDTH, _SAMPLE_AXIS_POINTS)
    if _SAMPLE_AXIS_POINTS ** dim <= 80_000:
        grids = np.meshgrid(*([axis] * dim), indexing="ij")
        grid_pts = np.stack([g.ravel() for g in grids], axis=-1)
    else:
        # high dimension: axis-aligned lines through the origin
        blocks = []
        for i in range(dim):
            pts = np.zeros((_SAMPLE_AXIS_POINTS, dim))
            pts[:, i] = axis
            blocks.append(pts)
        grid_pts = np.concatenate(blocks, axis=0)
    rng = np.random.default_rng(_SAMPLE_SEED)
    rand_pts = rng.uniform(-_SAMPLE_HALF_WIDTH, _SAMPLE_HALF_WIDTH, (_SAMPLE_RANDOM_POINTS, dim))
    return np.concatenate([grid_pts, rand_pts], axis=0)


def hessian_norms(pot_hess: Callable, points: np.ndarray) -> np.ndarray:
    """Spectral norm of the (symmetrized) Hessian at each sample point."""
    H = pot_hess(points)
    H = 0.5 * (H + np.swapaxes(H, -1, -2))
    return np.max(np.abs(np.linalg.eigvalsh(H)), axis=-1)


def _batched_scalar(fn: Callable, dim: int) -> Callable:
    def wrapped(q):
        q = _as_points(q, dim)
        cols = [q[..., i] for i in range(dim)]
        out = fn(*cols)
        return np.broadcast_to(np.asarray(out, dtype=float), q.shape[:-1]).copy()
    return wrapped


def parse_potential(expr: str, dim: int, c_bound: float | None = None) -> Potential:
    """Build a Potential from an expression in q1..q{dim}.

    Derivatives are exact (symbolic differentiation, then compiled to
    vectorized numpy).  Without ``c_bound`` the curvature bound is a
    sampled estimate; expressions whose curvature cannot be certified as
    globally bounded (polynomial degree > 2, transcendentals of nonlinear
    arguments) additionally carry ``unbounded_warning``.
    """
    if dim < 1:
        raise ValueError(f"dimension must be positive, got {dim}")
    ast = exprparse.parse(expr, dim)
    symbols = [sp.Symbol(f"q{i + 1}", real=True) for i in range(dim)]
    sym = exprparse.to_sympy(ast, symbols)

    eval_fns = _batched_scalar(sp.lambdify(symbols, sym, modules="numpy"), dim)
    grad_syms = [sp.diff(sym, s) for s in symbols]
    grad_fns = [_batched_scalar(sp.lambdify(symbols, g, modules="numpy"), dim) for g in grad_syms]
    hess_fns = [[_batched_scalar(sp.lambdify(symbols, sp.diff(g, s), modules="numpy"), dim)
                 for s in symbols] for g in grad_syms]

    def p_grad(q):
        q = _as_points(q, dim)
        return np.stack([f(q) for f in grad_fns], axis=-1)

    def p_hess(q):
        q = _as_points(q, dim)
        rows = [np.stack([hess_fns[i][j](q) for j in range(dim)], axis=-1) for i in range(dim)]
        return np.stack(rows, axis=-2)

    degree = exprparse.growth_degree(ast)
    unbounded = degree > 2.0

    if c_bound is not None:
        if not math.isfinite(c_bound) or c_bound < 0:
            raise ValueError(f"c_bound must be finite and nonnegative, got {c_bound}")
        bound, source = float(c_bound), "user_supplied"
    else:
        norms = hessian_norms(p_hess, _sample_points(dim))
        bound, source = _SAMPLE_SAFETY * float(np.max(norms)), "sampled_estimate"

    return Potential(dim, eval_fns, p_grad, p_hess,
                     c_bound=bound, c_source=source,
                     unbounded_warning=unbounded,
                     label="expression", expression=exprparse.pretty(ast))
