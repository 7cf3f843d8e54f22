"""Action functional on the loop space: values, gradient, truncated Hessian.

Two gradient conventions are exposed and every solver contract states
which one it uses:

* ``euler_lagrange`` -- residual coefficients r^(k) = (pi k/T)^2 c^(k) - g^(k)
  with g the sine coefficients of V' along the embedded path (L2 pairing);
* ``riesz_h1``       -- the H10 Riesz representative, mode k divided by
  (pi k/T)^2.

Hessian blocks default to the L2 coefficient convention, in which the
free (V = 0) operator is the diagonal (pi k/T)^2.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import MechanicalSystem
from .fourier import BoundaryProblem, SinePath, mode_eigenvalues

__all__ = ["HessianBlocks", "action_value", "gradient", "hessian_blocks"]


@dataclass(frozen=True)
class HessianBlocks:
    """Second-variation matrix partitioned at mode N into head/tail blocks.

    ``A`` is the head block (nN x nN), ``D`` the tail block, ``B`` couples
    head rows to tail columns; the full matrix is [[A, B], [B^T, D]].
    """

    N: int
    M: int
    n: int
    A: np.ndarray
    B: np.ndarray
    D: np.ndarray
    metric: str = "l2_coeff"  # 'l2_coeff' | 'h1_coeff'

    def full(self) -> np.ndarray:
        top = np.hstack([self.A, self.B])
        bottom = np.hstack([self.B.T, self.D])
        return np.vstack([top, bottom])

    def to_h1(self, T: float) -> "HessianBlocks":
        """Congruence by the positive diagonal mapping to H1-orthonormal modes."""
        if self.metric == "h1_coeff":
            return self
        eig = np.repeat(mode_eigenvalues(T, self.M), self.n)
        scale = 1.0 / np.sqrt(eig)
        hd = self.N * self.n
        K = self.full() * scale[:, None] * scale[None, :]
        return HessianBlocks(self.N, self.M, self.n,
                             A=K[:hd, :hd], B=K[:hd, hd:], D=K[hd:, hd:],
                             metric="h1_coeff")


def action_value(bp: BoundaryProblem, c: SinePath, quad_points: int | None = None) -> float:
    """Integral of 1/2 |path'|^2 - V(path) along the embedded path.

    The kinetic part is summed exactly from coefficients (the affine/loop
    cross term vanishes by the boundary conditions); the potential part
    uses composite Gauss quadrature sized to resolve all M modes.
    """
    system = _system(bp, c, quad_points)
    return system.action(system.flatten(c.coeffs))


def gradient(bp: BoundaryProblem, c: SinePath, convention: str = "euler_lagrange",
             quad_points: int | None = None) -> SinePath:
    """First-variation coefficients of the action at c, as a SinePath."""
    system = _system(bp, c, quad_points)
    r = system.residual(system.flatten(c.coeffs))
    if convention == "riesz_h1":
        r = r / system.eigenvalues
    elif convention != "euler_lagrange":
        raise ValueError(f"unknown gradient convention {convention!r}")
    return SinePath(bp.T, system.unflatten(r))


def hessian_blocks(bp: BoundaryProblem, c: SinePath, N: int,
                   quad_points: int | None = None) -> HessianBlocks:
    """Assemble the truncated second variation, partitioned at mode N."""
    if not 0 <= N <= c.M:
        raise ValueError(f"cutoff must satisfy 0 <= N <= M = {c.M}, got {N}")
    system = _system(bp, c, quad_points)
    K = system.hessian_matrix(system.flatten(c.coeffs))
    hd = N * bp.n
    return HessianBlocks(N=N, M=c.M, n=bp.n,
                         A=K[:hd, :hd], B=K[:hd, hd:], D=K[hd:, hd:])


def _system(bp: BoundaryProblem, c: SinePath, quad_points: int | None) -> MechanicalSystem:
    if c.n != bp.n:
        raise ValueError(f"path has {c.n} components but problem has {bp.n}")
    if abs(c.T - bp.T) > 0:
        raise ValueError(f"path horizon {c.T} differs from problem horizon {bp.T}")
    return MechanicalSystem(bp, c.M, quad_points)
