"""Index computations: Schur reduction vs full spectrum vs conjugate points."""

import numpy as np
import pytest

from finred import (BoundaryProblem, HessianBlocks, SinePath, builtin_potential,
                    hessian_blocks, index_full, index_jacobi, index_schur,
                    make_plan, reduced_hessian, solve_reduced)
from finred.core import TruncationError
from finred.fourier import mode_eigenvalues


def random_blocks(rng, head=4, tail=7, margin=0.3):
    """Random symmetric blocks with D positive definite and no tiny eigenvalues."""
    while True:
        A = rng.standard_normal((head, head))
        A = 0.5 * (A + A.T)
        B = rng.standard_normal((head, tail))
        Q = rng.standard_normal((tail, tail))
        D = Q @ Q.T + margin * np.eye(tail)
        blocks = HessianBlocks(N=head, M=head + tail, n=1, A=A, B=B, D=D)
        full_eigs = np.linalg.eigvalsh(blocks.full())
        schur_eigs = np.linalg.eigvalsh(reduced_hessian(blocks))
        if min(np.min(np.abs(full_eigs)), np.min(np.abs(schur_eigs))) > 1e-6:
            return blocks


def full_signature_oracle(blocks):
    """Independent signature count from a dense eigensolve of the full matrix."""
    eigs = np.linalg.eigvalsh(blocks.full())
    theta = 1e-8 * (1.0 + np.max(np.abs(eigs)))
    return int(np.sum(eigs < -theta)), int(np.sum(np.abs(eigs) <= theta))


def test_schur_returns_A_when_uncoupled(rng):
    A = rng.standard_normal((3, 3))
    A = 0.5 * (A + A.T)
    blocks = HessianBlocks(N=3, M=8, n=1, A=A, B=np.zeros((3, 5)), D=np.eye(5))
    assert np.allclose(reduced_hessian(blocks), A, atol=1e-14)


def test_schur_harmonic_diagonal():
    omega, T = 1.0, 3 * np.pi / 2
    pot = builtin_potential("harmonic", (omega,))
    bp = BoundaryProblem(pot, T, [0.0], [1.0])
    plan = make_plan(bp)
    c = SinePath(T, np.zeros((plan.M, 1)))
    blocks = hessian_blocks(bp, c, N=plan.N)
    S = reduced_hessian(blocks)
    eig = mode_eigenvalues(T, plan.N)
    assert np.allclose(S, np.diag(eig - omega**2), atol=1e-12)
    rep = index_schur(blocks)
    assert rep.index == 1  # only k = 1 has pi^2/T^2 - 1 < 0 for T = 3 pi/2


def test_schur_equals_full_on_random_blocks(rng):
    for _ in range(20):
        blocks = random_blocks(rng)
        schur = index_schur(blocks)
        full = index_full(blocks)
        oracle = full_signature_oracle(blocks)
        assert (schur.index, schur.nullity) == (full.index, full.nullity) == oracle


def test_signature_additivity_identity(rng):
    # index(full) = index(Schur) + index(D) and index(D) = 0 when D > 0
    blocks = random_blocks(rng)
    d_eigs = np.linalg.eigvalsh(blocks.D)
    assert np.all(d_eigs > 0)
    assert index_full(blocks).index == index_schur(blocks).index


def test_non_positive_tail_block_raises(rng):
    blocks = HessianBlocks(N=2, M=5, n=1,
                           A=np.eye(2), B=np.zeros((2, 3)),
                           D=np.diag([1.0, -0.5, 2.0]))
    with pytest.raises(TruncationError, match="-5\\.0*e-01|smallest eigenvalue"):
        reduced_hessian(blocks)


def test_free_particle_zero_signature(rng):
    pot = builtin_potential("zero", dim=1)
    bp = BoundaryProblem(pot, 2.0, [0.0], [1.0])
    c = SinePath(2.0, np.zeros((8, 1)))
    blocks = hessian_blocks(bp, c, N=0)
    # N = 0: the full matrix is the tail block alone
    assert index_full(blocks).index == 0
    assert index_schur(blocks).index == 0
    assert index_schur(blocks).nullity == 0


def test_resonant_horizon_is_flagged_degenerate():
    # omega T = 2 pi: mode k = 2 of the second variation is exactly null
    pot = builtin_potential("harmonic", (1.0,))
    bp = BoundaryProblem(pot, 2 * np.pi, [0.0], [0.0])
    plan = make_plan(bp)
    c = SinePath(bp.T, np.zeros((plan.M, 1)))
    blocks = hessian_blocks(bp, c, N=plan.N)
    rep = index_schur(blocks)
    assert rep.nullity >= 1
    assert rep.min_abs_eigenvalue < 1e-10


def test_congruence_scaling_preserves_signature(rng):
    for _ in range(5):
        blocks = random_blocks(rng)
        T = 1.7
        scaled = HessianBlocks(N=blocks.N, M=blocks.M, n=1,
                               A=blocks.A, B=blocks.B, D=blocks.D).to_h1(T)
        a = index_full(blocks)
        b = index_full(scaled)
        assert (a.index, a.nullity) == (b.index, b.nullity)
        sa = index_schur(blocks)
        sb = index_schur(scaled)
        assert (sa.index, sa.nullity) == (sb.index, sb.nullity)


# ---------------------------------------------------------------------------
# jacobi oracle

def solve_one(pot, T, q0, qT, **kw):
    bp = BoundaryProblem(pot, T, q0, qT)
    plan = make_plan(bp)
    reports = solve_reduced(bp, plan, count=4, refine=False, **kw)
    assert reports, "expected a converged solution"
    return bp, reports[0]


def test_jacobi_harmonic_one_conjugate_point():
    bp, rep = solve_one(builtin_potential("harmonic", (1.0,)), 3 * np.pi / 2, [0.0], [1.0])
    jac = index_jacobi(bp, rep.path)
    assert jac.index == 1  # sin t vanishes once in (0, 3 pi/2)
    assert jac.index == rep.index


def test_jacobi_free_particle():
    bp, rep = solve_one(builtin_potential("zero", dim=1), 2.0, [0.0], [1.0])
    jac = index_jacobi(bp, rep.path)
    assert jac.index == 0 and jac.nullity == 0


def test_jacobi_omega_two_short_horizon():
    bp, rep = solve_one(builtin_potential("harmonic", (2.0,)), np.pi - 0.1, [0.0], [1.0])
    jac = index_jacobi(bp, rep.path)
    assert jac.index == 1  # sin 2t vanishes only at pi/2 in (0, pi - 0.1)
    assert jac.index == rep.index


def test_jacobi_counts_multiplicity(rng):
    # isotropic two-component oscillator: J = sin(t) I, rank drops by 2 at pi
    pot = builtin_potential("harmonic", (1.0, 1.0))
    bp, rep = solve_one(pot, 3 * np.pi / 2, [0.0, 0.0], [1.0, 0.5])
    jac = index_jacobi(bp, rep.path)
    assert jac.index == 2
    assert jac.index == rep.index


def test_jacobi_endpoint_degeneracy_warning():
    pot = builtin_potential("harmonic", (1.0,))
    bp = BoundaryProblem(pot, np.pi, [0.0], [0.0])
    plan = make_plan(bp)
    reports = solve_reduced(bp, plan, seeds=[np.zeros(plan.N)], refine=False)
    jac = index_jacobi(bp, reports[0].path)
    assert jac.nullity >= 1  # J(T) = sin(pi) = 0: conjugate endpoint
    assert jac.min_abs_eigenvalue < 1e-6


def test_schur_jacobi_agree_on_pendulum_solutions(rng):
    from tests.conftest import random_pendulum_problem
    agreements = 0
    while agreements < 8:
        bp, plan = random_pendulum_problem(rng)
        reports = solve_reduced(bp, plan, count=4, refine=False)
        for rep in reports:
            if rep.nullity:
                continue  # the theorem needs nondegeneracy
            jac = index_jacobi(bp, rep.path)
            assert jac.index == rep.index
            assert rep.index <= plan.N * bp.n
            agreements += 1
