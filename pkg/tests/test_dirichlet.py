"""Rectangle eigenmodes, Dirichlet plans, Weyl counts, field solves."""

import math

import numpy as np
import pytest

from finred import (BoundaryProblem, RectangleDomain, builtin_potential,
                    dirichlet_plan, enumerate_modes, make_plan, parse_potential,
                    solve_dirichlet, solve_reduced, weyl_estimate)
from finred.dirichlet import DirichletSystem, index_full, index_schur, _blocks_at
from finred.reduction import UncertifiedPotentialError


def lattice_scan(dom, lambda_max):
    """Brute-force mode count oracle (independent double loop)."""
    count = 0
    k1 = 1
    while (math.pi * k1 / dom.lengths[0]) ** 2 <= lambda_max:
        if dom.m == 1:
            count += 1
        else:
            k2 = 1
            while ((math.pi * k1 / dom.lengths[0]) ** 2
                   + (math.pi * k2 / dom.lengths[1]) ** 2) <= lambda_max:
                count += 1
                k2 += 1
        k1 += 1
    return count


def test_enumerate_modes_interval():
    dom = RectangleDomain((math.pi,))  # lambda_k = k^2
    modes = enumerate_modes(dom, 5.0)
    assert [m.indices for m in modes] == [(1,), (2,)]
    assert [m.lam for m in modes] == pytest.approx([1.0, 4.0])


def test_enumerate_modes_unit_square():
    dom = RectangleDomain((1.0, 1.0))
    modes = enumerate_modes(dom, 3 * math.pi**2)
    assert [m.indices for m in modes] == [(1, 1)]  # (1,2) has 5 pi^2, too big
    modes = enumerate_modes(dom, 6 * math.pi**2)
    assert [m.indices for m in modes] == [(1, 1), (1, 2), (2, 1)]  # lex tie-break


def test_enumerate_modes_against_lattice_scan():
    dom = RectangleDomain((1.0, 1.0))
    for lam in (50.0, 333.3, 1000.0):
        assert len(enumerate_modes(dom, lam)) == lattice_scan(dom, lam)
    dom = RectangleDomain((2.0, 0.7))
    for lam in (40.0, 500.0):
        assert len(enumerate_modes(dom, lam)) == lattice_scan(dom, lam)


def test_enumerate_modes_cap():
    dom = RectangleDomain((1.0, 1.0))
    with pytest.raises(ValueError, match="cap"):
        enumerate_modes(dom, 1e7, cap=100)


def test_domain_validation():
    with pytest.raises(ValueError, match="1- and 2-dimensional"):
        RectangleDomain((1.0, 1.0, 1.0))
    with pytest.raises(ValueError, match="positive"):
        RectangleDomain((1.0, -2.0))


# ---------------------------------------------------------------------------
# plans

def test_plan_interval_example():
    dom = RectangleDomain((math.pi,))
    pot = parse_potential("cos(q1)", 1, c_bound=5.0)
    plan = dirichlet_plan(dom, pot)
    assert plan.N == 2
    assert plan.mu == pytest.approx(4.0 / 9.0, abs=1e-15)


def test_plan_small_bound_gives_empty_head():
    dom = RectangleDomain((math.pi,))
    pot = parse_potential("cos(q1)", 1, c_bound=0.5)  # below lambda_1 = 1
    plan = dirichlet_plan(dom, pot)
    assert plan.N == 0
    assert plan.mu == pytest.approx(0.5)


def test_plan_cutoff_matches_mechanical_formula():
    # m = 1 with L = T reproduces floor(T sqrt(C) / pi)
    for C in (0.3, 1.0, 5.0, 26.0, 80.0):
        for T in (0.7, 2.0, math.pi, 6.0):
            dom = RectangleDomain((T,))
            pot = parse_potential("cos(q1)", 1, c_bound=C)
            dplan = dirichlet_plan(dom, pot)
            bp = BoundaryProblem(pot, T, [0.0], [0.0])
            mplan = make_plan(bp)
            assert dplan.N == mplan.N == int(math.floor(T * math.sqrt(C) / math.pi))
            assert dplan.mu == pytest.approx(mplan.mu, rel=1e-12)


def test_plan_requires_scalar_potential():
    dom = RectangleDomain((1.0,))
    pot = builtin_potential("harmonic", (1.0, 1.0))
    with pytest.raises(ValueError, match="scalar"):
        dirichlet_plan(dom, pot)


def test_plan_certification_opt_in():
    dom = RectangleDomain((1.0,))
    pot = parse_potential("q1^4", 1, c_bound=3.0)
    with pytest.raises(UncertifiedPotentialError):
        dirichlet_plan(dom, pot)
    plan = dirichlet_plan(dom, pot, allow_uncertified=True)
    assert not plan.certified


# ---------------------------------------------------------------------------
# weyl

def test_weyl_interval_is_cutoff_formula():
    dom = RectangleDomain((2.5,))
    exact, weyl, rel = weyl_estimate(dom, 30.0)
    assert weyl == pytest.approx(2.5 * math.sqrt(30.0) / math.pi)
    assert exact == lattice_scan(dom, 30.0)


def test_weyl_unit_square_large_threshold():
    dom = RectangleDomain((1.0, 1.0))
    exact, weyl, rel = weyl_estimate(dom, 1000.0)
    assert weyl == pytest.approx(1000.0 / (4 * math.pi))
    assert exact == lattice_scan(dom, 1000.0)
    assert rel <= 0.15


def test_weyl_relative_error_decreases():
    dom = RectangleDomain((1.0, 1.0))
    rels = [weyl_estimate(dom, C)[2] for C in (1e2, 1e3, 1e4)]
    assert rels[2] < rels[0]


# ---------------------------------------------------------------------------
# solves

def test_zero_potential_unique_zero_field():
    dom = RectangleDomain((1.0, 1.0))
    pot = builtin_potential("zero", dim=1)
    plan = dirichlet_plan(dom, pot)
    sols = solve_dirichlet(dom, pot, plan, count=3)
    assert len(sols) == 1
    assert np.max(np.abs(sols[0].field.coeffs)) < 1e-12
    assert sols[0].index == 0 and sols[0].nullity == 0


def test_linear_source_closed_form():
    # Delta phi = -a with phi(0) = phi(L) = 0 has phi(x) = a x (L - x) / 2
    dom = RectangleDomain((math.pi,))
    a = 1.0
    pot = parse_potential("q1", 1, c_bound=0.0)
    plan = dirichlet_plan(dom, pot, lambda_cut=1024.0**2)
    sols = solve_dirichlet(dom, pot, plan, count=1, refine=False)
    assert len(sols) == 1
    xs = np.linspace(0, math.pi, 401)
    got = sols[0].field.evaluate(xs[:, None])
    exact = a * xs * (math.pi - xs) / 2.0
    assert np.max(np.abs(got - exact)) <= 1e-6


def test_quadratic_well_zero_solution_index_one():
    # V = (s/2) phi^2 with lambda_1 < s < lambda_2: phi = 0 has index 1
    dom = RectangleDomain((math.pi,))
    s = 2.5
    pot = builtin_potential("harmonic", (math.sqrt(s),))
    plan = dirichlet_plan(dom, pot)
    sols = solve_dirichlet(dom, pot, plan, count=4, with_oracles=True)
    zero = [x for x in sols if np.max(np.abs(x.field.coeffs)) < 1e-9]
    assert zero
    assert zero[0].index == 1
    assert zero[0].oracle_index == 1


def test_monotonicity_display_with_eigenvalues(rng):
    dom = RectangleDomain((1.3, 0.9))
    pot = parse_potential("cos(q1)", 1, c_bound=1.0)
    plan = dirichlet_plan(dom, pot)
    system = DirichletSystem(dom, pot, plan)
    lams = system.eigenvalues
    hd = plan.N
    for _ in range(50):
        u = np.zeros(len(plan.modes))
        u[:hd] = rng.standard_normal(hd)
        v1 = np.zeros_like(u)
        v2 = np.zeros_like(u)
        v1[hd:] = rng.standard_normal(len(u) - hd) / np.arange(1, len(u) - hd + 1)
        v2[hd:] = rng.standard_normal(len(u) - hd) / np.arange(1, len(u) - hd + 1)
        g1 = lams * (u + v1) - system.nonlinear_coeffs(u + v1)
        g2 = lams * (u + v2) - system.nonlinear_coeffs(u + v2)
        dv = (v2 - v1)[hd:]
        lhs = float((g2 - g1)[hd:] @ dv)
        rhs = plan.mu * float(np.sum(lams[hd:] * dv * dv))
        assert lhs >= rhs - 1e-9


def test_schur_equals_full_on_dirichlet_instances(rng):
    dom = RectangleDomain((1.0, 1.4))
    pot = parse_potential("cos(q1)", 1, c_bound=1.0)
    plan = dirichlet_plan(dom, pot)
    sols = solve_dirichlet(dom, pot, plan, count=4, refine=False)
    assert sols
    for sol in sols:
        system = DirichletSystem(dom, pot, plan)
        c = np.array(sol.field.coeffs)
        blocks = _blocks_at(system, plan.N, c)
        assert index_schur(blocks).index == index_full(blocks).index
        assert index_schur(blocks).nullity == index_full(blocks).nullity
        assert sol.index <= plan.N


def test_2d_nonlinear_solve_converges():
    dom = RectangleDomain((1.0, 1.0))
    pot = builtin_potential("pendulum", (4.0,), dim=1)  # V = -4 cos(phi)
    plan = dirichlet_plan(dom, pot)
    sols = solve_dirichlet(dom, pot, plan, count=4)
    assert sols
    for sol in sols:
        assert sol.converged
        assert sol.head_residual <= plan.head_tol
        assert sol.tail_residual <= plan.tail_tol
        assert sol.index <= plan.N


def test_2d_supercritical_pitchfork():
    # Delta phi = -25 sin(phi) on the unit square: 25 > lambda_1 = 2 pi^2, so
    # the zero field destabilizes into a symmetric pair of index-0 solutions
    dom = RectangleDomain((1.0, 1.0))
    pot = builtin_potential("pendulum", (25.0,), dim=1)
    plan = dirichlet_plan(dom, pot)
    assert plan.N == 1
    sols = solve_dirichlet(dom, pot, plan, count=16, radius=4.0,
                           refine=False, with_oracles=True)
    zero = [s for s in sols if np.max(np.abs(s.field.coeffs)) < 1e-9]
    broken = [s for s in sols if np.max(np.abs(s.field.coeffs)) >= 1e-9]
    assert len(zero) == 1 and len(broken) == 2
    # action of phi = 0 is -integral V(0) = 25 vol exactly
    assert zero[0].action == pytest.approx(25.0, rel=1e-12)
    assert zero[0].index == 1
    assert broken[0].index == broken[1].index == 0
    assert broken[0].action == pytest.approx(broken[1].action, rel=1e-9)
    centers = sorted(s.field.evaluate(np.array([[0.5, 0.5]]))[0] for s in broken)
    assert centers[0] == pytest.approx(-centers[1], rel=1e-6)  # mirror pair
    for s in sols:
        assert s.oracle_index == s.index


def test_mechanical_and_dirichlet_agree_on_linear_source():
    # q'' = -a on (0, T) with zero endpoints is the same problem both ways
    T = 2.0
    pot = parse_potential("q1", 1, c_bound=0.0)
    bp = BoundaryProblem(pot, T, [0.0], [0.0])
    mplan = make_plan(bp, M=256)
    mech = solve_reduced(bp, mplan, count=1, refine=False)[0]
    dom = RectangleDomain((T,))
    dplan = dirichlet_plan(dom, pot, lambda_cut=(256 * math.pi / T) ** 2 + 1.0)
    diri = solve_dirichlet(dom, pot, dplan, count=1, refine=False)[0]
    xs = np.linspace(0, T, 101)
    mech_vals = mech.path.evaluate(xs)[:, 0]
    diri_vals = diri.field.evaluate(xs[:, None])
    assert np.max(np.abs(mech_vals - diri_vals)) < 1e-8
