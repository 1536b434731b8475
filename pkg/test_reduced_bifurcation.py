#!/usr/bin/env python3
"""
Tests for the reduced system, pitchfork detection, transversal stability and double cusps
"""
import math
import os
import sys

import numpy as np

# Add parent directory to path
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from pendula.dynamics import CoupledSystem, InteractionPotential, double_well, vector_field
from pendula.errors import DomainError, NotClassConstantError
from pendula.graph_core import Graph, complete_graph, path_graph, sign_vector_from_entries
from pendula.integrator import integrate
from pendula.reduced_bifurcation import (
    ReducedSystem,
    classify_equilibrium,
    detect_pitchfork,
    double_cusp,
    double_cusp_levelset,
    embed_reduced,
    equilibria_on_axis,
    find_critical_points,
    integrate_reduced,
    nondegeneracy,
    quartic_coefficients,
    reduce,
    reduced_hamiltonian,
    reduced_origin_eigenvalues,
    reduced_vector_field,
    transversal_eigenvalues,
    transversal_stability_map,
)

MIXED = InteractionPotential(((0, 0, 0.25), (1, 0, -1.0), (2, 0, 1.0), (0, 1, -0.5), (1, 1, 0.3), (0, 2, 0.2)))


def k2_vector():
    return sign_vector_from_entries(complete_graph(2), (1, -1))


def test_reduce_counts():
    """Test (d_pm, d_0) and lambda = 2 d_pm + d_0"""
    print("Testing reduction counts...")

    cases = [
        (complete_graph(2), (1, -1), (1, 0), 2),
        (path_graph(3), (-1, 0, 1), (0, 1), 1),
        (complete_graph(3), (-1, 0, 1), (1, 1), 3),
    ]
    for g, entries, counts, lam in cases:
        rs = reduce(CoupledSystem(g, double_well(), 0.2), sign_vector_from_entries(g, entries))
        assert (rs.d_pm, rs.d_0) == counts
        assert rs.lam == lam

    g = Graph.from_edges(6, [(1, 2), (1, 3), (2, 5), (2, 6), (4, 5), (4, 6)])
    try:
        reduce(CoupledSystem(g, double_well(), 0.2), sign_vector_from_entries(g, (1, 1, -1, -1, 0, 0)))
        assert False, "a pattern without invariant subspace cannot be reduced"
    except NotClassConstantError:
        pass

    try:
        ReducedSystem(0, 0, double_well(), 0.2)
        assert False, "empty counts should be rejected"
    except DomainError:
        pass

    print("✓ Reduction counts work")


def test_origin_linearisation():
    """Test the reduced origin eigenvalues against the 2x2 Jacobian"""
    print("Testing reduced origin eigenvalues...")

    for d_pm, d_0 in ((1, 0), (0, 1), (1, 1), (2, 3)):
        for kappa in (0.05, 0.2, 0.7):
            rs = ReducedSystem(d_pm, d_0, MIXED, kappa)
            expected = sorted(reduced_origin_eigenvalues(rs), key=lambda z: (z.real, z.imag))
            numeric = sorted(np.linalg.eigvals(rs.jacobian(0.0, 0.0)), key=lambda z: (z.real, z.imag))
            assert np.allclose(expected, numeric, atol=1e-10), (d_pm, d_0, kappa)

    lo, hi = reduced_origin_eigenvalues(ReducedSystem(1, 0, double_well(), 0.2))
    assert abs(abs(lo) - math.sqrt(0.2)) < 1e-12 and lo.real == 0.0

    print("✓ Reduced origin eigenvalues work")


def test_quartic_coefficients():
    """Test the fourth-order expansion of the reduced Hamiltonian"""
    print("Testing quartic coefficients...")

    rs = ReducedSystem(2, 1, MIXED, 0.4)
    c = quartic_coefficients(rs)
    assert abs(c['x2y2'] - 0.4 * 0.3 * 17) < 1e-12
    x, y = 0.05, 0.03
    expansion = (c['x2'] * x ** 2 + c['y2'] * y ** 2 + c['x4'] * x ** 4 + c['y4'] * y ** 4
                 + c['x2y2'] * x ** 2 * y ** 2)
    assert abs((rs.hamiltonian(x, y) - rs.hamiltonian(0.0, 0.0)) - expansion) <= 1e-9

    print("✓ Quartic coefficients work")


def test_reduced_hamiltonian_flow():
    """Test the reduced field is the Hamiltonian flow of K and matches the full field"""
    print("Testing reduced Hamiltonian flow...")

    rs = ReducedSystem(2, 1, MIXED, 0.4)
    h = 1e-6
    for x, y in ((0.3, -0.2), (-1.1, 0.7), (0.05, 0.0)):
        xdot, ydot = reduced_vector_field(rs, x, y)
        dk_dx = (reduced_hamiltonian(rs, x + h, y) - reduced_hamiltonian(rs, x - h, y)) / (2 * h)
        dk_dy = (reduced_hamiltonian(rs, x, y + h) - reduced_hamiltonian(rs, x, y - h)) / (2 * h)
        assert abs(xdot - dk_dy) <= 1e-7, (x, y)
        assert abs(ydot + dk_dx) <= 1e-7, (x, y)

    g = complete_graph(3)
    v = sign_vector_from_entries(g, (-1, 0, 1))
    sys_k3 = CoupledSystem(g, MIXED, 0.4)
    xdot, ydot = reduced_vector_field(reduce(sys_k3, v), 0.3, -0.2)
    full = vector_field(sys_k3, embed_reduced(v, 0.3, -0.2))
    assert np.allclose(full, np.concatenate([xdot * v.as_array(), ydot * v.as_array()]), atol=1e-12)

    print("✓ Reduced Hamiltonian flow works")


def test_axis_equilibria():
    """Test equilibria before and after the K2 pitchfork"""
    print("Testing axis equilibria...")

    rs = ReducedSystem(1, 0, double_well(), 0.2)
    assert np.allclose(equilibria_on_axis(rs, 'x'), [0.0])

    roots = equilibria_on_axis(rs.with_kappa(0.3), 'x')
    assert len(roots) == 3
    assert abs(roots[2] - 0.1456) < 1e-3
    assert roots[0] == -roots[2]

    rs3 = rs.with_kappa(0.3)
    assert classify_equilibrium(rs3, 0.0, 0.0) == 'saddle'
    assert classify_equilibrium(rs3, roots[2], 0.0) == 'center'
    assert classify_equilibrium(rs, 0.0, 0.0) == 'center'

    try:
        equilibria_on_axis(rs, 'z')
        assert False, "unknown axis should be rejected"
    except DomainError:
        pass

    print("✓ Axis equilibria work")


def test_nondegeneracy():
    """Test finite-difference pitchfork derivatives against their closed forms"""
    print("Testing pitchfork non-degeneracy...")

    cases = [
        (ReducedSystem(1, 0, double_well(), 0.1), 0.25, -47.0, 4.0),
        (ReducedSystem(0, 1, double_well(), 0.1), 0.5, -11.0, 2.0),
        (ReducedSystem(1, 1, double_well(), 0.1), 1 / 6, -35.0, 6.0),
    ]
    for rs, kappa_crit, third, mixed in cases:
        nd = nondegeneracy(rs, 'x')
        assert abs(nd.kappa_crit - kappa_crit) < 1e-12
        assert abs(nd.third_derivative_closed - third) < 1e-12
        assert abs(nd.mixed_derivative_closed - mixed) < 1e-12
        assert nd.agrees(rel_tol=1e-4), nd
        assert nd.non_degenerate

    try:
        nondegeneracy(ReducedSystem(1, 0, double_well(), 0.1), 'y')
        assert False, "double well has no y-axis critical coupling"
    except DomainError:
        pass

    nd_y = nondegeneracy(ReducedSystem(1, 0, MIXED, 0.1), 'y')
    assert abs(nd_y.kappa_crit - 0.5) < 1e-12
    assert nd_y.agrees(rel_tol=1e-4), nd_y

    print("✓ Pitchfork non-degeneracy works")


def test_detect_pitchfork():
    """Test the kappa sweep finds each pitchfork within one grid step"""
    print("Testing pitchfork detection...")

    cases = [
        (complete_graph(2), (1, -1), 0.25),
        (complete_graph(3), (-1, 0, 1), 1 / 6),
        (path_graph(3), (1, 0, -1), 0.5),
    ]
    kappas = np.linspace(0.1, 0.6, 51)
    for g, entries, expected in cases:
        rs = reduce(CoupledSystem(g, double_well(), 0.1), sign_vector_from_entries(g, entries))
        diagram = detect_pitchfork(rs, kappas)
        x_points = [p for p in diagram.bifurcations if p.axis == 'x']
        assert len(x_points) == 1, diagram.bifurcations
        assert abs(x_points[0].kappa - expected) <= 0.01 + 1e-12
        assert abs(x_points[0].predicted - expected) < 1e-12
        assert diagram.warnings == []
        assert len(diagram.rows()) >= len(kappas)

    rs = ReducedSystem(1, 0, double_well(), 0.1)
    assert detect_pitchfork(rs, np.linspace(0.3, 0.5, 5)).warnings
    try:
        detect_pitchfork(rs, [0.3, 0.2])
        assert False, "decreasing grid should be rejected"
    except DomainError:
        pass

    print("✓ Pitchfork detection works")


def test_transversal_stability():
    """Test the synchronous direction is the transversal mode of K2"""
    print("Testing transversal stability...")

    sys_k2 = CoupledSystem(complete_graph(2), double_well(), 0.2)
    v = k2_vector()
    values = transversal_eigenvalues(sys_k2, v, 0.0)
    assert np.allclose(sorted(values.imag), [-1.0, 1.0], atol=1e-10)
    assert np.allclose(values.real, 0.0, atol=1e-10)

    stability = transversal_stability_map(sys_k2, v, [0.0, 2.0], [0.1, 0.3, 1.0])
    assert stability.stable.shape == (3, 2)
    assert np.all(stability.stable[:, 0])
    assert not np.any(stability.stable[:, 1])
    assert len(stability.rows()) == 6

    print("✓ Transversal stability works")


def test_reduced_orbit_embeds():
    """Test a reduced orbit embedded as (x v, y v) follows the full flow"""
    print("Testing reduced embedding...")

    for g, entries, kappa in ((complete_graph(2), (1, -1), 0.1), (path_graph(3), (1, 0, -1), 0.2)):
        v = sign_vector_from_entries(g, entries)
        sys_g = CoupledSystem(g, double_well(), kappa)
        rs = reduce(sys_g, v)
        reduced = integrate_reduced(rs, 0.3, 0.0, 50.0)
        full = integrate(sys_g, embed_reduced(v, 0.3, 0.0), 50.0)
        assert reduced.energy_drift <= 1e-9
        assert np.max(np.abs(full.q - np.outer(reduced.x, v.as_array()))) <= 1e-6
        assert np.max(np.abs(full.p - np.outer(reduced.y, v.as_array()))) <= 1e-6

    print("✓ Reduced embedding works")


def test_double_cusp():
    """Test critical points and level sets of the double cusp"""
    print("Testing double cusp...")

    points = find_critical_points(1.0, -1.0, 1.0)
    kinds = {(round(p.x, 9), round(p.y, 9)): p.kind for p in points}
    assert kinds == {(round(-1 / math.sqrt(2), 9), 0.0): 'minimum',
                     (0.0, 0.0): 'saddle',
                     (round(1 / math.sqrt(2), 9), 0.0): 'minimum'}
    for p in points:
        if p.kind == 'minimum':
            assert abs(p.value + 0.25) < 1e-12

    xs = np.linspace(-1, 1, 21)
    ys = np.linspace(-1, 1, 11)
    result = double_cusp_levelset(1.0, -1.0, 1.0, xs, ys, level=0.0)
    assert result.values.shape == (11, 21)
    assert result.signs[5, 10] == 0
    assert result.signs[5, 13] == -1
    assert result.warnings == []
    assert abs(double_cusp(1.0, -1.0, 1.0, 0.5, 0.5) - (0.0625 + 0.0625 + 0.0625 - 0.25 + 0.25)) < 1e-15

    degenerate = double_cusp_levelset(2.0, -1.0, 1.0, xs, ys)
    assert len(degenerate.warnings) == 1

    print("✓ Double cusp works")


def run_all_tests():
    """Run all tests"""
    print("=" * 80)
    print("RUNNING REDUCED SYSTEM TESTS")
    print("=" * 80)
    print()

    tests = [
        test_reduce_counts,
        test_origin_linearisation,
        test_quartic_coefficients,
        test_reduced_hamiltonian_flow,
        test_axis_equilibria,
        test_nondegeneracy,
        test_detect_pitchfork,
        test_transversal_stability,
        test_reduced_orbit_embeds,
        test_double_cusp,
    ]

    passed = 0
    failed = 0

    for test in tests:
        try:
            test()
            passed += 1
        except AssertionError as e:
            print(f"✗ {test.__name__} failed: {e}")
            failed += 1
        except Exception as e:
            print(f"✗ {test.__name__} error: {e}")
            failed += 1

    print()
    print("=" * 80)
    print(f"RESULTS: {passed} passed, {failed} failed")
    print("=" * 80)

    if failed > 0:
        sys.exit(1)


if __name__ == '__main__':
    run_all_tests()
