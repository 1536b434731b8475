#!/usr/bin/env python3
"""
Tests for the interaction potential, Hamiltonian, vector field and Jacobian
"""
import math
import os
import sys
import tempfile

import numpy as np

# Add parent directory to path
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from pendula.dynamics import (
    CoupledSystem,
    InteractionPotential,
    SystemState,
    apply_permutation,
    automorphisms,
    bounded_motion_certificate,
    double_well,
    eval_potential,
    hamiltonian,
    harmonic,
    jacobian,
    load_potential,
    permute_vector,
    potential_warnings,
    random_state,
    state_from_values,
    vector_field,
)
from pendula.errors import DimensionError, DomainError, PotentialFormatError
from pendula.graph_core import complete_graph, cycle_graph, graph_from_spec, path_graph
from pendula.scenario import LYAPUNOV_TABLE

# A potential with every low-order term, so all Jacobian blocks are exercised
MIXED = InteractionPotential(((0, 0, 0.25), (1, 0, -1.0), (2, 0, 1.0), (0, 1, -0.5), (1, 1, 0.3), (0, 2, 0.2)))


def test_potential_evaluation():
    """Test G and its partial derivatives"""
    print("Testing potential evaluation...")

    g = double_well()
    assert abs(g.evaluate(0.5, 0.0) - 0.0625) < 1e-15
    assert isinstance(g.evaluate(0.5, 0.0), float)
    x = 0.3
    assert abs(eval_potential(g, x, 0.7, 1, 0) - (-2 * x + 4 * x ** 3)) < 1e-15
    assert abs(eval_potential(g, x, 0.7, 2, 0) - (-2 + 12 * x ** 2)) < 1e-15
    assert eval_potential(g, x, 0.7, 0, 1) == 0.0
    assert (g.c10, g.c01, g.c20) == (-1.0, 0.0, 1.0)

    xs = np.linspace(-1, 1, 5)
    assert eval_potential(MIXED, xs, -xs, 1, 1).shape == (5,)
    # x^2 y^2 term: d2/dxdy (0.3 x^2 y^2) = 1.2 x y
    assert abs(eval_potential(MIXED, 0.5, 0.4, 1, 1) - 1.2 * 0.5 * 0.4) < 1e-15

    merged = InteractionPotential(((1, 0, 1.0), (1, 0, -1.0), (0, 0, 2.0)))
    assert merged.terms == ((0, 0, 2.0),)
    assert InteractionPotential.from_coeffs(MIXED.coeffs).coeffs == MIXED.coeffs

    try:
        InteractionPotential(((1, -1, 1.0),))
        assert False, "negative index should be rejected"
    except PotentialFormatError:
        pass

    print("✓ Potential evaluation works")


def test_potential_files():
    """Test potential files and named potentials"""
    print("Testing potential files...")

    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, 'well.txt')
        with open(path, 'w') as fh:
            fh.write("# double well\n0 0 1/4\n1 0 -1\n2 0 1\n")
        assert load_potential(path).coeffs == double_well().coeffs

        bad = os.path.join(tmp, 'bad.txt')
        with open(bad, 'w') as fh:
            fh.write("1 0\n")
        try:
            load_potential(bad)
            assert False, "two-column line should be rejected"
        except PotentialFormatError:
            pass

    assert load_potential('harmonic').coeffs == harmonic().coeffs
    try:
        load_potential('quartic-mystery')
        assert False, "unknown potential should be rejected"
    except PotentialFormatError:
        pass

    print("✓ Potential files work")


def test_potential_warnings():
    """Test the sampled non-negativity check"""
    print("Testing potential sign check...")

    assert potential_warnings(double_well()) == ()
    assert len(potential_warnings(InteractionPotential(((1, 0, -1.0),), name="inverted"))) == 1

    print("✓ Potential sign check works")


def test_vector_field_example():
    """Test the K2 equations of motion at a published initial condition"""
    print("Testing vector field...")

    sys_k2 = CoupledSystem(complete_graph(2), double_well(), 0.2)
    s = state_from_values(sys_k2, [1 / 5, 1 / 7, 0.0, 0.0])
    f = vector_field(sys_k2, s)
    assert np.allclose(f[:2], 0.0, atol=1e-15)
    assert abs(f[2] - (-0.17596)) < 1e-5
    assert abs(f[3] - (-0.16508)) < 1e-5

    sys_k3 = CoupledSystem(complete_graph(3), double_well(), 0.0)
    s3 = SystemState([0.1, 0.2, 0.3], [0.4, 0.5, 0.6])
    assert np.allclose(vector_field(sys_k3, s3), np.concatenate([s3.p, -np.sin(s3.q)]))

    print("✓ Vector field works")


def test_coupling_cancels():
    """Test the coupling terms sum to zero over the nodes"""
    print("Testing coupling cancellation...")

    rng = np.random.default_rng(3)
    for spec in ('complete:4', 'cycle:5', 'random:7:0.4:2'):
        sys_g = CoupledSystem(graph_from_spec(spec), MIXED, 0.7)
        for _ in range(10):
            s = random_state(sys_g.n, rng, q_scale=2.0)
            f = vector_field(sys_g, s)
            n = sys_g.n
            assert abs(np.sum(f[:n] - s.p)) <= 1e-12
            assert abs(np.sum(f[n:] + np.sin(s.q))) <= 1e-12

    print("✓ Coupling cancellation works")


def test_jacobian_finite_differences():
    """Test the weighted-Laplacian Jacobian against central differences"""
    print("Testing Jacobian...")

    rng = np.random.default_rng(5)
    sys_k3 = CoupledSystem(complete_graph(3), MIXED, 0.4)
    h = 1e-6
    for _ in range(20):
        s = random_state(3, rng, q_scale=1.5)
        x = s.as_vector()
        numeric = np.empty((6, 6))
        for k in range(6):
            e = np.zeros(6)
            e[k] = h
            numeric[:, k] = (sys_k3.rhs(x + e) - sys_k3.rhs(x - e)) / (2 * h)
        assert np.max(np.abs(jacobian(sys_k3, s) - numeric)) <= 1e-6

    # Hamiltonian structure: the trace vanishes
    assert abs(np.trace(jacobian(sys_k3, s))) <= 1e-12

    print("✓ Jacobian works")


def test_hamiltonian_matches_published_energies():
    """Test energies of the published initial conditions"""
    print("Testing published energies...")

    for row in LYAPUNOV_TABLE:
        sys_row = CoupledSystem(graph_from_spec(row.graph), double_well(), row.kappa)
        energy = hamiltonian(sys_row, state_from_values(sys_row, row.ic))
        assert abs(energy - row.energy) <= 0.005, (row.label, energy)

    print("✓ published energies match")


def test_bounded_motion_certificate():
    """Test the H <= 2 - N certificate"""
    print("Testing bounded-motion certificate...")

    sys_k3 = CoupledSystem(complete_graph(3), double_well(), 1 / 8)
    assert bounded_motion_certificate(sys_k3, state_from_values(sys_k3, [0.2, 1 / 7, 0.1, 0, 0, 0]))
    assert not bounded_motion_certificate(sys_k3, state_from_values(sys_k3, [0.2, 1 / 7, 0.1, 3, 0, 0]))

    single = CoupledSystem(path_graph(1), double_well(), 0.0)
    try:
        bounded_motion_certificate(single, SystemState([0.1], [0.0]))
        assert False, "one pendulum should be rejected"
    except DomainError:
        pass

    print("✓ Bounded-motion certificate works")


def test_permutation_equivariance():
    """Test graph automorphisms commute with the flow"""
    print("Testing automorphism equivariance...")

    rng = np.random.default_rng(8)
    for g in (path_graph(3), cycle_graph(4), complete_graph(3)):
        sys_g = CoupledSystem(g, MIXED, 0.3)
        perms = automorphisms(g)
        assert tuple(range(g.n)) in perms
        for perm in perms:
            s = random_state(g.n, rng)
            moved = apply_permutation(perm, s)
            assert np.allclose(vector_field(sys_g, moved), permute_vector(perm, vector_field(sys_g, s)), atol=1e-13)
            assert abs(hamiltonian(sys_g, moved) - hamiltonian(sys_g, s)) <= 1e-13

    assert len(automorphisms(path_graph(3))) == 2
    assert len(automorphisms(cycle_graph(4))) == 8

    print("✓ Automorphism equivariance works")


def test_state_validation():
    """Test dimension and domain errors"""
    print("Testing state validation...")

    sys_k2 = CoupledSystem(complete_graph(2), double_well(), 0.2)
    for call in (
        lambda: state_from_values(sys_k2, [0.1, 0.2, 0.3]),
        lambda: vector_field(sys_k2, SystemState([0.1, 0.2, 0.3], [0, 0, 0])),
        lambda: SystemState([0.1, 0.2], [0.0]),
    ):
        try:
            call()
            assert False, "dimension mismatch should be rejected"
        except DimensionError:
            pass
    for call in (
        lambda: SystemState([math.nan, 0.0], [0.0, 0.0]),
        lambda: CoupledSystem(complete_graph(2), double_well(), -0.1),
        lambda: apply_permutation([0, 0], SystemState([0.1, 0.2], [0.0, 0.0])),
    ):
        try:
            call()
            assert False, "invalid value should be rejected"
        except DomainError:
            pass

    print("✓ State validation works")


def run_all_tests():
    """Run all tests"""
    print("=" * 80)
    print("RUNNING DYNAMICS TESTS")
    print("=" * 80)
    print()

    tests = [
        test_potential_evaluation,
        test_potential_files,
        test_potential_warnings,
        test_vector_field_example,
        test_coupling_cancels,
        test_jacobian_finite_differences,
        test_hamiltonian_matches_published_energies,
        test_bounded_motion_certificate,
        test_permutation_equivariance,
        test_state_validation,
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
