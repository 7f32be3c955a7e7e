import numpy as np
import pytest

from dgrkit.errors import DefectiveMatrix, InvalidInput
from dgrkit.sysmodel import LtiSystem, chain_matrix, mode_excitation, perturb, step, unit, vandermonde

from conftest import example1


def test_step_exact_cancellation():
    sys = LtiSystem(np.eye(2), np.eye(2))
    assert np.array_equal(step(sys, [1.0, 0.0], [-1.0, 0.0]), np.zeros(2))


def test_step_chain_first_component_ignores_input(rng):
    sys = example1([2.0, 0.0, 0.0])
    for _ in range(5):
        x1 = step(sys, [1.0, 0.0, 0.0], rng.normal(size=1))
        assert x1[0] == 2.0


def test_step_diagonal():
    sys = LtiSystem(np.diag([2.0, 0.5]), np.eye(2))
    assert np.allclose(step(sys, np.ones(2), np.zeros(2)), [2.0, 0.5])


def test_step_dimension_errors():
    sys = LtiSystem(np.eye(2), np.eye(2))
    with pytest.raises(InvalidInput):
        step(sys, np.ones(3), np.zeros(2))
    with pytest.raises(InvalidInput):
        step(sys, np.ones(2), np.zeros(1))


def test_step_noise_is_seeded():
    sys = LtiSystem(np.eye(2), np.eye(2), noise_std=0.1)
    a = step(sys, np.ones(2), np.zeros(2), rng=7)
    b = step(sys, np.ones(2), np.zeros(2), rng=7)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, np.ones(2))


def test_system_validation():
    with pytest.raises(InvalidInput):
        LtiSystem(np.ones((2, 3)), np.ones((2, 1)))
    with pytest.raises(InvalidInput):
        LtiSystem(np.eye(2), np.ones((3, 1)))
    with pytest.raises(InvalidInput):
        LtiSystem(np.eye(2), np.ones((2, 1)), noise_std=-1.0)


def test_perturb_zero_is_identity():
    sys = LtiSystem(np.diag([1.0, 2.0]), np.eye(2))
    assert np.array_equal(perturb(sys, 0.0, 1).A, sys.A)


def test_perturb_reproducible_and_seed_sensitive():
    sys = LtiSystem(np.zeros((3, 3)), np.eye(3))
    a = perturb(sys, 0.05, 11).A
    b = perturb(sys, 0.05, 11).A
    c = perturb(sys, 0.05, 12).A
    assert np.array_equal(a, b)
    assert np.any(a != c)


def test_chain_matrix_shape():
    A = chain_matrix([1.5, 0.0, 0.0])
    assert np.array_equal(A, [[1.5, 1, 0], [0, 0, 1], [0, 0, 0]])
    assert np.array_equal(unit(3, 2).ravel(), [0, 0, 1])


@pytest.mark.parametrize(
    "diag, x0, k, r",
    [
        ([2.0, 0.5], [1.0, 0.0], 1, 1),
        ([2.0, 0.5], [1.0, 1.0], 2, 2),
        ([2.0, 2.0, 0.5], [1.0, 1.0, 0.0], 2, 1),
    ],
)
def test_mode_excitation_counts(diag, x0, k, r):
    rep = mode_excitation(LtiSystem(np.diag(diag), np.eye(len(diag))), x0)
    assert rep.excited_count == k
    assert rep.distinct_eigenvalue_count == r


def test_mode_excitation_brute_force_expansion(rng):
    # independent oracle: the coefficients rebuild x0 from unit eigenvectors
    for _ in range(10):
        n = 5
        V = rng.normal(size=(n, n))
        lam = rng.uniform(-2, 2, size=n)
        A = V @ np.diag(lam) @ np.linalg.inv(V)
        c = rng.normal(size=n) * (rng.random(n) < 0.6)
        Vu = V / np.linalg.norm(V, axis=0)
        x0 = Vu @ c
        rep = mode_excitation(LtiSystem(A, np.eye(n)), x0)
        assert rep.excited_count == int(np.count_nonzero(np.abs(c) > 1e-8 * np.linalg.norm(x0)))


def test_mode_excitation_k1_k2_split():
    A = np.diag([2.0, 0.5, 0.3])
    B = unit(3, 0)
    rep = mode_excitation(LtiSystem(A, B), np.ones(3))
    assert (rep.k1, rep.k2) == (1, 2)


def test_mode_excitation_defective():
    with pytest.raises(DefectiveMatrix):
        mode_excitation(LtiSystem(chain_matrix([1.0, 1.0]), np.eye(2)), np.ones(2))


def test_vandermonde():
    assert np.array_equal(vandermonde([2.0, 3.0], 2), [[1, 2], [1, 3]])
    assert np.linalg.matrix_rank(vandermonde([2.0, 2.0], 2)) == 1
    assert np.linalg.det(vandermonde([1.0, 2.0, 3.0], 3)) == pytest.approx(2.0)
    with pytest.raises(InvalidInput):
        vandermonde([1.0], 0)
