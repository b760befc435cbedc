from __future__ import annotations

import numpy as np
import pytest

from isolab.blocks import max_norm
from isolab.errors import PoleError
from isolab.showcase import (
    OmegaState,
    ThreeDExample,
    example3d_closed_form,
    example3d_constant_bracket,
    example3d_gauge,
    integrate_omega,
    integrate_reduced_4d,
    omega_embedding,
    omega_hat_4d,
    phi_from_omega,
    phi_of,
    phi_rhs,
    pvi_rhs,
    reduced_4d_rhs,
    skew_4d,
)

OMEGA_START = (0.3, 0.2, 0.1)


def test_closed_form_at_the_reference_point(three_d: ThreeDExample) -> None:
    A = example3d_closed_form(three_d, 1.0)

    assert three_d.rho == pytest.approx(0.5)
    assert A[0, 1] == pytest.approx(1.0)
    assert A[0, 2] == pytest.approx(2.0)
    assert A[1, 0] == pytest.approx(1.0)
    assert A[2, 0] == pytest.approx(0.5)
    assert A[1, 2] == pytest.approx(1.0)
    assert A[2, 1] == pytest.approx(0.25)
    assert np.diag(A) == pytest.approx(np.zeros(3))


def test_three_d_example_needs_a_nonzero_product() -> None:
    with pytest.raises(ValueError):
        ThreeDExample(A23=0.0, A32=1.0)


def test_closed_form_is_singular_at_the_origin(three_d: ThreeDExample) -> None:
    with pytest.raises(PoleError):
        example3d_closed_form(three_d, 0.0)


def test_T0_diagonalizes_the_lower_block(three_d: ThreeDExample) -> None:
    T0 = three_d.T0
    B = np.zeros((3, 3), dtype=complex)
    B[1, 2], B[2, 1] = three_d.A23, three_d.A32

    assert max_norm(np.linalg.solve(T0, B @ T0) - np.diag([0.0, 0.5, -0.5])) < 1e-14


@pytest.mark.parametrize("x", [0.7, 1.3])
def test_constant_residue_commutes_with_the_gauged_form(three_d: ThreeDExample, x: float) -> None:
    assert example3d_constant_bracket(three_d, x) < 1e-11


@pytest.mark.parametrize("x", [0.5, 1.7, 2.0])
def test_gauge_carries_the_constant_residue_to_the_closed_form(three_d: ThreeDExample, x: float) -> None:
    assert max_norm(example3d_gauge(three_d, x) - example3d_closed_form(three_d, x)) < 1e-10


def test_reduced_flow_agrees_with_the_phi_system() -> None:
    phi = np.array([0.3, -0.2 + 0.1j, 0.5, 0.1, -0.4j])
    x = 0.35

    assert phi_of(reduced_4d_rhs(skew_4d(phi), x)) == pytest.approx(phi_rhs(phi, x), abs=1e-14)


def test_omega_hat_needs_zero_diagonal_blocks() -> None:
    A = skew_4d(phi_from_omega(OMEGA_START))
    A[0, 1] = 0.5

    with pytest.raises(ValueError):
        omega_hat_4d(A, 0.5)


@pytest.mark.parametrize("x", [0.0, 1.0])
def test_four_d_reduction_is_singular_at_zero_and_one(x: float) -> None:
    with pytest.raises(PoleError):
        phi_rhs(np.ones(5), x)


def test_reduced_flow_stays_skew() -> None:
    A0 = skew_4d(phi_from_omega(OMEGA_START))

    A1 = integrate_reduced_4d(A0, 0.5, 0.9)

    assert max_norm(A1 + A1.T) < 1e-10


def test_omega_embedding_and_its_inverse() -> None:
    phi = phi_from_omega(OMEGA_START)

    assert omega_embedding(phi) == pytest.approx(np.array(OMEGA_START))
    with pytest.raises(ValueError):
        omega_embedding([0.1, 0.2, 0.3, 0.3, 0.0])


def test_embedding_matches_the_omega_integration() -> None:
    _, states = integrate_omega(OMEGA_START, 0.5, 0.9)

    A1 = integrate_reduced_4d(skew_4d(phi_from_omega(OMEGA_START)), 0.5, 0.9)

    assert phi_of(A1) == pytest.approx(phi_from_omega(states[-1].omega), abs=1e-9)


def test_omega_integration_conserves_the_quadratic_invariant() -> None:
    xs, states = integrate_omega(OMEGA_START, 0.5, 0.9, rtol=1e-12, points=9)

    assert len(states) == 9
    assert xs[-1] == pytest.approx(0.9)
    start = states[0].conserved
    assert max(abs(s.conserved - start) for s in states) <= 1e-10 * max(abs(start), 1.0)


def test_omega_fixed_point_stays_fixed() -> None:
    _, states = integrate_omega((0.0, 0.0, 0.7), 0.5, 0.9)

    assert max(abs(np.array(s.omega) - np.array([0.0, 0.0, 0.7])).max() for s in states) <= 1e-13


def test_pvi_rhs_values() -> None:
    w1, w2, w3 = pvi_rhs(OmegaState((1.0, 2.0, 3.0), 2.0))

    assert (w1, w2, w3) == pytest.approx((3.0, -3.0, 1.0))
