"""Named systems shipped with the lab, and the T evaluators documents can refer to."""

from __future__ import annotations

import dataclasses
from collections.abc import Callable, Mapping
from typing import Any

import numpy as np

from isolab.blocks import BlockPartition, Lambda
from isolab.caustic import CausticModel, MetricModel, caustic_restricted_system
from isolab.flow import straight_path
from isolab.pfaffian import CoalescedSystem
from isolab.showcase import (
    PARTITION_3D,
    PARTITION_4D,
    ThreeDExample,
    example3d_closed_form,
    example3d_system,
    example3d_T_of_lambda,
    integrate_omega,
    phi_from_omega,
    skew_4d,
)
from isolab.system_spec import SystemSpec, TEvaluator, parse_complex

EXAMPLE_3D = ThreeDExample(A23=1.0, A32=0.25)
OMEGA_START = (0.3, 0.2, 0.1)


def three_d_example() -> SystemSpec:
    """ρ = 1/2, c = (1, 0, 0, 1), flowed along λ = (x, 0) from x = 1 to x = 2."""
    return SystemSpec(
        name="3d-example",
        system=example3d_system(EXAMPLE_3D, 1.0),
        path=straight_path((1.0, 0.0), (2.0, 0.0), PARTITION_3D),
        expected_A=example3d_closed_form(EXAMPLE_3D, 2.0),
    )


def frozen_three_d() -> SystemSpec:
    """The 3D system with A held fixed along the same path: must fail the audit."""
    return dataclasses.replace(three_d_example(), name="frozen-3d", expected_A=None, frozen=True)


def four_d_omega() -> SystemSpec:
    """Skew 4×4 system on the slice φ₁ = φ₂, φ₃ = φ₄ over x: 0.5 → 0.9.

    The expected end point comes from integrating the Ω-system directly.
    """
    x0, x1 = 0.5, 0.9
    _, states = integrate_omega(OMEGA_START, x0, x1)
    A0 = skew_4d(phi_from_omega(OMEGA_START))
    return SystemSpec(
        name="4d-omega",
        system=CoalescedSystem(Lambda((0.0, x0, 1.0), PARTITION_4D), A0),
        path=straight_path((0.0, x0, 1.0), (0.0, x1, 1.0), PARTITION_4D),
        expected_A=skew_4d(phi_from_omega(states[-1].omega)),
    )


def caustic_example() -> SystemSpec:
    """m = 3, constant metric η̃₁₁ = 0.3, η̃₁₂ = 1, one extra block at u₃ = 1."""
    model = CausticModel(3, MetricModel.constant(0.3, 1.0), np.array([[0.2], [0.1]]))
    t1, u = 0.0, (1.0,)
    restricted = caustic_restricted_system(model, t1, u)
    return SystemSpec(
        name="caustic",
        system=restricted.system,
        T=restricted.T,
        caustic=model,
        caustic_point=(t1, u),
    )


def block_diagonal() -> SystemSpec:
    """A = A_D: every bracket vanishes and the flow is stationary."""
    A = np.zeros((3, 3), dtype=np.complex128)
    A[:2, :2] = [[0.3, 0.1], [0.2, -0.1]]
    A[2, 2] = 0.25
    part = BlockPartition((2, 1))
    return SystemSpec(
        name="block-diagonal",
        system=CoalescedSystem(Lambda((0.0, 1.0), part), A),
        path=straight_path((0.0, 1.0), (0.0, 2.0), part),
        expected_A=A,
    )


PRESETS: dict[str, Callable[[], SystemSpec]] = {
    "3d-example": three_d_example,
    "4d-omega": four_d_omega,
    "caustic": caustic_example,
    "block-diagonal": block_diagonal,
    "frozen-3d": frozen_three_d,
}


def _three_d_T(params: Mapping[str, Any]) -> Callable[[np.ndarray], np.ndarray]:
    """T(λ₀ - λ₁) of the 3D example; params A23, A32, a, b0, c0 override the defaults."""
    values = {key: parse_complex(value, f"dspec.params.{key}") for key, value in params.items()}
    unknown = set(values) - {"A23", "A32", "a", "b0", "c0"}
    if unknown:
        raise ValueError(f"unknown parameters {sorted(unknown)}")
    return example3d_T_of_lambda(dataclasses.replace(EXAMPLE_3D, **values))


T_EVALUATORS: dict[str, TEvaluator] = {"3d-example": _three_d_T}
