"""Worked systems: the rigid 3×3 case with closed-form solutions and the 4×4 case
whose skew reduction is a Painlevé VI system in the (Ω₁, Ω₂, Ω₃) form."""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
import numpy.typing as npt

from isolab.blocks import BlockPartition, Lambda, Matrix, as_matrix, block_diagonal_part, max_norm
from isolab.errors import PoleError
from isolab.pfaffian import CoalescedSystem, build_omega
from isolab.propagate import integrate_matrix

PARTITION_3D = BlockPartition((1, 2))
PARTITION_4D = BlockPartition((2, 1, 1))


def _power(x: complex, p: complex) -> complex:
    """Principal branch x^p = exp(p Log x)."""
    return complex(np.exp(p * np.log(complex(x))))


@dataclass(frozen=True)
class ThreeDExample:
    """A with zero diagonal, constant A₂₃, A₃₂ and λ = (x, 0), partition (1, 2).

    T(x) = 𝒯₀·diag(a, b₀x^ρ a, c₀x^{-ρ} a) with ρ = √(A₂₃A₃₂).
    """

    A23: complex
    A32: complex
    c: tuple[complex, complex, complex, complex] = (1.0, 0.0, 0.0, 1.0)
    a: complex = 1.0
    b0: complex = 1.0
    c0: complex = 1.0

    def __post_init__(self) -> None:
        if self.A23 * self.A32 == 0:
            raise ValueError("the 3×3 example needs A₂₃A₃₂ ≠ 0")
        if len(self.c) != 4:
            raise ValueError("the 3×3 example needs four constants c₁..c₄")

    @property
    def rho(self) -> complex:
        return complex(np.sqrt(complex(self.A23 * self.A32)))

    @property
    def T0(self) -> Matrix:
        """𝒯₀: diagonalizes the [2,2] block [[0, A₂₃], [A₃₂, 0]] to diag(ρ, -ρ)."""
        k = self.A23 / self.rho
        return np.array([[1, 0, 0], [0, k, -k], [0, 1, 1]], dtype=np.complex128)


def _require_nonzero(x: complex) -> None:
    if x == 0:
        raise PoleError("the 3×3 example is singular at x = 0")


def example3d_closed_form(ex: ThreeDExample, x: complex) -> Matrix:
    """A(x) solving dA/dx = [ω₁(x), A] with ω₁ built at λ = (x, 0)."""
    _require_nonzero(x)
    c1, c2, c3, c4 = ex.c
    rho = ex.rho
    up, down = _power(x, rho), _power(x, -rho)
    return np.array(
        [
            [0, c1 * up + c2 * down, rho / ex.A32 * (c1 * up - c2 * down)],
            [c3 * up + c4 * down, 0, ex.A23],
            [-rho / ex.A23 * (c3 * up - c4 * down), ex.A32, 0],
        ],
        dtype=np.complex128,
    )


def example3d_T(ex: ThreeDExample, x: complex) -> Matrix:
    _require_nonzero(x)
    rho = ex.rho
    return ex.T0 @ np.diag([ex.a, ex.b0 * _power(x, rho) * ex.a, ex.c0 * _power(x, -rho) * ex.a])


def example3d_dT(ex: ThreeDExample, x: complex) -> Matrix:
    """dT/dx in closed form."""
    _require_nonzero(x)
    rho = ex.rho
    return ex.T0 @ np.diag([0, rho * ex.b0 * _power(x, rho - 1) * ex.a, -rho * ex.c0 * _power(x, -rho - 1) * ex.a])


def example3d_system(ex: ThreeDExample, x: complex, A: npt.ArrayLike | None = None) -> CoalescedSystem:
    """The coalesced system at λ = (x, 0), with the closed-form A unless one is given."""
    lam = Lambda((x, 0.0), PARTITION_3D)
    return CoalescedSystem(lam, example3d_closed_form(ex, x) if A is None else A)


def example3d_gauge(ex: ThreeDExample, x: complex, x0: complex = 1.0) -> Matrix:
    """𝒯(x₀)(𝒯(x)⁻¹ A(x₀) 𝒯(x))𝒯(x₀)⁻¹: the constant-A solution carried to the variable one."""
    T, Tr = example3d_T(ex, x), example3d_T(ex, x0)
    A0 = example3d_closed_form(ex, x0)
    return Tr @ np.linalg.solve(T, A0 @ T) @ np.linalg.inv(Tr)


def example3d_constant_bracket(ex: ThreeDExample, x: complex, x0: complex = 1.0) -> float:
    """‖[ω₁(x) + T'T⁻¹, A₀]‖: A₀ = A(x₀) stays constant under the T-gauge."""
    A0 = example3d_closed_form(ex, x0)
    omega = build_omega(example3d_system(ex, x, A0))[0]
    W = omega + example3d_dT(ex, x) @ np.linalg.inv(example3d_T(ex, x))
    return max_norm(W @ A0 - A0 @ W)


def example3d_T_of_lambda(ex: ThreeDExample):
    """λ ↦ T(λ₀ - λ₁), for T-derived gauge terms."""
    return lambda lam: example3d_T(ex, complex(lam[0] - lam[1]))


def _require_regular(x: complex) -> None:
    if x in (0, 1):
        raise PoleError(f"the 4×4 reduction is singular at x = {x}")


def system_4d(A4: npt.ArrayLike, x: complex) -> CoalescedSystem:
    """λ = (0, x, 1) with partition (2, 1, 1)."""
    _require_regular(x)
    return CoalescedSystem(Lambda((0.0, x, 1.0), PARTITION_4D), A4)


def omega_hat_4d(A4: npt.ArrayLike, x: complex) -> Matrix:
    """ω̂₂(x): [1,2] = A_{[1,2]}/x, [2,1] = A_{[2,1]}/x, [2,3] = A_{[2,3]}/(x-1), [3,2] = A_{[3,2]}/(x-1)."""
    A4 = as_matrix(A4, 4)
    if max_norm(block_diagonal_part(A4, PARTITION_4D)) > 1e-8 * max(1.0, max_norm(A4)):
        raise ValueError("the 4×4 reduction needs zero diagonal blocks")
    return build_omega(system_4d(A4, x))[1]


def reduced_4d_rhs(A4: npt.ArrayLike, x: complex) -> Matrix:
    """dA/dx = [ω̂₂(x), A]."""
    W = omega_hat_4d(A4, x)
    A4 = np.asarray(A4, dtype=np.complex128)
    return W @ A4 - A4 @ W


def skew_4d(phi: Sequence[complex]) -> Matrix:
    """Skew A with A₁₃ = φ₁, A₂₃ = φ₂, A₁₄ = φ₃, A₂₄ = φ₄, A₃₄ = φ₅."""
    p1, p2, p3, p4, p5 = phi
    U = np.array([[0, 0, p1, p3], [0, 0, p2, p4], [0, 0, 0, p5], [0, 0, 0, 0]], dtype=np.complex128)
    return U - U.T


def phi_of(A4: npt.ArrayLike) -> npt.NDArray[np.complex128]:
    A = np.asarray(A4, dtype=np.complex128)
    return np.array([A[0, 2], A[1, 2], A[0, 3], A[1, 3], A[2, 3]])


def phi_rhs(phi: Sequence[complex], x: complex) -> npt.NDArray[np.complex128]:
    """The reduced flow written in φ₁..φ₅."""
    _require_regular(x)
    p1, p2, p3, p4, p5 = phi
    return np.array(
        [
            p3 * p5 / (x - 1),
            p4 * p5 / (x - 1),
            p1 * p5 / (x * (1 - x)),
            p2 * p5 / (x * (1 - x)),
            -(p1 * p3 + p2 * p4) / x,
        ],
        dtype=np.complex128,
    )


def omega_embedding(phi: Sequence[complex]) -> npt.NDArray[np.complex128]:
    """Ω = (φ₅, √2φ₁, -√2φ₃) on the slice φ₁ = φ₂, φ₃ = φ₄."""
    p1, p2, p3, p4, p5 = phi
    if abs(p1 - p2) > 1e-12 * max(1.0, abs(p1)) or abs(p3 - p4) > 1e-12 * max(1.0, abs(p3)):
        raise ValueError("the Ω embedding needs φ₁ = φ₂ and φ₃ = φ₄")
    r2 = np.sqrt(2.0)
    return np.array([p5, r2 * p1, -r2 * p3], dtype=np.complex128)


def phi_from_omega(omega: Sequence[complex]) -> npt.NDArray[np.complex128]:
    """Inverse of ``omega_embedding``: the point (Ω₂/√2, Ω₂/√2, -Ω₃/√2, -Ω₃/√2, Ω₁) of the slice."""
    w1, w2, w3 = omega
    r2 = np.sqrt(2.0)
    return np.array([w2 / r2, w2 / r2, -w3 / r2, -w3 / r2, w1], dtype=np.complex128)


@dataclass(frozen=True)
class OmegaState:
    omega: tuple[complex, complex, complex]
    x: complex

    @property
    def conserved(self) -> complex:
        """Ω₁² + Ω₂² + Ω₃²."""
        return complex(sum(w * w for w in self.omega))


def pvi_rhs(state: OmegaState) -> tuple[complex, complex, complex]:
    """dΩ₁ = Ω₂Ω₃/x, dΩ₂ = Ω₁Ω₃/(1-x), dΩ₃ = Ω₁Ω₂/(x(x-1))."""
    x = state.x
    _require_regular(x)
    w1, w2, w3 = state.omega
    return (w2 * w3 / x, w1 * w3 / (1 - x), w1 * w2 / (x * (x - 1)))


def integrate_omega(
    omega0: Sequence[complex], x0: complex, x1: complex, rtol: float = 1e-12, atol: float = 1e-14, points: int | None = None
) -> tuple[npt.NDArray[np.complex128], list[OmegaState]]:
    """Integrate the Ω-system along the straight segment x0 → x1."""
    dx = x1 - x0

    def rhs(t: float, Y: Matrix) -> Matrix:
        state = OmegaState(tuple(Y[:, 0]), x0 + t * dx)
        return dx * np.array(pvi_rhs(state), dtype=np.complex128)[:, None]

    t_eval = None if points is None else np.linspace(0.0, 1.0, points)
    ts, ys = integrate_matrix(rhs, np.asarray(omega0, dtype=np.complex128)[:, None], (0.0, 1.0), rtol, atol, t_eval)
    xs = x0 + ts * dx
    return xs, [OmegaState(tuple(complex(v) for v in y[:, 0]), complex(x)) for x, y in zip(xs, ys)]


def integrate_reduced_4d(
    A0: npt.ArrayLike, x0: complex, x1: complex, rtol: float = 1e-12, atol: float = 1e-14
) -> Matrix:
    """A(x1) for dA/dx = [ω̂₂(x), A] started from A(x0) = A0."""
    dx = x1 - x0
    _, ys = integrate_matrix(lambda t, A: dx * reduced_4d_rhs(A, x0 + t * dx), as_matrix(A0, 4), (0.0, 1.0), rtol, atol)
    return ys[-1]
