"""The deformation one-form of dY/dz = (Λ + A(λ)/z)Y and its consistency checks."""

from __future__ import annotations

from collections.abc import Callable, Sequence
from dataclasses import dataclass, field
from typing import TYPE_CHECKING

import numpy as np
import numpy.typing as npt

from isolab.blocks import (
    BlockPartition,
    JordanizationResult,
    Lambda,
    Matrix,
    as_matrix,
    block_diagonal_part,
    frozen,
    max_norm,
    off_diagonal_part,
    projector,
)
from isolab.errors import PoleError, StratumError

if TYPE_CHECKING:
    from isolab.levelt import LeveltData


@dataclass(frozen=True)
class CoalescedSystem:
    """Λ(λ) with fixed block partition, the residue A(λ) and optional 𝒟_j."""

    lam: Lambda
    A: Matrix
    reducer: JordanizationResult | None = None
    dblocks: tuple[Matrix, ...] | None = None

    def __post_init__(self) -> None:
        part = self.lam.partition
        object.__setattr__(self, "A", frozen(as_matrix(self.A, part.n)))
        if self.dblocks is not None:
            if len(self.dblocks) != part.s:
                raise ValueError(f"expected {part.s} 𝒟 matrices, got {len(self.dblocks)}")
            blocks = []
            for j, D in enumerate(self.dblocks):
                D = as_matrix(D, part.n)
                if max_norm(off_diagonal_part(D, part)) > 1e-13 * max(max_norm(D), 1.0):
                    raise ValueError(f"𝒟_{j} is not block-diagonal")
                blocks.append(frozen(block_diagonal_part(D, part)))
            object.__setattr__(self, "dblocks", tuple(blocks))

    @property
    def partition(self) -> BlockPartition:
        return self.lam.partition

    @property
    def n(self) -> int:
        return self.partition.n

    @property
    def s(self) -> int:
        return self.partition.s

    @property
    def Lambda(self) -> Matrix:
        return self.lam.matrix()

    def with_A(self, A: npt.ArrayLike) -> CoalescedSystem:
        return CoalescedSystem(self.lam, A, None, self.dblocks)

    def at(self, values: npt.ArrayLike, A: npt.ArrayLike | None = None) -> CoalescedSystem:
        """The same system at another λ, keeping A unless a new one is given."""
        return CoalescedSystem(self.lam.shifted(values), self.A if A is None else A, None, self.dblocks)


@dataclass(frozen=True)
class PfaffianForm:
    """ω_j, ω̃_j = ω_j + 𝒟_j and the projectors E_{p_j} of one system."""

    system: CoalescedSystem
    omegas: tuple[Matrix, ...]
    omega_tildes: tuple[Matrix, ...]
    e_projectors: tuple[Matrix, ...]


def build_omega(sys: CoalescedSystem, eig_sep_tol: float = 1e-8) -> list[Matrix]:
    """ω^{(j)}_{[a,b]} = A_{[a,b]}(δ_{aj} - δ_{bj})/(λ_a - λ_b), zero diagonal blocks.

    Raises:
        StratumError: If two λ_a are closer than ``eig_sep_tol``.
    """
    sys.lam.require_separated(eig_sep_tol)
    part = sys.partition
    lam = sys.lam.array
    idx = part.block_of()
    row, col = idx[:, None], idx[None, :]
    off = row != col
    gap = np.where(off, lam[row] - lam[col], 1.0)
    scaled = np.where(off, sys.A / gap, 0.0)
    return [np.where(row == j, scaled, 0.0) - np.where(col == j, scaled, 0.0) for j in range(part.s)]


def build_form(sys: CoalescedSystem, eig_sep_tol: float = 1e-8) -> PfaffianForm:
    omegas = build_omega(sys, eig_sep_tol)
    if sys.dblocks is None:
        tildes = [w.copy() for w in omegas]
    else:
        tildes = [w + D for w, D in zip(omegas, sys.dblocks)]
    return PfaffianForm(
        system=sys,
        omegas=tuple(frozen(w) for w in omegas),
        omega_tildes=tuple(frozen(w) for w in tildes),
        e_projectors=tuple(frozen(projector(sys.partition, j)) for j in range(sys.s)),
    )


def assemble_oneform(form: PfaffianForm, z: complex, direction: int) -> Matrix:
    """Coefficient of one differential of ω(z, λ).

    Args:
        form: The Pfaffian form.
        z: The point in the z-plane.
        direction: 0 for dz, j + 1 for dλ_j.

    Returns:
        Matrix: Λ + A/z for dz, zE_{p_j} + ω̃_j for dλ_j.

    Raises:
        PoleError: For the dz coefficient at z = 0.
    """
    sys = form.system
    if direction == 0:
        if z == 0:
            raise PoleError("dz coefficient has a pole at z = 0")
        return sys.Lambda + sys.A / z
    if not 1 <= direction <= sys.s:
        raise IndexError(f"direction {direction} out of range 0..{sys.s}")
    j = direction - 1
    return z * form.e_projectors[j] + form.omega_tildes[j]


@dataclass(frozen=True)
class ConstraintReport:
    """Max-norm residuals of the linear identities satisfied by ω̃_j."""

    lambda_residual: float
    projector_residual: float
    sum_residual: float
    block_diagonal_residual: float
    scale: float
    tolerance: float

    @property
    def residuals(self) -> dict[str, float]:
        return {
            "lambda_commutator": self.lambda_residual,
            "projector_symmetry": self.projector_residual,
            "omega_sum": self.sum_residual,
            "diag_block_commutator": self.block_diagonal_residual,
        }

    @property
    def passed(self) -> bool:
        bound = self.tolerance * self.scale
        return all(value <= bound for value in self.residuals.values())


def block_diagonal_commutator_residual(form: PfaffianForm) -> float:
    """Largest diagonal block of [ω_i, ω_j]; it vanishes identically."""
    part = form.system.partition
    worst = 0.0
    for i in range(len(form.omegas)):
        for j in range(i + 1, len(form.omegas)):
            wi, wj = form.omegas[i], form.omegas[j]
            worst = max(worst, max_norm(block_diagonal_part(wi @ wj - wj @ wi, part)))
    return worst


def check_linear_constraints(form: PfaffianForm, constraint_tol: float = 1e-12) -> ConstraintReport:
    """Evaluate [Λ, ω̃_j] = [E_{p_j}, A] and [E_{p_j}, ω̃_k] = [E_{p_k}, ω̃_j].

    Residuals are absolute; the pass bound is ``constraint_tol`` relative to
    max(‖A‖, ‖ω̃‖, 1).
    """
    sys = form.system
    L, A = sys.Lambda, np.asarray(sys.A)
    E, W = form.e_projectors, form.omega_tildes
    lam_res = max(max_norm(L @ w - w @ L - (e @ A - A @ e)) for e, w in zip(E, W))
    proj_res = 0.0
    for j in range(sys.s):
        for k in range(j + 1, sys.s):
            lhs = E[j] @ W[k] - W[k] @ E[j]
            rhs = E[k] @ W[j] - W[j] @ E[k]
            proj_res = max(proj_res, max_norm(lhs - rhs))
    scale = max([max_norm(A), 1.0] + [max_norm(w) for w in W])
    return ConstraintReport(
        lambda_residual=lam_res,
        projector_residual=proj_res,
        sum_residual=max_norm(sum(form.omegas)),
        block_diagonal_residual=block_diagonal_commutator_residual(form),
        scale=scale,
        tolerance=constraint_tol,
    )


@dataclass(frozen=True)
class CurlReport:
    """Finite-difference integrability residuals around one λ point.

    ``ratio`` and ``dcurl_ratio`` are Richardson ratios
    ‖R(H) - R(H/2)‖ / ‖R(H/2) - R(H/4)‖ (≈ 4 for a second-order stencil);
    None when the residual does not depend on the step above rounding.
    """

    h: float
    max_residual: float
    dcurl_residual: float
    pair_residuals: dict[tuple[int, int], float] = field(default_factory=dict)
    ratio: float | None = None
    dcurl_ratio: float | None = None

    def passed(self, tol: float) -> bool:
        return self.max_residual <= tol and self.dcurl_residual <= tol


FormAt = Callable[[npt.NDArray[np.complex128]], PfaffianForm]


def _curls(form_at: FormAt, lam0: npt.NDArray[np.complex128], h: float) -> tuple[list[Matrix], list[Matrix]]:
    """All pairs (j < k) of ∂_jω̃_k - ∂_kω̃_j - [ω̃_j, ω̃_k] and its 𝒟 analogue."""
    base = form_at(lam0)
    s = base.system.s
    d_tilde, d_blocks = [], []
    for j in range(s):
        step = np.zeros(s, dtype=np.complex128)
        step[j] = h
        plus, minus = form_at(lam0 + step), form_at(lam0 - step)
        d_tilde.append([(p - m) / (2 * h) for p, m in zip(plus.omega_tildes, minus.omega_tildes)])
        d_blocks.append([(p - m) / (2 * h) for p, m in zip(_dblocks(plus), _dblocks(minus))])
    W, D = base.omega_tildes, _dblocks(base)
    curls, dcurls = [], []
    for j in range(s):
        for k in range(j + 1, s):
            curls.append(d_tilde[j][k] - d_tilde[k][j] - (W[j] @ W[k] - W[k] @ W[j]))
            dcurls.append(d_blocks[j][k] - d_blocks[k][j] - (D[j] @ D[k] - D[k] @ D[j]))
    return curls, dcurls


def _dblocks(form: PfaffianForm) -> tuple[Matrix, ...]:
    sys = form.system
    if sys.dblocks is None:
        return tuple(np.zeros((sys.n, sys.n), dtype=np.complex128) for _ in range(sys.s))
    return sys.dblocks


def _richardson(stack: Sequence[list[Matrix]], scale: float) -> float | None:
    def flat(ms: list[Matrix]) -> npt.NDArray[np.complex128]:
        return np.concatenate([m.ravel() for m in ms]) if ms else np.zeros(0)

    r0, r1, r2 = (flat(ms) for ms in stack)
    if r0.size == 0:
        return None
    num, den = np.max(np.abs(r0 - r1)), np.max(np.abs(r1 - r2))
    if den <= 1e-9 * max(scale, 1.0):
        return None
    return float(num / den)


def curl_residual(
    form_at: FormAt,
    lam0: npt.ArrayLike,
    h: float | None = None,
    fd_step: float = 1e-5,
) -> CurlReport:
    """Central-difference integrability check of the λ-part of the form.

    Args:
        form_at: Maps a λ point to the Pfaffian form of the system there.
        lam0: The centre of the stencil.
        h: Step; defaults to ``fd_step`` times the stratum margin.
        fd_step: Relative step used when ``h`` is omitted.

    Returns:
        CurlReport: Residuals at ``h`` plus Richardson ratios at larger steps.

    Raises:
        StratumError: If the stencil can leave the stratum.
    """
    lam0 = np.asarray(lam0, dtype=np.complex128)
    margin = form_at(lam0).system.lam.margin
    if not np.isfinite(margin):
        margin = 1.0
    if h is None:
        h = fd_step * margin
    if h >= margin / 2:
        raise StratumError(f"stencil step {h:g} too large for stratum margin {margin:.3e}")
    curls, dcurls = _curls(form_at, lam0, h)
    pairs = [(j, k) for j in range(lam0.size) for k in range(j + 1, lam0.size)]

    H = min(1e-2, margin / 8)
    ladder = [_curls(form_at, lam0, H / 2**i) for i in range(3)]
    scale = max([1.0] + [max_norm(w) for w in form_at(lam0).omega_tildes])
    return CurlReport(
        h=h,
        max_residual=max((max_norm(c) for c in curls), default=0.0),
        dcurl_residual=max((max_norm(c) for c in dcurls), default=0.0),
        pair_residuals={p: max_norm(c) for p, c in zip(pairs, curls)},
        ratio=_richardson([c for c, _ in ladder], scale),
        dcurl_ratio=_richardson([d for _, d in ladder], scale),
    )


@dataclass(frozen=True)
class PoleShiftedForm:
    """The Pfaffian form of dY/dz = (Λ + A/(z - a))Y with the pole as a parameter.

    ``phi`` is G(F₁ + [F₁, J] + R₁)G⁻¹ from the Levelt data at z = a.
    """

    form: PfaffianForm
    a: complex
    omega0: Matrix
    phi: Matrix
    levelt: LeveltData

    @property
    def phi_residual(self) -> float:
        """‖φ - Λ‖; φ reduces to Λ for every admissible Levelt basis."""
        return max_norm(self.phi - self.form.system.Lambda)

    def dz(self, z: complex) -> Matrix:
        if z == self.a:
            raise PoleError(f"dz coefficient has a pole at z = a = {self.a}")
        sys = self.form.system
        return sys.Lambda + sys.A / (z - self.a)

    def dlambda(self, z: complex, j: int) -> Matrix:
        return assemble_oneform(self.form, z, j + 1)

    def da(self, z: complex) -> Matrix:
        if z == self.a:
            raise PoleError(f"da coefficient has a pole at z = a = {self.a}")
        return self.omega0 - self.form.system.A / (z - self.a)

    def dlambda_at_pole(self, j: int) -> Matrix:
        """ω_j(a) = aE_{p_j} + ω̃_j, the dλ_j coefficient of the G equation."""
        return self.dlambda(self.a, j)

    def g_coefficient_a(self) -> Matrix:
        """The da coefficient ω₀ + φ of dG."""
        return self.omega0 + self.phi

    def dA_dlambda(self, j: int) -> Matrix:
        w = self.dlambda_at_pole(j)
        A = self.form.system.A
        return w @ A - A @ w

    def dA_da(self) -> Matrix:
        M = self.form.system.Lambda + self.omega0
        A = self.form.system.A
        return M @ A - A @ M


def build_pole_shifted(
    sys: CoalescedSystem,
    a: complex,
    levelt: LeveltData | None = None,
    K: int = 12,
    omega0: npt.ArrayLike | None = None,
    eig_sep_tol: float = 1e-8,
    int_tol: float = 1e-7,
) -> PoleShiftedForm:
    """Extend the form by the pole position ``a``.

    The Levelt data of the shifted system does not depend on ``a``: the
    translation z ↦ z - a turns Λ + A/(z - a) into Λ + A/ζ up to the scalar
    gauge e^{aΛ}, which commutes with Λ and leaves the recursion unchanged.

    Args:
        sys: The system with its pole at the origin.
        a: Pole position.
        levelt: Precomputed Levelt data of ``sys``; computed when omitted.
        K: Truncation used when computing the Levelt data.
        omega0: Block-diagonal da gauge term, zero by default.
        eig_sep_tol: Stratum separation tolerance.
        int_tol: Resonance detection tolerance.

    Returns:
        PoleShiftedForm: The coefficients and φ.

    Raises:
        UnsupportedStructureError: If the Levelt recursion is outside the
            supported structures.
    """
    from isolab.levelt import levelt_series

    data = levelt if levelt is not None else levelt_series(sys, K, int_tol=int_tol)
    form = build_form(sys, eig_sep_tol)
    w0 = np.zeros((sys.n, sys.n), dtype=np.complex128) if omega0 is None else as_matrix(omega0, sys.n)
    if max_norm(off_diagonal_part(w0, sys.partition)):
        raise ValueError("ω₀ must be block-diagonal")
    F1 = data.F[1] if len(data.F) > 1 else np.zeros_like(w0)
    J = np.asarray(data.J)
    R1 = data.R_terms[0] if data.R_terms else np.zeros_like(w0)
    G = np.asarray(data.G0)
    phi = G @ (F1 + F1 @ J - J @ F1 + R1) @ np.linalg.inv(G)
    return PoleShiftedForm(form=form, a=complex(a), omega0=frozen(w0), phi=frozen(phi), levelt=data)
