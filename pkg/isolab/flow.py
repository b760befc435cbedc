"""Deformation flows dA = [Σ_j ω̃_j dλ_j, A] along piecewise-linear λ-paths."""

from __future__ import annotations

from abc import ABC, abstractmethod
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field

import numpy as np
import numpy.typing as npt

from isolab.blocks import (
    BlockPartition,
    Lambda,
    Matrix,
    as_matrix,
    block_diagonal_part,
    block_inverse,
    frozen,
    max_norm,
    off_diagonal_part,
)
from isolab.errors import GaugeError, StratumError
from isolab.pfaffian import CoalescedSystem, PfaffianForm, build_form
from isolab.propagate import integrate_matrix
from isolab.tolerances import Tolerances

Point = npt.NDArray[np.complex128]


def _segment_margin(p0: Point, p1: Point) -> float:
    """min over t ∈ [0, 1] and a ≠ b of |λ_a(t) - λ_b(t)| on a linear segment."""
    worst = float("inf")
    for a in range(p0.size):
        for b in range(a + 1, p0.size):
            d0, d1 = p0[a] - p0[b], p1[a] - p1[b]
            dd = d1 - d0
            t = 0.0 if dd == 0 else float(np.clip(-(np.conj(dd) * d0).real / abs(dd) ** 2, 0.0, 1.0))
            worst = min(worst, abs(d0 + t * dd))
    return worst


@dataclass(frozen=True)
class DeformationPath:
    """Piecewise-linear path in ℂˢ; each segment takes an equal share of t ∈ [0, 1]."""

    waypoints: tuple[tuple[complex, ...], ...]
    partition: BlockPartition

    def __post_init__(self) -> None:
        points = tuple(tuple(complex(v) for v in p) for p in self.waypoints)
        if len(points) < 2:
            raise ValueError("a path needs at least two waypoints")
        if any(len(p) != self.partition.s for p in points):
            raise ValueError(f"every waypoint needs {self.partition.s} coordinates")
        object.__setattr__(self, "waypoints", points)

    @property
    def points(self) -> list[Point]:
        return [np.array(p, dtype=np.complex128) for p in self.waypoints]

    @property
    def segments(self) -> int:
        return len(self.waypoints) - 1

    @property
    def closed(self) -> bool:
        return self.waypoints[0] == self.waypoints[-1]

    @property
    def length(self) -> float:
        pts = self.points
        return float(sum(np.linalg.norm(b - a) for a, b in zip(pts[:-1], pts[1:])))

    @property
    def margin(self) -> float:
        pts = self.points
        return min(_segment_margin(a, b) for a, b in zip(pts[:-1], pts[1:]))

    def breakpoints(self) -> npt.NDArray[np.float64]:
        return np.linspace(0.0, 1.0, self.segments + 1)

    def _locate(self, t: float) -> tuple[int, float]:
        k = min(int(t * self.segments), self.segments - 1)
        return k, t * self.segments - k

    def point(self, t: float) -> Point:
        k, u = self._locate(t)
        pts = self.points
        return pts[k] + u * (pts[k + 1] - pts[k])

    def velocity(self, t: float, segment: int | None = None) -> Point:
        k = self._locate(t)[0] if segment is None else segment
        pts = self.points
        return self.segments * (pts[k + 1] - pts[k])

    def lambda_at(self, t: float) -> Lambda:
        return Lambda(tuple(self.point(t)), self.partition)

    def validate(self, eig_sep_tol: float) -> None:
        if self.margin < eig_sep_tol:
            raise StratumError(f"path leaves the stratum: margin {self.margin:.3e} < {eig_sep_tol:g}")


def straight_path(start: npt.ArrayLike, end: npt.ArrayLike, part: BlockPartition) -> DeformationPath:
    return DeformationPath((tuple(np.asarray(start)), tuple(np.asarray(end))), part)


def translation_path(start: npt.ArrayLike, shift: complex, part: BlockPartition) -> DeformationPath:
    """λ ↦ λ + shift·(1, ..., 1)."""
    p0 = np.asarray(start, dtype=np.complex128)
    return straight_path(p0, p0 + shift, part)


def scaling_path(start: npt.ArrayLike, factor: complex, part: BlockPartition) -> DeformationPath:
    """λ ↦ factor·λ along a straight segment."""
    p0 = np.asarray(start, dtype=np.complex128)
    return straight_path(p0, factor * p0, part)


def loop_path(start: npt.ArrayLike, directions: Sequence[npt.ArrayLike], part: BlockPartition) -> DeformationPath:
    """Closed polygon start → start + d_0 → start + d_0 + d_1 → ... → start."""
    p = np.asarray(start, dtype=np.complex128)
    points = [tuple(p)]
    for d in directions:
        p = p + np.asarray(d, dtype=np.complex128)
        points.append(tuple(p))
    points.append(points[0])
    return DeformationPath(tuple(points), part)


class DSpec(ABC):
    """Source of the block-diagonal gauge terms 𝒟_j(λ)."""

    name = "abstract"

    @abstractmethod
    def dblocks(self, lam: Point, part: BlockPartition) -> tuple[Matrix, ...] | None:
        """𝒟_0, ..., 𝒟_{s-1} at ``lam``; None means all zero."""

    def total(self, lam: Point, dlam: Point, part: BlockPartition) -> Matrix:
        """Σ_j 𝒟_j dλ_j."""
        blocks = self.dblocks(lam, part)
        if blocks is None:
            return np.zeros((part.n, part.n), dtype=np.complex128)
        return sum((D * d for D, d in zip(blocks, dlam)), start=np.zeros((part.n, part.n), dtype=np.complex128))


class ZeroD(DSpec):
    name = "zero"

    def dblocks(self, lam: Point, part: BlockPartition) -> None:
        return None


class ExplicitD(DSpec):
    """Constant 𝒟_j, or a callable λ ↦ (𝒟_0, ..., 𝒟_{s-1})."""

    name = "explicit"

    def __init__(self, blocks: Sequence[npt.ArrayLike] | Callable[[Point], Sequence[npt.ArrayLike]]):
        self._blocks = blocks

    def dblocks(self, lam: Point, part: BlockPartition) -> tuple[Matrix, ...]:
        raw = self._blocks(lam) if callable(self._blocks) else self._blocks
        out = tuple(as_matrix(D, part.n) for D in raw)
        for j, D in enumerate(out):
            if max_norm(off_diagonal_part(D, part)):
                raise ValueError(f"𝒟_{j} is not block-diagonal")
        return out


class TDerivedD(DSpec):
    """𝒟_j = ∂_jT·T⁻¹ by central differences, projected to the diagonal blocks."""

    name = "t-derived"

    def __init__(self, T: Callable[[Point], npt.ArrayLike], h: float = 1e-6):
        self.T = T
        self.h = h

    def dblocks(self, lam: Point, part: BlockPartition) -> tuple[Matrix, ...]:
        lam = np.asarray(lam, dtype=np.complex128)
        T_inv = np.linalg.inv(np.asarray(self.T(lam), dtype=np.complex128))
        out = []
        for j in range(lam.size):
            step = np.zeros(lam.size, dtype=np.complex128)
            step[j] = self.h
            dT = (np.asarray(self.T(lam + step)) - np.asarray(self.T(lam - step))) / (2 * self.h)
            out.append(block_diagonal_part(dT @ T_inv, part))
        return tuple(out)


def deformation_rhs(
    A: npt.ArrayLike, lam: Lambda, dlam: npt.ArrayLike, dspec: DSpec | None = None, eig_sep_tol: float = 1e-8
) -> Matrix:
    """[Σ_j ω̃_j dλ_j, A]."""
    dspec = dspec or ZeroD()
    part = lam.partition
    dlam = np.asarray(dlam, dtype=np.complex128)
    sys = CoalescedSystem(lam, A, dblocks=dspec.dblocks(lam.array, part))
    form = build_form(sys, eig_sep_tol)
    W = sum((w * d for w, d in zip(form.omega_tildes, dlam)), start=np.zeros((part.n, part.n), dtype=np.complex128))
    A = np.asarray(sys.A)
    return W @ A - A @ W


def _hausdorff(a: npt.NDArray[np.complex128], b: npt.NDArray[np.complex128]) -> float:
    if a.size == 0:
        return 0.0
    d = np.abs(a[:, None] - b[None, :])
    return float(max(d.min(axis=1).max(), d.min(axis=0).max()))


@dataclass(frozen=True)
class FlowSample:
    t: float
    lam: Point
    A: Matrix
    T: Matrix | None = None


@dataclass(frozen=True)
class FlowMonitors:
    """Per-sample monitor columns and their maxima."""

    spectrum_drift: tuple[float, ...]
    diag_block_drift: tuple[float, ...]
    jordan_drift: tuple[float, ...] = ()
    closure: float | None = None

    @property
    def max_spectrum_drift(self) -> float:
        return max(self.spectrum_drift, default=0.0)

    @property
    def max_diag_block_drift(self) -> float:
        return max(self.diag_block_drift, default=0.0)

    @property
    def max_jordan_drift(self) -> float | None:
        return max(self.jordan_drift) if self.jordan_drift else None

    def columns(self) -> dict[str, tuple[float, ...]]:
        out = {"spectrum_drift": self.spectrum_drift, "diag_block_drift": self.diag_block_drift}
        if self.jordan_drift:
            out["jordan_drift"] = self.jordan_drift
        return out


@dataclass(frozen=True)
class FlowResult:
    """Samples of A(λ(t)) at every accepted step of the integrator."""

    path: DeformationPath
    samples: tuple[FlowSample, ...]
    monitors: FlowMonitors
    dspec_name: str
    rtol: float
    steps: int
    flagged: bool = False
    warnings: tuple[str, ...] = field(default=())

    @property
    def final(self) -> FlowSample:
        return self.samples[-1]

    def pick(self, count: int) -> list[FlowSample]:
        """``count`` samples nearest to evenly spaced t values."""
        ts = np.array([s.t for s in self.samples])
        picked = []
        for target in np.linspace(0.0, 1.0, count):
            k = int(np.argmin(np.abs(ts - target)))
            if not picked or picked[-1] is not self.samples[k]:
                picked.append(self.samples[k])
        return picked


def integrate_flow(
    A0: npt.ArrayLike,
    path: DeformationPath,
    dspec: DSpec | None = None,
    tolerances: Tolerances | None = None,
    T0: npt.ArrayLike | None = None,
) -> FlowResult:
    """Integrate dA/dt = [Σ_j ω̃_j λ̇_j(t), A], optionally with dT/dt = 𝒟T.

    Every segment of the path is integrated separately; monitors are
    evaluated at every accepted step.

    Args:
        A0: A at the start of the path.
        path: The λ-path.
        dspec: Gauge terms 𝒟_j; zero by default.
        tolerances: Integrator and monitor tolerances.
        T0: Initial block-diagonal Jordanizer to carry along.

    Returns:
        FlowResult: Samples, monitors and a flag for monitor breaches.

    Raises:
        StratumError: If the path leaves the stratum.
        IntegrationError: On solver failure or step collapse.
    """
    tol = tolerances or Tolerances()
    dspec = dspec or ZeroD()
    part = path.partition
    n = part.n
    path.validate(tol.eig_sep_tol)
    A0 = as_matrix(A0, n)
    with_T = T0 is not None
    state = np.hstack([A0, as_matrix(T0, n)]) if with_T else A0

    def rhs_for(segment: int) -> Callable[[float, Matrix], Matrix]:
        dlam = path.velocity(0.0, segment)

        def rhs(t: float, Y: Matrix) -> Matrix:
            lam = path.lambda_at(t)
            A = Y[:, :n]
            dA = deformation_rhs(A, lam, dlam, dspec, tol.eig_sep_tol)
            if not with_T:
                return dA
            return np.hstack([dA, dspec.total(lam.array, dlam, part) @ Y[:, n:]])

        return rhs

    times, states = [0.0], [state]
    edges = path.breakpoints()
    for k in range(path.segments):
        ts, ys = integrate_matrix(
            rhs_for(k), states[-1], (edges[k], edges[k + 1]), tol.ode_rtol, tol.ode_atol, all_steps=True
        )
        times.extend(float(t) for t in ts[1:])
        states.extend(ys[1:])

    spec0 = np.linalg.eigvals(A0)
    D0 = block_diagonal_part(A0, part)
    J0 = None
    if with_T:
        T_start = state[:, n:]
        J0 = block_inverse(T_start, part) @ D0 @ T_start
    samples, sdrift, ddrift, jdrift = [], [], [], []
    for t, Y in zip(times, states):
        A = Y[:, :n]
        T = Y[:, n:] if with_T else None
        samples.append(FlowSample(t, path.point(t), frozen(A), None if T is None else frozen(T)))
        sdrift.append(_hausdorff(np.linalg.eigvals(A), spec0))
        ddrift.append(max_norm(block_diagonal_part(A, part) - D0))
        if T is not None:
            jdrift.append(max_norm(block_inverse(T, part) @ block_diagonal_part(A, part) @ T - J0))

    closure = max_norm(samples[-1].A - A0) if path.closed else None
    monitors = FlowMonitors(tuple(sdrift), tuple(ddrift), tuple(jdrift), closure)
    warnings = []
    if monitors.max_spectrum_drift > tol.monitor_fail:
        warnings.append(f"spectrum drift {monitors.max_spectrum_drift:.3e} above {tol.monitor_fail:g}")
    if isinstance(dspec, ZeroD) and monitors.max_diag_block_drift > tol.monitor_fail:
        warnings.append(f"diagonal-block drift {monitors.max_diag_block_drift:.3e} above {tol.monitor_fail:g}")
    if monitors.max_jordan_drift is not None and monitors.max_jordan_drift > tol.monitor_fail:
        warnings.append(f"T⁻¹A_D T drift {monitors.max_jordan_drift:.3e} above {tol.monitor_fail:g}")
    return FlowResult(
        path=path,
        samples=tuple(samples),
        monitors=monitors,
        dspec_name=dspec.name,
        rtol=tol.ode_rtol,
        steps=len(samples) - 1,
        flagged=bool(warnings),
        warnings=tuple(warnings),
    )


@dataclass(frozen=True)
class TFlowResult:
    """T along a path with the certificates of a holomorphic Jordanizer."""

    flow: FlowResult
    jordan_drift: float
    commutator_residual: float

    @property
    def final_T(self) -> Matrix:
        T = self.flow.final.T
        assert T is not None
        return T


def t_flow(
    T0: npt.ArrayLike,
    path: DeformationPath,
    dspec: DSpec,
    A0: npt.ArrayLike,
    tolerances: Tolerances | None = None,
) -> TFlowResult:
    """Integrate dT = 𝒟T together with the A-flow.

    Certifies that T⁻¹A_D T stays equal to its initial Jordan form and that
    [T⁻¹𝒟_jT, J] vanishes at every sample.
    """
    part = path.partition
    result = integrate_flow(A0, path, dspec, tolerances, T0=T0)
    T_start = np.asarray(result.samples[0].T)
    J = block_inverse(T_start, part) @ block_diagonal_part(A0, part) @ T_start
    worst = 0.0
    for sample in result.samples:
        T = np.asarray(sample.T)
        T_inv = block_inverse(T, part)
        blocks = dspec.dblocks(sample.lam, part) or ()
        for D in blocks:
            X = T_inv @ D @ T
            worst = max(worst, max_norm(X @ J - J @ X))
    return TFlowResult(
        flow=result,
        jordan_drift=result.monitors.max_jordan_drift or 0.0,
        commutator_residual=worst,
    )


def flowing_form(
    system: CoalescedSystem, dspec: DSpec | None = None, tolerances: Tolerances | None = None
) -> Callable[[Point], PfaffianForm]:
    """λ ↦ Pfaffian form with A carried there by the flow from ``system.lam``.

    Gives the curl stencil an A(λ) that solves the deformation equations.
    """
    tol = tolerances or Tolerances()
    dspec = dspec or ZeroD()
    part = system.partition
    lam0 = system.lam.array

    def form_at(lam: Point) -> PfaffianForm:
        lam = np.asarray(lam, dtype=np.complex128)
        A = system.A
        if np.any(lam != lam0):
            A = integrate_flow(system.A, straight_path(lam0, lam, part), dspec, tol).final.A
        moved = CoalescedSystem(system.lam.shifted(lam), A, dblocks=dspec.dblocks(lam, part))
        return build_form(moved, tol.eig_sep_tol)

    return form_at


def gauge_transform(
    A: npt.ArrayLike,
    omegas: Sequence[npt.ArrayLike],
    T: npt.ArrayLike,
    T_check: npt.ArrayLike,
    part: BlockPartition,
    tol: float = 1e-9,
) -> tuple[Matrix, list[Matrix]]:
    """Ǎ = Ť(T⁻¹AT)Ť⁻¹ and ω̌_j = Ť(T⁻¹ω_jT)Ť⁻¹.

    Raises:
        GaugeError: If T or Ť is not block-diagonal, or the two do not reduce
            A_D to the same Jordan form.
    """
    A = as_matrix(A, part.n)
    T = as_matrix(T, part.n)
    Tc = as_matrix(T_check, part.n)
    for name, M in (("T", T), ("Ť", Tc)):
        if max_norm(off_diagonal_part(M, part)):
            raise GaugeError(f"{name} is not block-diagonal")
    AD = block_diagonal_part(A, part)
    J = block_inverse(T, part) @ AD @ T
    Jc = block_inverse(Tc, part) @ AD @ Tc
    mismatch = max_norm(J - Jc)
    if mismatch > tol * max(max_norm(AD), 1.0):
        raise GaugeError(f"T and Ť are not Jordanizers of the same A_D (mismatch {mismatch:.3e})")
    P = Tc @ block_inverse(T, part)
    P_inv = block_inverse(P, part)
    return P @ A @ P_inv, [P @ np.asarray(w) @ P_inv for w in omegas]
