"""Monodromy data at 0 and ∞ and the strong-isomonodromy audit along a flow."""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np
import numpy.typing as npt

from isolab.blocks import Matrix, frozen, jordanization_from, max_norm
from isolab.errors import ConditioningError, IsolabError
from isolab.flow import DeformationPath, FlowMonitors, FlowResult, FlowSample
from isolab.infinity import (
    FormalInfinityData,
    SectorSolution,
    StokesGeometry,
    choose_admissible_tau,
    formal_series,
    sector_solution,
    stokes_rays,
)
from isolab.levelt import LeveltData, certified_radius, levelt_series
from isolab.pfaffian import CoalescedSystem
from isolab.propagate import loop_around_origin, transport_log
from isolab.tolerances import Tolerances


def centred(sys: CoalescedSystem) -> CoalescedSystem:
    """Shift λ by its mean; Stokes and connection data are unchanged."""
    lam = sys.lam.array
    return CoalescedSystem(sys.lam.shifted(lam - lam.mean()), sys.A, sys.reducer, sys.dblocks)


def _coef(sys: CoalescedSystem):
    L, A = sys.Lambda, np.asarray(sys.A)
    return lambda z: L + A / z


def monodromy_at_zero(
    sys: CoalescedSystem, levelt: LeveltData, r: float | None = None, angle: float = 0.0, tolerances: Tolerances | None = None
) -> Matrix:
    """Y⁻¹ Y_continued for Y⁽⁰⁾ carried once counter-clockwise around z = 0.

    Equals e^{2πiL⁽⁰⁾} up to integration error.
    """
    tol = tolerances or Tolerances()
    radius = certified_radius(levelt) if r is None else r
    w0 = np.log(radius) + 1j * angle
    Y = levelt.fundamental(np.exp(w0), w0)
    Y_cont = loop_around_origin(_coef(sys), Y, w0, 1, tol.ode_rtol, tol.ode_atol)
    return np.linalg.solve(Y, Y_cont)


def stokes_structure_residual(S: npt.ArrayLike, sys: CoalescedSystem, direction: float) -> float:
    """Largest entry violating the unipotent dominance pattern of a Stokes matrix.

    Block (a, b) with a ≠ b may be nonzero only if Re(λ_a e^{iθ}) < Re(λ_b e^{iθ})
    on the ray θ = ``direction``; diagonal blocks must be identities.
    """
    part = sys.partition
    S = np.asarray(S)
    key = (sys.lam.array * np.exp(1j * direction)).real
    worst = 0.0
    for a in range(part.s):
        for b in range(part.s):
            blk = S[part.span(a), part.span(b)]
            if a == b:
                worst = max(worst, max_norm(blk - np.eye(part.sizes[a])))
            elif key[a] > key[b]:
                worst = max(worst, max_norm(blk))
    return worst


def dominance_order(sys: CoalescedSystem, direction: float) -> tuple[int, ...]:
    """Blocks sorted by increasing Re(λ_a e^{iθ})."""
    key = (sys.lam.array * np.exp(1j * direction)).real
    return tuple(int(a) for a in np.argsort(key, kind="stable"))


@dataclass(frozen=True)
class StokesResult:
    S0: Matrix
    S1: Matrix
    spread0: float
    spread1: float
    structure0: float
    structure1: float
    sectors: tuple[SectorSolution, SectorSolution]
    order: tuple[int, ...]


def _overlap_angles(geom: StokesGeometry, centre: float, points: int) -> npt.NDArray[np.float64]:
    half = 0.25 * min(geom.margin or np.pi / 2, np.pi / 2)
    return centre + np.linspace(-half, half, points) if points > 1 else np.array([centre])


def _average(mats: Sequence[Matrix]) -> tuple[Matrix, float]:
    mean = sum(mats) / len(mats)
    return mean, max(max_norm(m - mean) for m in mats)


def stokes_matrices(
    sys: CoalescedSystem,
    geom: StokesGeometry,
    fdata: FormalInfinityData,
    tolerances: Tolerances | None = None,
    sectors: tuple[SectorSolution, SectorSolution] | None = None,
    spread_budget: float = 1e-4,
) -> StokesResult:
    """𝕊₀ = Y₀⁻¹Y₁ near arg z = τ and 𝕊₁ = Y₁⁻¹Y₂ near τ + π.

    Y₂ is not integrated separately: Y₂(z) = Y₀(z e^{-2πi}) e^{2πiL}.

    Raises:
        ConditioningError: If the overlap samples disagree beyond ``spread_budget``.
    """
    tol = tolerances or Tolerances()
    Y0, Y1 = sectors or (sector_solution(sys, geom, fdata, 0, tol), sector_solution(sys, geom, fdata, 1, tol))
    tau = float(geom.tau)
    e2piL = fdata.monodromy_factor()
    s0 = [np.linalg.solve(Y0.evaluate(a), Y1.evaluate(a)) for a in _overlap_angles(geom, tau, tol.stokes_points)]
    s1 = [
        np.linalg.solve(Y1.evaluate(a), Y0.evaluate(a - 2 * np.pi) @ e2piL)
        for a in _overlap_angles(geom, tau + np.pi, tol.stokes_points)
    ]
    S0, spread0 = _average(s0)
    S1, spread1 = _average(s1)
    scale = max(max_norm(S0), max_norm(S1), 1.0)
    if max(spread0, spread1) > spread_budget * scale:
        raise ConditioningError(f"Stokes overlap spread {max(spread0, spread1):.3e} above budget")
    return StokesResult(
        S0=frozen(S0),
        S1=frozen(S1),
        spread0=spread0,
        spread1=spread1,
        structure0=stokes_structure_residual(S0, sys, tau),
        structure1=stokes_structure_residual(S1, sys, tau + np.pi),
        sectors=(Y0, Y1),
        order=dominance_order(sys, tau),
    )


@dataclass(frozen=True)
class ConnectionResult:
    C0: Matrix
    spread: float
    radius: float
    angles: tuple[float, ...]


def central_connection(
    sys: CoalescedSystem,
    levelt: LeveltData,
    sector0: SectorSolution,
    geom: StokesGeometry,
    tolerances: Tolerances | None = None,
    spread_budget: float = 1e-4,
) -> ConnectionResult:
    """C₀ = Y⁽⁰⁾(z)⁻¹Y₀(z) averaged over an annulus arc inside 𝒮₀.

    Y⁽⁰⁾ is taken on the branch with arg z ∈ (τ - π, τ + π).

    Raises:
        ConditioningError: If the annulus samples disagree beyond ``spread_budget``.
    """
    tol = tolerances or Tolerances()
    tau = float(geom.tau)
    r_eval = sector0.r_eval
    r0 = min(certified_radius(levelt), r_eval)
    r_c = float(np.sqrt(r0 * r_eval))
    k = tol.annulus_points
    angles = tau - np.pi + np.pi * (np.arange(k) + 0.5) / k
    coef = _coef(sys)
    values = []
    for phi in angles:
        w0 = np.log(r0) + 1j * phi
        Yl = levelt.fundamental(np.exp(w0), w0)
        if r_c != r0:
            Yl = transport_log(coef, Yl, w0, np.log(r_c) + 1j * phi, tol.ode_rtol, tol.ode_atol)
        values.append(np.linalg.solve(Yl, sector0.evaluate(float(phi), r_c)))
    C0, spread = _average(values)
    if spread > spread_budget * max(max_norm(C0), 1.0):
        raise ConditioningError(f"connection spread {spread:.3e} over the annulus: branch mismatch?")
    return ConnectionResult(frozen(C0), spread, r_c, tuple(float(a) for a in angles))


def cyclic_relation_residual(levelt: LeveltData, fdata: FormalInfinityData, stokes: StokesResult, C0: Matrix) -> float:
    """‖C₀⁻¹e^{2πiL⁽⁰⁾}C₀ - e^{2πiL}(𝕊₀𝕊₁)⁻¹‖, relative."""
    lhs = np.linalg.solve(C0, levelt.local_monodromy() @ C0)
    rhs = fdata.monodromy_factor() @ np.linalg.inv(stokes.S0 @ stokes.S1)
    return max_norm(lhs - rhs) / max(max_norm(rhs), 1.0)


def infinity_loop_residual(sector0: SectorSolution, fdata: FormalInfinityData, stokes: StokesResult) -> float:
    """Y₀(z e^{2πi}) against Y₀(z) e^{2πiL}(𝕊₀𝕊₁)⁻¹ at the anchor of Y₀, relative."""
    a = sector0.anchor_angle
    continued = sector0.evaluate(a + 2 * np.pi)
    expected = np.asarray(sector0.Y_anchor) @ fdata.monodromy_factor() @ np.linalg.inv(stokes.S0 @ stokes.S1)
    return max_norm(continued - expected) / max(max_norm(expected), 1.0)


@dataclass(frozen=True)
class MonodromyData:
    """Essential monodromy data at one λ, in the fixed normalization conventions."""

    lam: npt.NDArray[np.complex128]
    M0: Matrix
    L0: Matrix
    D0: npt.NDArray[np.int_]
    L: Matrix
    D: npt.NDArray[np.int_]
    S0: Matrix
    S1: Matrix
    C0: Matrix
    mu: npt.NDArray[np.complex128]
    eps_init: float
    spreads: dict[str, float] = field(default_factory=dict)
    residuals: dict[str, float] = field(default_factory=dict)
    warnings: tuple[str, ...] = field(default=())


def geometry_for(points: Sequence[npt.ArrayLike], sys: CoalescedSystem, tolerances: Tolerances | None = None, preferred: float = 0.0) -> StokesGeometry:
    """Admissible direction shared by all ``points``."""
    tol = tolerances or Tolerances()
    geoms = [stokes_rays(sys.lam.shifted(p)) for p in points]
    return choose_admissible_tau(geoms, preferred, tol.tau_min_margin)


def monodromy_data(
    sys: CoalescedSystem, geom: StokesGeometry | None = None, tolerances: Tolerances | None = None
) -> MonodromyData:
    """Compute M0, exponents, 𝕊₀, 𝕊₁ and C₀ at the λ of ``sys``."""
    tol = tolerances or Tolerances()
    geom = geom or geometry_for([sys.lam.array], sys, tol)
    csys = centred(sys)
    levelt = levelt_series(csys, tol.levelt_K, tol.int_tol)
    fdata = formal_series(csys, tol.infinity_K, tol.int_tol)
    stokes = stokes_matrices(csys, geom, fdata, tol)
    conn = central_connection(csys, levelt, stokes.sectors[0], geom, tol)
    M0 = monodromy_at_zero(csys, levelt, angle=float(geom.tau) - np.pi / 2, tolerances=tol)
    eps = max(s.eps_init for s in stokes.sectors)
    residuals = {
        "m0_vs_levelt": max_norm(M0 - levelt.local_monodromy()) / max(max_norm(M0), 1.0),
        "cyclic_relation": cyclic_relation_residual(levelt, fdata, stokes, conn.C0),
        "infinity_loop": infinity_loop_residual(stokes.sectors[0], fdata, stokes),
        "stokes0_structure": stokes.structure0,
        "stokes1_structure": stokes.structure1,
    }
    warnings = [w for s in stokes.sectors for w in s.warnings] + list(levelt.jordanization.warnings)
    return MonodromyData(
        lam=sys.lam.array,
        M0=frozen(M0),
        L0=levelt.L0,
        D0=levelt.D0,
        L=fdata.L,
        D=fdata.D,
        S0=stokes.S0,
        S1=stokes.S1,
        C0=conn.C0,
        mu=levelt.mu,
        eps_init=eps,
        spreads={"stokes0": stokes.spread0, "stokes1": stokes.spread1, "connection": conn.spread},
        residuals=residuals,
        warnings=tuple(warnings),
    )


def _row_gauge(C: Matrix, ref: Matrix, pivots: Sequence[int]) -> Matrix:
    """Rescale rows of C so that the pivot entries match ``ref``."""
    scale = np.array([ref[i, p] / C[i, p] if C[i, p] != 0 else 1.0 for i, p in enumerate(pivots)])
    return scale[:, None] * C


AUDIT_ITEMS = ("stokes_0", "stokes_1", "connection", "exponents")


@dataclass(frozen=True)
class IsomonodromyAudit:
    """Per-item deviations of the monodromy data across the audited λ-samples."""

    lambdas: tuple[npt.NDArray[np.complex128], ...]
    data: tuple[MonodromyData | None, ...]
    errors: dict[int, str]
    deviations: dict[str, float]
    tolerances: dict[str, float]
    segments: tuple[tuple[int, ...], ...]
    eps_total: float

    def item_passed(self, item: str) -> bool:
        return self.deviations[item] <= self.tolerances[item]

    @property
    def passed(self) -> bool:
        return not self.errors and all(self.item_passed(item) for item in self.deviations)


def _segments(data: Sequence[MonodromyData]) -> list[list[int]]:
    """Consecutive runs of samples with equal integer exponents."""
    runs: list[list[int]] = []
    for k, d in enumerate(data):
        if runs:
            prev = data[runs[-1][-1]]
            if np.array_equal(prev.D0, d.D0) and np.array_equal(prev.D, d.D):
                runs[-1].append(k)
                continue
        runs.append([k])
    return runs


def verify_strong_isomonodromy(
    flow: FlowResult,
    sample_count: int = 3,
    tolerances: Tolerances | None = None,
    template: CoalescedSystem | None = None,
) -> IsomonodromyAudit:
    """Audit the constancy of 𝕊₀, 𝕊₁, C₀ and the exponents along a flow.

    Failures of a single sample are recorded against it and fail the
    audit; comparisons never cross a jump of the integer exponents.
    """
    tol = tolerances or Tolerances()
    part = flow.path.partition
    picked = flow.pick(sample_count)
    base = template or CoalescedSystem(flow.path.lambda_at(0.0), picked[0].A)
    geom = geometry_for([s.lam for s in picked], base, tol)

    results: list[MonodromyData | None] = []
    errors: dict[int, str] = {}
    for k, sample in enumerate(picked):
        reducer = None
        if sample.T is not None:
            T = np.asarray(sample.T)
            J = np.linalg.solve(T, np.asarray(sample.A) @ T)
            J = np.where(part.block_of()[:, None] == part.block_of()[None, :], J, 0.0)
            J = np.where(np.abs(J) > 1e-10 * max(max_norm(J), 1.0), J, 0.0)
            reducer = jordanization_from(sample.A, part, T, J, tol=1e-7, int_tol=tol.int_tol)
        sys = CoalescedSystem(base.lam.shifted(sample.lam), sample.A, reducer)
        try:
            results.append(monodromy_data(sys, geom, tol))
        except IsolabError as exc:
            errors[k] = str(exc)
            results.append(None)

    good = [d for d in results if d is not None]
    eps_total = max((d.eps_init for d in good), default=0.0) + tol.ode_rtol * tol.match_scale / max(tol.eval_scale, 1e-300)
    bound = max(tol.audit_tol, 3 * eps_total)
    deviations = {item: 0.0 for item in AUDIT_ITEMS}
    segments = _segments(good) if good else []
    for run in segments:
        ref = good[run[0]]
        pivots = [int(np.argmax(np.abs(ref.C0[i]))) for i in range(ref.C0.shape[0])]
        for k in run[1:]:
            d = good[k]
            deviations["stokes_0"] = max(deviations["stokes_0"], max_norm(d.S0 - ref.S0))
            deviations["stokes_1"] = max(deviations["stokes_1"], max_norm(d.S1 - ref.S1))
            C = _row_gauge(np.asarray(d.C0), np.asarray(ref.C0), pivots)
            deviations["connection"] = max(deviations["connection"], max_norm(C - ref.C0) / max(max_norm(ref.C0), 1.0))
            exp_dev = max(max_norm(d.mu - ref.mu), max_norm(d.L0 - ref.L0), max_norm(d.L - ref.L))
            deviations["exponents"] = max(deviations["exponents"], exp_dev)
    for k in errors:
        for item in AUDIT_ITEMS:
            deviations[item] = float("inf")
    return IsomonodromyAudit(
        lambdas=tuple(np.asarray(s.lam) for s in picked),
        data=tuple(results),
        errors=errors,
        deviations=deviations,
        tolerances={item: bound for item in AUDIT_ITEMS},
        segments=tuple(tuple(r) for r in segments),
        eps_total=eps_total,
    )


def frozen_flow(A: npt.ArrayLike, path: DeformationPath, samples: int = 5) -> FlowResult:
    """A "flow" that keeps A fixed while λ moves: the audit's negative control."""
    A = frozen(A)
    ts = np.linspace(0.0, 1.0, samples)
    points = tuple(FlowSample(float(t), path.point(float(t)), A) for t in ts)
    zeros = tuple(0.0 for _ in ts)
    return FlowResult(
        path=path,
        samples=points,
        monitors=FlowMonitors(zeros, zeros, (), 0.0 if path.closed else None),
        dspec_name="frozen",
        rtol=0.0,
        steps=0,
    )
