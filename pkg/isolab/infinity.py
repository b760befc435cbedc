"""The irregular point z = ∞: Stokes geometry, formal series and sector solutions.

Formal solution: Y_F(z) = T (I + Σ_k F_k z^{-k}) z^D z^L e^{Λz}, with T the
block-diagonal Jordanizer of A_D. Sector solutions Y_ν are actual
solutions asymptotic to Y_F in 𝒮_ν = (τ + (ν-1)π - δ, τ + νπ + δ).
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass, field, replace
from typing import NamedTuple

import numpy as np
import numpy.typing as npt
import scipy.linalg

from isolab.blocks import (
    JordanizationResult,
    Lambda,
    Matrix,
    block_inverse,
    frozen,
    jordanize_diag_blocks,
    max_norm,
)
from isolab.errors import ConditioningError, StratumError, UnsupportedStructureError
from isolab.levelt import SeriesCertificate, levelt_exponents, slope_fit
from isolab.pfaffian import CoalescedSystem
from isolab.propagate import transport_line, transport_log
from isolab.tolerances import Tolerances

TWO_PI = 2.0 * np.pi


class StokesRay(NamedTuple):
    """Direction θ ∈ [0, 2π) where Re((λ_i - λ_j)z) = 0 and Im((λ_i - λ_j)z) < 0."""

    theta: float
    i: int
    j: int


@dataclass(frozen=True)
class StokesGeometry:
    """Stokes rays of one or more λ points and, once chosen, τ and its margin."""

    rays: tuple[StokesRay, ...]
    tau: float | None = None
    margin: float | None = None

    def sector(self, nu: int, widen: float = 0.5) -> tuple[float, float]:
        """Angular range of 𝒮_ν, widened by ``widen``·margin past each end."""
        if self.tau is None or self.margin is None:
            raise ValueError("admissible direction not chosen yet")
        delta = widen * min(self.margin, np.pi / 2)
        return self.tau + (nu - 1) * np.pi - delta, self.tau + nu * np.pi + delta


def stokes_rays(lam: Lambda) -> StokesGeometry:
    """Directions where Re((λ_i - λ_j)z) = 0 and Im((λ_i - λ_j)z) < 0."""
    rays = []
    values = lam.values
    for i, li in enumerate(values):
        for j, lj in enumerate(values):
            if i == j:
                continue
            theta = (-np.angle(li - lj) - np.pi / 2) % TWO_PI
            rays.append(StokesRay(float(theta), i, j))
    return StokesGeometry(rays=tuple(sorted(rays)))


def choose_admissible_tau(
    geoms: Sequence[StokesGeometry], preferred: float = 0.0, min_margin: float = 0.05
) -> StokesGeometry:
    """Pick τ as far as possible from every ray of every sample, modulo π.

    Ties go to the candidate closest to ``preferred``; the result lies in
    (preferred - π/2, preferred + π/2].

    Raises:
        StratumError: If the best margin is below ``min_margin``.
    """
    rays = tuple(sorted({r for g in geoms for r in g.rays}))
    if not rays:
        return StokesGeometry(rays=(), tau=float(preferred), margin=np.pi / 2)
    folded = np.unique(np.mod(np.asarray([r.theta for r in rays]), np.pi))
    gaps = np.diff(np.concatenate((folded, [folded[0] + np.pi])))
    best = float(np.max(gaps))
    candidates = []
    for k in np.flatnonzero(gaps >= best - 1e-12):
        mid = folded[k] + gaps[k] / 2
        # nearest representative of mid + kπ to the preferred direction
        shift = np.round((preferred - mid) / np.pi)
        tau = mid + shift * np.pi
        if tau <= preferred - np.pi / 2:
            tau += np.pi
        candidates.append(float(tau))
    tau = min(candidates, key=lambda t: (abs(t - preferred), t))
    margin = best / 2
    if margin < min_margin:
        raise StratumError(f"no admissible direction with margin ≥ {min_margin}: best {margin:.3e}")
    return StokesGeometry(rays=rays, tau=tau, margin=margin)


@dataclass(frozen=True)
class FormalInfinityData:
    """Coefficients of the formal solution at ∞ in the T-frame.

    ``F[0]`` is the identity, ``R_terms[ℓ - 1]`` is R^ℓ and ``tail`` holds
    the off-diagonal blocks of F_{K+1}.
    """

    lam: Lambda
    T: Matrix
    M: Matrix
    cal_A: Matrix
    F: tuple[Matrix, ...]
    R_terms: tuple[Matrix, ...]
    D: npt.NDArray[np.int_]
    S: Matrix
    L: Matrix
    K: int
    tail: Matrix
    certificate: SeriesCertificate
    jordanization: JordanizationResult

    @property
    def exact(self) -> bool:
        """True when the series terminates at F_0 = I."""
        return all(not max_norm(f) for f in self.F[1:]) and not max_norm(self.tail)

    def series(self, z: complex) -> Matrix:
        zinv = 1.0 / z
        return sum((F * zinv**k for k, F in enumerate(self.F)), start=np.zeros_like(self.F[0]))

    def power_part(self, z: complex, logz: complex | None = None) -> Matrix:
        """T H(z) z^D z^L, the formal solution without e^{Λz}."""
        w = np.log(complex(z)) if logz is None else complex(logz)
        return self.T @ self.series(z) @ np.diag(np.exp(self.D * w)) @ scipy.linalg.expm(self.L * w)

    def evaluate(self, z: complex, logz: complex | None = None) -> Matrix:
        return self.power_part(z, logz) @ np.diag(np.exp(np.diag(self.lam.matrix()) * z))

    def monodromy_factor(self) -> Matrix:
        """e^{2πiL}: Y_F(z e^{2πi}) = Y_F(z) e^{2πiL}."""
        return scipy.linalg.expm(2j * np.pi * self.L)


def _infinity_residual(fd: FormalInfinityData, z: complex) -> float:
    """‖T (H' + H(Λ + P/z) - (Λ + 𝒜/z)H)‖ for the truncated H."""
    Lm = fd.lam.matrix()
    zinv = 1.0 / z
    H = fd.series(z)
    dH = sum((-k * F * zinv ** (k + 1) for k, F in enumerate(fd.F) if k), start=np.zeros_like(H))
    P = fd.M + sum((R * zinv ** (l + 1) for l, R in enumerate(fd.R_terms)), start=np.zeros_like(H))
    return max_norm(fd.T @ (dH + H @ (Lm + P * zinv) - (Lm + fd.cal_A * zinv) @ H))


def _certify(fd: FormalInfinityData, points: int = 6) -> SeriesCertificate:
    K = fd.K
    expected = float(K + 1)
    lam = fd.lam.array
    gaps = np.abs(lam[:, None] - lam[None, :])
    tail = max_norm(fd.T @ (gaps[np.ix_(*(2 * [fd.lam.partition.block_of()]))] * fd.tail))
    scale = max(max_norm(fd.cal_A), max_norm(fd.lam.matrix()), 1.0)
    theta = 0.3
    if tail <= 1e-300:
        radii = (1.0, 10.0, 100.0)
        res = tuple(_infinity_residual(fd, r * np.exp(1j * theta)) for r in radii)
        return SeriesCertificate(radii, res, None, expected, True)
    r_far = (tail / (1e-12 * scale)) ** (1.0 / (K + 1))
    r_near = max(r_far / 10.0, (tail / (1e-2 * scale)) ** (1.0 / (K + 1)))
    radii = tuple(float(r) for r in np.geomspace(r_near, r_far, points))
    res = tuple(_infinity_residual(fd, r * np.exp(1j * theta)) for r in radii)
    return SeriesCertificate(radii, res, slope_fit(1.0 / np.asarray(radii), res), expected, False)


def formal_series(
    sys: CoalescedSystem, K: int = 8, int_tol: float = 1e-7, jordanization: JordanizationResult | None = None
) -> FormalInfinityData:
    """Solve the recursion for the formal solution at z = ∞ up to order K.

    Off-diagonal blocks of F_{k+1} come from (λ_a - λ_b)F_{k+1,[a,b]} =
    [-kF_k + Σ_ℓ F_{k-ℓ}R^ℓ - 𝒜F_k]_{[a,b]} (R^0 = M); diagonal blocks of F_k
    from (M_a + k)X - XM_a = -Σ_{b≠a}𝒜_{[a,b]}F_{k,[b,a]} + Σ_ℓ (F_{k-ℓ}R^ℓ)_{[a,a]}.
    Entries with μ_j - μ_i = k are set to zero and feed R^k instead.

    Raises:
        UnsupportedStructureError: For resonances inside a non-diagonalizable
            block or with a gap larger than K.
    """
    part = sys.partition
    jr = jordanization or sys.reducer or jordanize_diag_blocks(sys.A, part)
    T, M = np.asarray(jr.T), np.asarray(jr.J)
    T_inv = block_inverse(T, part)
    cal_A = T_inv @ np.asarray(sys.A) @ T
    idx = part.block_of()
    same = idx[:, None] == idx[None, :]
    cal_A = np.where(same, M, cal_A)
    lam = sys.lam.array[idx]
    gap = np.where(same, 1.0, lam[:, None] - lam[None, :])
    mu = np.diag(M).copy()
    n = part.n

    resonant: dict[tuple[int, int], int] = {}
    for pair in jr.resonant_pairs:
        i, j, ell = pair.i, pair.j, pair.ell
        sl = part.span(pair.block)
        Mb = M[sl, sl]
        if max_norm(Mb - np.diag(np.diag(Mb))):
            raise UnsupportedStructureError("partial resonance in a non-diagonalizable block", pair=(i, j))
        if ell > K:
            raise UnsupportedStructureError(f"partial resonance gap {ell} exceeds truncation order {K}", pair=(i, j))
        resonant[(i, j)] = ell

    I = np.eye(n, dtype=np.complex128)
    F: list[Matrix] = [I]
    R: list[Matrix] = []

    def next_off(k: int) -> Matrix:
        total = -k * F[k] + F[k] @ M - cal_A @ F[k]
        for ell in range(1, k + 1):
            total = total + F[k - ell] @ R[ell - 1]
        return np.where(same, 0.0, total / gap)

    current = next_off(0)
    for k in range(1, K + 1):
        Fk = current.copy()
        Rk = np.zeros_like(I)
        coupling = cal_A @ np.where(same, 0.0, Fk)
        rest = -coupling
        for ell in range(1, k):
            rest = rest + F[k - ell] @ R[ell - 1]
        for a in range(part.s):
            sl = part.span(a)
            Ma, Ra = M[sl, sl], rest[sl, sl]
            if not max_norm(Ma - np.diag(np.diag(Ma))):
                m = np.diag(Ma)
                denom = m[:, None] + k - m[None, :]
                X = np.zeros_like(Ra)
                for i in range(Ra.shape[0]):
                    for j in range(Ra.shape[1]):
                        if resonant.get((sl.start + i, sl.start + j)) == k:
                            Rk[sl.start + i, sl.start + j] = -Ra[i, j]
                        else:
                            X[i, j] = Ra[i, j] / denom[i, j]
            else:
                X = scipy.linalg.solve_sylvester(Ma + k * np.eye(Ma.shape[0]), -Ma, Ra)
            Fk[sl, sl] = X
        F.append(Fk)
        R.append(Rk)
        current = next_off(k)

    D = np.zeros(n, dtype=int)
    for a in range(part.s):
        sl = part.span(a)
        D[sl], _ = levelt_exponents(mu[sl], int_tol)
    # resonant pairs need d_j - d_i = ℓ so that z^D L z^{-D} reproduces R^ℓ z^{-ℓ}
    for (i, j), ell in resonant.items():
        D[j] = D[i] + ell
    S = M - np.diag(D)
    L = S + sum(R, start=np.zeros_like(I))
    data = FormalInfinityData(
        lam=sys.lam,
        T=frozen(T),
        M=frozen(M),
        cal_A=frozen(cal_A),
        F=tuple(frozen(f) for f in F),
        R_terms=tuple(frozen(r) for r in R),
        D=D,
        S=frozen(S),
        L=frozen(L),
        K=K,
        tail=frozen(current),
        certificate=SeriesCertificate((), (), None, float(K + 1), True),
        jordanization=jr,
    )
    return replace(data, certificate=_certify(data))


@dataclass(frozen=True)
class SectorSolution:
    """Y_ν, stored by its value at the anchor z = r_eval·e^{iθ_anchor}.

    Values elsewhere are obtained by continuing the solution along an arc
    of radius r_eval and then radially, so the branch of z is the one of
    the requested angle.
    """

    nu: int
    system: CoalescedSystem
    anchor_angle: float
    r_eval: float
    R_match: float
    Y_anchor: Matrix
    eps_init: float
    block_methods: tuple[str, ...]
    rtol: float = 1e-11
    atol: float = 1e-13
    warnings: tuple[str, ...] = field(default=())

    def _coef(self, z: complex) -> Matrix:
        return self.system.Lambda + self.system.A / z

    def evaluate(self, angle: float, radius: float | None = None) -> Matrix:
        """Y_ν(z) at arg z = ``angle`` (not reduced mod 2π) and |z| = ``radius``."""
        w0 = np.log(self.r_eval) + 1j * self.anchor_angle
        w1 = np.log(self.r_eval) + 1j * angle
        Y = np.array(self.Y_anchor)
        if angle != self.anchor_angle:
            Y = transport_log(self._coef, Y, w0, w1, self.rtol, self.atol)
        if radius is not None and radius != self.r_eval:
            Y = transport_log(self._coef, Y, w1, np.log(radius) + 1j * angle, self.rtol, self.atol)
        return Y

    def samples(self, angles: Sequence[float], radius: float | None = None) -> list[Matrix]:
        return [self.evaluate(a, radius) for a in angles]


def _shifted(sys: CoalescedSystem, shift: complex):
    L = sys.Lambda - shift * np.eye(sys.n)
    A = np.asarray(sys.A)
    return lambda z: L + A / z


def _angles(lo: float, hi: float, count: int = 721) -> npt.NDArray[np.float64]:
    return np.linspace(lo, hi, count + 2)[1:-1]


def _inward_subspace(
    sys: CoalescedSystem, Q: Matrix, shift: complex, theta: float, R: float, r: float, chunk: float, rtol: float, atol: float
) -> Matrix:
    """Carry span(Q) from R e^{iθ} to r e^{iθ}, re-orthonormalizing every chunk."""
    coef = _shifted(sys, shift)
    e = np.exp(1j * theta)
    edges = np.linspace(R, r, max(2, int(np.ceil((R - r) / chunk)) + 1))
    for a, b in zip(edges[:-1], edges[1:]):
        Q = transport_line(coef, Q, a * e, b * e, rtol, atol)
        Q, _ = np.linalg.qr(Q)
    return Q


def sector_solution(
    sys: CoalescedSystem,
    geom: StokesGeometry,
    fdata: FormalInfinityData,
    nu: int,
    tolerances: Tolerances | None = None,
    force_integration: bool = False,
    recessive_min: float = 0.05,
    amplification_budget: float = 1e-6,
) -> SectorSolution:
    """Realize Y_ν numerically.

    A block that is recessive against every other block on some ray of
    𝒮_ν is integrated inward along its most recessive ray from the formal
    series at R_match. Any other block is located as the intersection of
    the subspaces of solutions not dominating it on the rays where each
    other block dominates it, and normalized against the formal series on
    the ray of least amplification.

    Raises:
        ConditioningError: If a block cannot be matched within the budget.
    """
    tol = tolerances or Tolerances()
    part = sys.partition
    lam = sys.lam.array
    gap = sys.lam.max_gap or 1.0
    R_match = tol.match_scale / gap
    r_eval = tol.eval_scale / gap
    lo, hi = geom.sector(nu)
    anchor = geom.tau + (nu - 0.5) * np.pi
    w_anchor = np.log(r_eval) + 1j * anchor
    rtol, atol = tol.ode_rtol, tol.ode_atol

    if fdata.exact and not force_integration:
        Y = fdata.evaluate(r_eval * np.exp(1j * anchor), w_anchor)
        return SectorSolution(nu, sys, anchor, r_eval, R_match, frozen(Y), 0.0, ("exact",) * part.s, rtol, atol)

    coef = _shifted(sys, 0.0)
    angles = _angles(lo, hi)
    tail = max_norm(fdata.tail)
    trunc = tail * R_match ** (-(fdata.K + 1))
    Y = np.zeros((part.n, part.n), dtype=np.complex128)
    methods, warnings = [], []
    eps = trunc
    for b in range(part.s):
        cols = part.span(b)
        others = [c for c in range(part.s) if c != b]
        if not others:
            methods.append("exact")
            Y[:, cols] = fdata.evaluate(r_eval * np.exp(1j * anchor), w_anchor)[:, cols]
            continue
        diffs = np.array([lam[c] - lam[b] for c in others])
        unit = diffs / np.abs(diffs)
        strength = np.min((unit[:, None] * np.exp(1j * angles)[None, :]).real, axis=0)
        k = int(np.argmax(strength))
        if strength[k] >= recessive_min:
            theta = float(angles[k])
            zR = R_match * np.exp(1j * theta)
            U = fdata.power_part(zR, np.log(R_match) + 1j * theta)[:, cols]
            U = transport_line(_shifted(sys, lam[b]), U, zR, r_eval * np.exp(1j * theta), rtol, atol)
            Yb = U * np.exp(lam[b] * r_eval * np.exp(1j * theta))
            Y[:, cols] = transport_log(coef, Yb, np.log(r_eval) + 1j * theta, w_anchor, rtol, atol)
            methods.append("recessive")
            continue

        methods.append("intersection")
        block_of = part.block_of()
        projectors = []
        for c, u in zip(others, unit):
            theta = float(angles[int(np.argmax((u * np.exp(1j * angles)).real))])
            if (u * np.exp(1j * theta)).real < recessive_min:
                raise ConditioningError(f"block {c} never dominates block {b} inside sector {nu}")
            rot = np.exp(1j * theta)
            keep = [a for a in range(part.s) if ((lam[a] - lam[b]) * rot).real <= 1e-12 * gap]
            mask = np.isin(block_of, keep)
            zR = R_match * rot
            Q0, _ = np.linalg.qr(fdata.power_part(zR, np.log(R_match) + 1j * theta)[:, mask])
            Q = _inward_subspace(sys, Q0, lam[b], theta, R_match, r_eval, 20.0 / gap, rtol, atol)
            Q = transport_log(coef, Q, np.log(r_eval) + 1j * theta, w_anchor, rtol, atol)
            Q, _ = np.linalg.qr(Q)
            projectors.append(np.eye(part.n) - Q @ Q.conj().T)
        _, sv, vh = np.linalg.svd(np.vstack(projectors))
        p = part.sizes[b]
        W = vh[-p:].conj().T
        if sv[-p] > 1e-6 or (sv.size > p and sv[-p - 1] < 1e-3):
            raise ConditioningError(f"subspace intersection for block {b} is ill-conditioned (σ = {sv[-p]:.2e})")

        amp = np.max(((diffs[:, None]) * np.exp(1j * angles)[None, :]).real, axis=0)
        m = int(np.argmin(amp))
        theta_m, delta = float(angles[m]), max(float(amp[m]), 0.0)
        radii = np.geomspace(10.0 * r_eval, R_match, 40)
        err = 1e-15 * np.exp(delta * radii) + tail * radii ** (-(fdata.K + 1))
        R_n = float(radii[int(np.argmin(err))])
        if err.min() > amplification_budget:
            raise ConditioningError(f"normalization of block {b} amplifies rounding to {err.min():.2e}")
        w_m = np.log(r_eval) + 1j * theta_m
        Wm = transport_log(coef, W, w_anchor, w_m, rtol, atol)
        z_m = r_eval * np.exp(1j * theta_m)
        zN = R_n * np.exp(1j * theta_m)
        U = transport_line(_shifted(sys, lam[b]), Wm * np.exp(-lam[b] * z_m), z_m, zN, rtol, atol)
        target = fdata.power_part(zN, np.log(R_n) + 1j * theta_m)[:, cols]
        C, *_ = np.linalg.lstsq(U, target, rcond=None)
        Y[:, cols] = W @ C
        eps = max(eps, float(err.min()))
        if delta > 0:
            warnings.append(f"block {b} normalized with amplification e^{delta * R_n:.1f}")
    return SectorSolution(
        nu=nu,
        system=sys,
        anchor_angle=float(anchor),
        r_eval=r_eval,
        R_match=R_match,
        Y_anchor=frozen(Y),
        eps_init=float(eps),
        block_methods=tuple(methods),
        rtol=rtol,
        atol=atol,
        warnings=tuple(warnings),
    )
