"""Levelt data of dY/dz = (Λ + A/z)Y at the Fuchsian point z = 0.

The solution is Y⁽⁰⁾(z) = G (I + Σ_k F_k z^k) z^D z^L with J = G⁻¹AG = D + S
and L = S + R, R = Σ_ℓ R^ℓ collecting the resonant terms.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import numpy.typing as npt
import scipy.linalg

from isolab.blocks import (
    BlockPartition,
    JordanizationResult,
    Matrix,
    frozen,
    jordanize_diag_blocks,
    max_norm,
)
from isolab.errors import UnsupportedStructureError
from isolab.pfaffian import CoalescedSystem


def levelt_exponents(
    eigs: npt.ArrayLike, int_tol: float = 1e-7
) -> tuple[npt.NDArray[np.int_], npt.NDArray[np.complex128]]:
    """Split μ_j = d_j + ρ_j with d_j an integer and 0 ≤ Re ρ_j < 1.

    Real parts within ``int_tol`` of an integer are snapped onto it, so a
    numerically computed μ = 3 - 1e-12 gives (3, 0).
    """
    mu = np.atleast_1d(np.asarray(eigs, dtype=np.complex128))
    re = mu.real
    nearest = np.round(re)
    snapped = np.where(np.abs(re - nearest) <= int_tol, nearest, re)
    d = np.floor(snapped).astype(int)
    rho = np.where(np.abs(re - nearest) <= int_tol, 1j * mu.imag, mu - d)
    return d, rho.astype(np.complex128)


@dataclass(frozen=True)
class SeriesCertificate:
    """Residual of the truncated series on a set of radii.

    ``slope`` is the log-log growth exponent of the residual (expected K + 1
    at z = 0); None when the truncation is exact.
    """

    radii: tuple[float, ...]
    residuals: tuple[float, ...]
    slope: float | None
    expected: float
    exact: bool

    def passed(self, slack: float = 1.5, floor: float = 1e-12) -> bool:
        if self.exact:
            return max(self.residuals, default=0.0) <= floor
        return self.slope is not None and self.slope >= self.expected - slack


@dataclass(frozen=True)
class LeveltData:
    """Truncated Levelt fundamental solution at z = 0.

    ``F[0]`` is the identity; ``R_terms[ℓ - 1]`` is R^ℓ.
    """

    G0: Matrix
    J: Matrix
    F: tuple[Matrix, ...]
    R_terms: tuple[Matrix, ...]
    D0: npt.NDArray[np.int_]
    S0: Matrix
    R0: Matrix
    L0: Matrix
    Delta: Matrix
    N: Matrix
    permutation: tuple[int, ...]
    K: int
    resonant_pairs: tuple[tuple[int, int, int], ...]
    certificate: SeriesCertificate
    jordanization: JordanizationResult

    @property
    def mu(self) -> npt.NDArray[np.complex128]:
        return np.diag(self.J).copy()

    @property
    def rho(self) -> npt.NDArray[np.complex128]:
        return self.mu - self.D0

    def series(self, z: complex) -> Matrix:
        """H(z) = I + Σ_{k ≤ K} F_k z^k."""
        return sum((F * z**k for k, F in enumerate(self.F)), start=np.zeros_like(self.F[0]))

    def fundamental(self, z: complex, logz: complex | None = None) -> Matrix:
        """Y⁽⁰⁾(z) = G H(z) z^D z^L on the branch fixed by ``logz``."""
        w = np.log(complex(z)) if logz is None else complex(logz)
        zD = np.diag(np.exp(self.D0 * w))
        return self.G0 @ self.series(z) @ zD @ scipy.linalg.expm(self.L0 * w)

    def local_monodromy(self) -> Matrix:
        """e^{2πiL}: the right factor picked up by Y⁽⁰⁾ around z = 0."""
        return scipy.linalg.expm(2j * np.pi * self.L0)


@dataclass(frozen=True)
class ProperLevelt:
    permutation: tuple[int, ...]
    Delta: Matrix
    N: Matrix
    Sigma: Matrix


def proper_levelt(D: npt.ArrayLike, L: npt.ArrayLike, int_tol: float = 1e-7) -> ProperLevelt:
    """Reorder a Levelt pair (D, L) into the form z^Δ z^N with [Σ, N] = 0.

    Σ is the diagonal of L and N = L - Σ. The permutation groups equal
    diagonal entries of Σ (sorted lexicographically) and orders the
    integer parts non-increasingly inside each group.

    Raises:
        UnsupportedStructureError: If N couples different entries of Σ.
    """
    d = np.asarray(D)
    d = np.diag(d) if d.ndim == 2 else d
    d = np.round(d.real).astype(int)
    L = np.asarray(L, dtype=np.complex128)
    sigma = np.diag(L).copy()
    N = L - np.diag(sigma)
    n = sigma.size
    for i in range(n):
        for j in range(n):
            if N[i, j] != 0 and abs(sigma[i] - sigma[j]) > int_tol:
                raise UnsupportedStructureError("nilpotent part couples different exponents", pair=(i, j))

    groups: list[complex] = []
    label = np.zeros(n, dtype=int)
    for i, value in enumerate(sigma):
        for g, rep in enumerate(groups):
            if abs(value - rep) <= int_tol:
                label[i] = g
                break
        else:
            label[i] = len(groups)
            groups.append(complex(value))
    rank = sorted(range(len(groups)), key=lambda g: (groups[g].real, groups[g].imag))
    position = {g: r for r, g in enumerate(rank)}
    perm = sorted(range(n), key=lambda i: (position[label[i]], -d[i]))
    P = np.asarray(perm)
    Sigma = np.diag(sigma[P])
    return ProperLevelt(
        permutation=tuple(int(p) for p in perm),
        Delta=np.diag(d[P] + sigma[P]),
        N=N[np.ix_(P, P)],
        Sigma=Sigma,
    )


def _resonances(mu: npt.NDArray[np.complex128], int_tol: float) -> list[tuple[int, int, int]]:
    """Pairs (i, j, ℓ) with μ_i - μ_j = ℓ ≥ 1."""
    out = []
    for i in range(mu.size):
        for j in range(mu.size):
            gap = mu[i] - mu[j]
            ell = round(gap.real)
            if ell >= 1 and abs(gap - ell) <= int_tol:
                out.append((i, j, ell))
    return out


def _tail(Lt: Matrix, F: list[Matrix], R: list[Matrix], k: int) -> Matrix:
    """Coefficient of z^k in zH' + HP - (zΛ̃ + J)H once F_k is dropped."""
    out = -Lt @ F[k - 1]
    for ell in range(1, k + 1):
        if k - ell < len(F) and ell <= len(R):
            out = out + F[k - ell] @ R[ell - 1]
    return out


def _residual(Lt: Matrix, J: Matrix, G: Matrix, F: list[Matrix], R: list[Matrix], z: complex) -> float:
    H = sum((Fk * z**k for k, Fk in enumerate(F)), start=np.zeros_like(J))
    dH = sum((k * Fk * z**k for k, Fk in enumerate(F) if k), start=np.zeros_like(J))
    P = J + sum((Rl * z ** (l + 1) for l, Rl in enumerate(R)), start=np.zeros_like(J))
    return max_norm(G @ (dH + H @ P - (z * Lt + J) @ H))


def slope_fit(radii: npt.ArrayLike, residuals: npt.ArrayLike) -> float | None:
    """Least-squares exponent of residual ∝ radius^slope, None if any residual is 0."""
    r, e = np.asarray(radii, dtype=float), np.asarray(residuals, dtype=float)
    if np.any(e <= 0) or r.size < 2:
        return None
    return float(np.polyfit(np.log(r), np.log(e), 1)[0])


def certify_series(
    Lt: Matrix, J: Matrix, G: Matrix, F: list[Matrix], R: list[Matrix], K: int, points: int = 6
) -> SeriesCertificate:
    """Fit the residual slope on radii where the z^{K+1} tail dominates rounding."""
    scale = max(max_norm(J), max_norm(Lt), 1.0)
    tail = max_norm(G @ _tail(Lt, F, R, K + 1))
    theta = 0.3
    if tail <= 1e-300:
        radii = (1e-2, 1e-1, 1.0)
        res = tuple(_residual(Lt, J, G, F, R, r * np.exp(1j * theta)) for r in radii)
        return SeriesCertificate(radii, res, None, float(K + 1), True)
    r_lo = (1e-12 * scale / tail) ** (1.0 / (K + 1))
    r_hi = min(10.0 * r_lo, (1e-2 * scale / tail) ** (1.0 / (K + 1)))
    radii = tuple(float(r) for r in np.geomspace(r_lo, r_hi, points))
    res = tuple(_residual(Lt, J, G, F, R, r * np.exp(1j * theta)) for r in radii)
    return SeriesCertificate(radii, res, slope_fit(radii, res), float(K + 1), False)


def levelt_series(
    sys: CoalescedSystem,
    K: int = 12,
    int_tol: float = 1e-7,
    jordanization: JordanizationResult | None = None,
) -> LeveltData:
    """Compute the Levelt data of ``sys`` at z = 0 up to order K.

    Args:
        sys: The system.
        K: Series truncation.
        int_tol: Tolerance for integer eigenvalue gaps.
        jordanization: A Jordan form of the whole of A (partition (n,));
            computed with increasing eigenvalue order when omitted.

    Returns:
        LeveltData: Series coefficients, exponents, proper form and certificate.

    Raises:
        UnsupportedStructureError: For resonances with a non-diagonal J or
            with a gap larger than K.
    """
    n = sys.n
    jr = jordanization or jordanize_diag_blocks(sys.A, BlockPartition((n,)), descending=False)
    G = np.asarray(jr.T)
    J = np.asarray(jr.J)
    Lt = np.linalg.solve(G, sys.Lambda @ G)
    mu = np.diag(J).copy()
    pairs = _resonances(mu, int_tol)
    diagonal = not max_norm(J - np.diag(mu))
    for i, j, ell in pairs:
        if not diagonal:
            raise UnsupportedStructureError("resonance with a non-diagonalizable residue", pair=(i, j))
        if ell > K:
            raise UnsupportedStructureError(f"resonant gap {ell} exceeds the truncation order {K}", pair=(i, j))

    I = np.eye(n, dtype=np.complex128)
    F: list[Matrix] = [I]
    R: list[Matrix] = []
    resonant_at = {(i, j): ell for i, j, ell in pairs}
    for k in range(1, K + 1):
        rhs = -Lt @ F[k - 1] + sum((F[k - ell] @ R[ell - 1] for ell in range(1, k)), start=np.zeros_like(I))
        Rk = np.zeros_like(I)
        if diagonal:
            denom = mu[:, None] - k - mu[None, :]
            Fk = np.zeros_like(I)
            for i in range(n):
                for j in range(n):
                    if resonant_at.get((i, j)) == k:
                        Rk[i, j] = -rhs[i, j]
                    else:
                        Fk[i, j] = rhs[i, j] / denom[i, j]
        else:
            Fk = scipy.linalg.solve_sylvester(J - k * I, -J, rhs)
        F.append(Fk)
        R.append(Rk)

    d, _ = levelt_exponents(mu, int_tol)
    S = J - np.diag(d)
    R0 = sum(R, start=np.zeros_like(I))
    L0 = S + R0
    proper = proper_levelt(d, L0, int_tol)
    return LeveltData(
        G0=frozen(G),
        J=frozen(J),
        F=tuple(frozen(f) for f in F),
        R_terms=tuple(frozen(r) for r in R),
        D0=d,
        S0=frozen(S),
        R0=frozen(R0),
        L0=frozen(L0),
        Delta=frozen(proper.Delta),
        N=frozen(proper.N),
        permutation=proper.permutation,
        K=K,
        resonant_pairs=tuple(pairs),
        certificate=certify_series(Lt, J, G, F, R, K),
        jordanization=jr,
    )


def certified_radius(data: LeveltData, target: float = 1e-13) -> float:
    """Radius where the first dropped series term falls to ``target``."""
    last = max_norm(data.F[-1])
    if last <= 1e-300:
        return 1.0
    return float(min(1.0, (target / last) ** (1.0 / data.K)))


def euler_exponent_check(data: LeveltData) -> float:
    """Distance between e^{2πiL} and the exponentials of the μ_j, as spectra."""
    eig = np.linalg.eigvals(data.local_monodromy())
    expected = np.exp(2j * np.pi * data.mu)
    return max((min(abs(e - x) for x in expected) for e in eig), default=0.0) if eig.size else 0.0
