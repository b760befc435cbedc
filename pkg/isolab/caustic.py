"""The caustic model: a 2-dimensional nilpotent germ of type I₂(m) times n-2 copies of A₁.

Coordinates (t₁, t₂, u₃, ..., u_n); the caustic is t₂ = 0 where u₁ = u₂ = t₁.
The metric entries η̃₁₁, η̃₁₂ are polynomial data in (t₂, t₁), and the
residue off the caustic is modelled with V₁₂ ≡ V̊₁₂ in the [1,1] block.
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np
import numpy.typing as npt
from numpy.polynomial import polynomial as P

from isolab.blocks import BlockPartition, Lambda, Matrix, max_norm
from isolab.errors import DegenerateMetricError, PoleError
from isolab.pfaffian import CoalescedSystem, PfaffianForm, build_form, build_omega

SQRT2 = np.sqrt(2.0)


def vring_value(m: int) -> complex:
    """V̊₁₂ = i(m-2)/(2m)."""
    return 1j * (m - 2) / (2 * m)


def _ppow(t: complex, p: float) -> complex:
    """Principal branch t^p."""
    if t == 0:
        return 0.0 if p > 0 else (1.0 if p == 0 else complex("inf"))
    return complex(np.exp(p * np.log(complex(t))))


def caustic_coords(t1: complex, t2: complex, m: int) -> tuple[complex, complex]:
    """u₁,₂ = t₁ ± (2/m)t₂^{m/2}."""
    d = 2.0 / m * _ppow(t2, m / 2)
    return complex(t1) + d, complex(t1) - d


def caustic_coords_inverse(u1: complex, u2: complex, m: int) -> tuple[complex, complex]:
    """t₁ = (u₁+u₂)/2, t₂ = (m(u₁-u₂)/4)^{2/m}."""
    return (u1 + u2) / 2, _ppow(m * (u1 - u2) / 4, 2 / m)


@dataclass(frozen=True)
class MetricModel:
    """η̃₁₁, η̃₁₂ as coefficient grids: ``eta11[k, l]`` multiplies t₂^k t₁^l.

    A one-dimensional grid is read as a series in t₂ alone.
    """

    eta11: npt.NDArray[np.complex128]
    eta12: npt.NDArray[np.complex128]

    def __post_init__(self) -> None:
        for name in ("eta11", "eta12"):
            c = np.asarray(getattr(self, name), dtype=np.complex128)
            if c.ndim == 0:
                c = c.reshape(1, 1)
            elif c.ndim == 1:
                c = c.reshape(-1, 1)
            elif c.ndim != 2:
                raise ValueError(f"{name} must be a coefficient grid")
            object.__setattr__(self, name, c)

    @classmethod
    def constant(cls, eta11: complex, eta12: complex) -> MetricModel:
        return cls(np.array([[eta11]]), np.array([[eta12]]))

    def values(self, t1: complex, t2: complex) -> tuple[complex, complex]:
        """(η̃₁₁, η̃₁₂)."""
        return complex(P.polyval2d(t2, t1, self.eta11)), complex(P.polyval2d(t2, t1, self.eta12))

    def derivative(self, t1: complex, t2: complex, wrt: str) -> tuple[complex, complex]:
        """(∂η̃₁₁, ∂η̃₁₂) with respect to ``"t1"`` or ``"t2"``."""
        axis = {"t2": 0, "t1": 1}[wrt]
        d11, d12 = P.polyder(self.eta11, axis=axis), P.polyder(self.eta12, axis=axis)
        return complex(P.polyval2d(t2, t1, d11)), complex(P.polyval2d(t2, t1, d12))


@dataclass(frozen=True)
class CausticModel:
    """m, the metric model, V̊₁₂ and the couplings of the restricted residue.

    ``coupling`` holds the 2×1 blocks A_{[1],k} as columns; ``tail`` is the
    skew coupling between the one-dimensional blocks.
    """

    m: int
    metric: MetricModel
    coupling: Matrix = field(default_factory=lambda: np.zeros((2, 0), dtype=np.complex128))
    tail: Matrix | None = None
    v12: complex | None = None
    c: tuple[complex, complex] = (1.0, 1.0)
    h: tuple[complex, ...] | None = None

    def __post_init__(self) -> None:
        if int(self.m) != self.m or self.m < 2:
            raise ValueError(f"m must be an integer ≥ 2, got {self.m}")
        object.__setattr__(self, "m", int(self.m))
        coupling = np.asarray(self.coupling, dtype=np.complex128).reshape(2, -1)
        object.__setattr__(self, "coupling", coupling)
        k = coupling.shape[1]
        tail = np.zeros((k, k), dtype=np.complex128) if self.tail is None else np.asarray(self.tail, dtype=np.complex128)
        if tail.shape != (k, k):
            raise ValueError(f"tail must be {k}×{k}")
        object.__setattr__(self, "tail", np.triu(tail, 1) - np.triu(tail, 1).T)
        if self.v12 is None:
            object.__setattr__(self, "v12", vring_value(self.m))
        h = (1.0,) * k if self.h is None else tuple(self.h)
        if len(h) != k or any(v == 0 for v in h) or any(v == 0 for v in self.c):
            raise ValueError("T constants c₁, c₂ and h must be non-zero, one h per one-dimensional block")
        object.__setattr__(self, "h", h)

    @property
    def n(self) -> int:
        return 2 + self.coupling.shape[1]

    @property
    def partition(self) -> BlockPartition:
        return BlockPartition((2,) + (1,) * (self.n - 2))

    def tau(self, t2: complex) -> complex:
        """t₂^{(m-2)/2}."""
        return _ppow(t2, (self.m - 2) / 2)

    def gram(self, t1: complex, t2: complex) -> Matrix:
        """[[η̃₁₁, η̃₁₂], [η̃₁₂, t₂^{m-2}η̃₁₁]]."""
        e, f = self.metric.values(t1, t2)
        return np.array([[e, f], [f, self.tau(t2) ** 2 * e]], dtype=np.complex128)

    def require_nondegenerate(self, t1: complex) -> None:
        """Raises DegenerateMetricError if the metric degenerates at t₂ = 0."""
        e, f = self.metric.values(t1, 0.0)
        if self.m >= 3 and f == 0:
            raise DegenerateMetricError("η̃₁₂ vanishes at t₂ = 0", field="caustic.eta12")
        if self.m == 2 and f * f - e * e == 0:
            raise DegenerateMetricError("η̃₁₂² - η̃₁₁² vanishes at t₂ = 0", field="caustic.eta12")


def _continued_sqrt(square, t2: complex, steps: int = 32) -> tuple[complex, bool]:
    """√square(t₂) continued along the arc from |t₂| to t₂; flags a sign flip against the principal root."""
    principal = complex(np.sqrt(complex(square(t2))))
    if t2 == 0:
        return principal, False
    r, theta = abs(t2), np.angle(t2)
    root = complex(np.sqrt(complex(square(r))))
    for k in range(1, steps + 1):
        cand = complex(np.sqrt(complex(square(r * np.exp(1j * theta * k / steps)))))
        root = cand if abs(cand - root) <= abs(cand + root) else -cand
    return root, abs(root - principal) > abs(root + principal)


def psi_coefficients(model: CausticModel, t1: complex, t2: complex) -> tuple[complex, complex, tuple[str, ...]]:
    """a, b with a² = η̃₁₂ + t₂^{(m-2)/2}η̃₁₁ and b² = η̃₁₂ - t₂^{(m-2)/2}η̃₁₁."""
    warnings = []

    def sq(sign: int):
        def f(t: complex) -> complex:
            e, g = model.metric.values(t1, t)
            return g + sign * model.tau(t) * e

        return f

    a, flip_a = _continued_sqrt(sq(1), t2)
    b, flip_b = _continued_sqrt(sq(-1), t2)
    if flip_a:
        warnings.append(f"branch of a flipped against the principal root at t₂ = {t2}")
    if flip_b:
        warnings.append(f"branch of b flipped against the principal root at t₂ = {t2}")
    return a, b, tuple(warnings)


@dataclass(frozen=True)
class PsiResult:
    Psi: Matrix
    U: Matrix
    a: complex
    b: complex
    gram_residual: float
    diagonal_residual: float
    warnings: tuple[str, ...] = ()


def caustic_u_matrix(model: CausticModel, t1: complex, t2: complex, u: Sequence[complex] = ()) -> Matrix:
    """𝒰 = Û ⊕ diag(u₃, ..., u_n) with Û = [[t₁, (2/m)t₂^{m-1}], [(2/m)t₂, t₁]]."""
    m = model.m
    U = np.zeros((model.n, model.n), dtype=np.complex128)
    U[:2, :2] = [[t1, 2 / m * t2 ** (m - 1)], [2 / m * t2, t1]]
    U[2:, 2:] = np.diag(np.asarray(u, dtype=np.complex128).reshape(model.n - 2))
    return U


def _psi_hat(m: int, t2: complex, a: complex, b: complex) -> Matrix:
    p, q = _ppow(t2, (2 - m) / 4), _ppow(t2, (m - 2) / 4)
    return np.array([[a * p, a * q], [1j * b * p, -1j * b * q]], dtype=np.complex128) / SQRT2


def caustic_psi(model: CausticModel, t1: complex, t2: complex, u: Sequence[complex] | None = None) -> PsiResult:
    """Ψ = Ψ̂ ⊕ I with its Gram and diagonalization certificates.

    Without ``u`` the certificate uses u_k = k for the one-dimensional blocks.

    Raises:
        PoleError: At t₂ = 0 for m ≥ 3.
    """
    m = model.m
    if t2 == 0 and m >= 3:
        raise PoleError("Ψ is singular at t₂ = 0 for m ≥ 3")
    if u is None:
        u = tuple(range(3, model.n + 1))
    elif len(u) != model.n - 2:
        raise ValueError(f"expected {model.n - 2} values u₃..u_n, got {len(u)}")
    a, b, warnings = psi_coefficients(model, t1, t2)
    Psi = np.eye(model.n, dtype=np.complex128)
    Psi[:2, :2] = _psi_hat(m, t2, a, b)
    G = np.eye(model.n, dtype=np.complex128)
    G[:2, :2] = model.gram(t1, t2)
    U = caustic_u_matrix(model, t1, t2, u)
    u1, u2 = caustic_coords(t1, t2, m)
    target = np.diag(np.concatenate([[u1, u2], np.asarray(u, dtype=np.complex128)]))
    scale = max(1.0, max_norm(U))
    return PsiResult(
        Psi=Psi,
        U=U,
        a=a,
        b=b,
        gram_residual=max_norm(Psi.T @ Psi - G) / max(1.0, max_norm(G)),
        diagonal_residual=max_norm(Psi @ U @ np.linalg.inv(Psi) - target) / scale,
        warnings=warnings,
    )


def psi_log_derivative(model: CausticModel, t1: complex, t2: complex, wrt: str = "t1") -> Matrix:
    """Ψ̂⁻¹∂Ψ̂ in closed form; the t₁-derivative is valid at t₂ = 0."""
    m = model.m
    e, f = model.metric.values(t1, t2)
    de, df = model.metric.derivative(t1, t2, wrt)
    tau = model.tau(t2)
    c = 1 / (2 * (f * f - tau * tau * e * e))
    if wrt == "t1":
        dE, dE_over_tau = tau * de, de
    elif wrt == "t2":
        if t2 == 0:
            raise PoleError("Ψ̂⁻¹∂Ψ̂/∂t₂ is singular at t₂ = 0")
        dtau_over_tau = (m - 2) / (2 * t2)
        dE = tau * (dtau_over_tau * e + de)
        dE_over_tau = dtau_over_tau * e + de
    else:
        raise ValueError(f"unknown variable {wrt!r}")
    d11 = c * (f * df - tau * e * dE)
    out = np.array(
        [[d11, c * tau * (f * dE - tau * e * df)], [c * (f * dE_over_tau - e * df), d11]],
        dtype=np.complex128,
    )
    if wrt == "t2":
        alpha = (2 - m) / 4
        out += alpha / t2 * np.diag([1.0, -1.0])
    return out


def caustic_v11_limit(model: CausticModel, t1: complex = 0.0) -> Matrix:
    """𝒱_{[1,1]} at t₂ = 0, with eigenvalues ±iV̊₁₂.

    m ≥ 3: iV̊₁₂[[1, 0], [-η̃₁₁/η̃₁₂, -1]]; m = 2: iV̊₁₂/(ab)·[[η̃₁₂, η̃₁₁], [-η̃₁₁, -η̃₁₂]].

    Raises:
        DegenerateMetricError: If the metric degenerates at t₂ = 0.
    """
    model.require_nondegenerate(t1)
    return _v11(model, t1, 0.0)


def _v11(model: CausticModel, t1: complex, t2: complex) -> Matrix:
    """𝒱_{[1,1]}(t₂) = iV₁₂/(ab)·[[η̃₁₂, t₂^{m-2}η̃₁₁], [-η̃₁₁, -η̃₁₂]]."""
    e, f = model.metric.values(t1, t2)
    a, b, _ = psi_coefficients(model, t1, t2)
    tau2 = model.tau(t2) ** 2
    return 1j * model.v12 / (a * b) * np.array([[f, tau2 * e], [-e, -f]], dtype=np.complex128)


def caustic_calV(model: CausticModel, t1: complex, t2: complex) -> Matrix:
    """𝒱(t₂) with the η-skew completion A_{k,[1]} = -(Ĝ A_{[1],k})ᵀ, so that Ψ𝒱Ψ⁻¹ is skew."""
    n = model.n
    calV = np.zeros((n, n), dtype=np.complex128)
    calV[:2, :2] = _v11(model, t1, t2)
    calV[:2, 2:] = model.coupling
    calV[2:, :2] = -(model.gram(t1, t2) @ model.coupling).T
    calV[2:, 2:] = model.tail
    return calV


def caustic_V(model: CausticModel, t1: complex, t2: complex, u: Sequence[complex]) -> tuple[Matrix, float]:
    """V = Ψ𝒱Ψ⁻¹ off the caustic and its skew residual ‖V + Vᵀ‖."""
    psi = caustic_psi(model, t1, t2, u).Psi
    V = psi @ caustic_calV(model, t1, t2) @ np.linalg.inv(psi)
    return V, max_norm(V + V.T)


def _v_fields(V: Matrix, canon: npt.NDArray[np.complex128]) -> list[Matrix]:
    """V_j with (V_j)_{rs} = V_{rs}(δ_{rj} - δ_{sj})/(u_r - u_s)."""
    n = canon.size
    gap = canon[:, None] - canon[None, :]
    scaled = np.where(np.eye(n, dtype=bool), 0.0, V / np.where(np.eye(n, dtype=bool), 1.0, gap))
    idx = np.arange(n)
    return [np.where(idx[:, None] == j, scaled, 0.0) - np.where(idx[None, :] == j, scaled, 0.0) for j in range(n)]


def conjugated_fields(model: CausticModel, t1: complex, t2: complex, u: Sequence[complex]) -> list[Matrix]:
    """𝒱₂ = Ψ⁻¹(V₁+V₂)Ψ followed by 𝒱_j = Ψ⁻¹V_jΨ for j ≥ 3."""
    psi = caustic_psi(model, t1, t2, u).Psi
    V = psi @ caustic_calV(model, t1, t2) @ np.linalg.inv(psi)
    u1, u2 = caustic_coords(t1, t2, model.m)
    fields = _v_fields(V, np.concatenate([[u1, u2], np.asarray(u, dtype=np.complex128)]))
    inv = np.linalg.inv(psi)
    return [inv @ (fields[0] + fields[1]) @ psi] + [inv @ F @ psi for F in fields[2:]]


def richardson_limit(f_small: Matrix, f_large: Matrix, h_small: float, h_large: float) -> Matrix:
    """Linear extrapolation to 0 of a quantity with an O(h) error."""
    return f_small + (f_small - f_large) * h_small / (h_large - h_small)


def caustic_T(model: CausticModel, t1: complex) -> Matrix:
    """𝒯 = 𝒯₁ ⊕ diag(h₂, ..., h_{n-1}).

    m ≥ 3: 𝒯₁ = η̃₁₂^{-1/2}[[c₁, 0], [-c₁η̃₁₁/(2η̃₁₂), c₂]] at t₂ = 0.
    m = 2: 𝒯₁ = Ψ̂⁻¹(t₁, 0)·[[1, 1], [i, -i]]/√2.
    """
    model.require_nondegenerate(t1)
    e, f = model.metric.values(t1, 0.0)
    c1, c2 = model.c
    if model.m >= 3:
        T1 = np.array([[c1, 0], [-c1 / 2 * e / f, c2]], dtype=np.complex128) / np.sqrt(complex(f))
    else:
        a, b, _ = psi_coefficients(model, t1, 0.0)
        C = np.array([[1, 1], [1j, -1j]], dtype=np.complex128) / SQRT2
        T1 = np.linalg.solve(_psi_hat(2, 0.0, a, b), C)
    T = np.diag(np.concatenate([[1, 1], np.asarray(model.h, dtype=np.complex128)]))
    T[:2, :2] = T1
    return T


@dataclass(frozen=True)
class RestrictedCaustic:
    """The Pfaffian system induced on t₂ = 0 with λ = (t₁, u₃, ..., u_n)."""

    model: CausticModel
    system: CoalescedSystem
    form: PfaffianForm
    T: Matrix

    @property
    def J(self) -> Matrix:
        return np.linalg.solve(self.T, self.system.A @ self.T)


def caustic_restricted_system(
    model: CausticModel, t1: complex, u: Sequence[complex], eig_sep_tol: float = 1e-8
) -> RestrictedCaustic:
    """Λ = diag(t₁, t₁, u₃, ..., u_n), A = 𝒱|_{t₂=0}, 𝒟₁ = -Ψ⁻¹∂_{t₁}Ψ|_{t₂=0}.

    Raises:
        StratumError: If t₁ and the u_j are not pairwise separated.
        DegenerateMetricError: If the metric degenerates at t₂ = 0.
    """
    model.require_nondegenerate(t1)
    part = model.partition
    lam = Lambda((t1, *u), part)
    lam.require_separated(eig_sep_tol)
    D0 = np.zeros((model.n, model.n), dtype=np.complex128)
    D0[:2, :2] = -psi_log_derivative(model, t1, 0.0, "t1")
    dblocks = (D0,) + tuple(np.zeros_like(D0) for _ in range(part.s - 1))
    system = CoalescedSystem(lam, caustic_calV(model, t1, 0.0), dblocks=dblocks)
    return RestrictedCaustic(model, system, build_form(system, eig_sep_tol), caustic_T(model, t1))


def restricted_limit_residual(
    model: CausticModel, t1: complex, u: Sequence[complex], steps: tuple[float, float] = (1e-4, 1e-5)
) -> float:
    """Max distance between the extrapolated t₂ → 0 limits of 𝒱₂, 𝒱_j and ω₁, ω_{j-1}."""
    large, small = steps
    omegas = build_omega(CoalescedSystem(Lambda((t1, *u), model.partition), caustic_calV(model, t1, 0.0)))
    f_large = conjugated_fields(model, t1, large, u)
    f_small = conjugated_fields(model, t1, small, u)
    return max(
        max_norm(richardson_limit(s, l, small, large) - w) for s, l, w in zip(f_small, f_large, omegas)
    )


@dataclass(frozen=True)
class TCertificate:
    equation_residual: float
    constraint_residual: float


def t1_certificate(model: CausticModel, t1: complex, h: float = 1e-5) -> TCertificate:
    """∂𝒯₁/∂t₁ 𝒯₁⁻¹ + Ψ̂⁻¹∂_{t₁}Ψ̂|_{t₂=0} by central differences, and 𝒯₁⁻¹𝒱_{[1,1]}𝒯₁ - diag(iV̊₁₂, -iV̊₁₂)."""
    T = caustic_T(model, t1)[:2, :2]
    dT = (caustic_T(model, t1 + h)[:2, :2] - caustic_T(model, t1 - h)[:2, :2]) / (2 * h)
    eq = dT @ np.linalg.inv(T) + psi_log_derivative(model, t1, 0.0, "t1")
    J = np.linalg.solve(T, caustic_v11_limit(model, t1) @ T)
    iv = 1j * model.v12
    return TCertificate(max_norm(eq), max_norm(J - np.diag([iv, -iv])))


@dataclass(frozen=True)
class VringReport:
    """Growth of t₂^{(m-2)/2}Ψ̂⁻¹(V₁-V₂)Ψ̂ - Ψ̂⁻¹∂_{t₂}Ψ̂ per candidate V̊₁₂.

    ``exponents`` are fitted slopes of log‖·‖ against log t₂: ≈ 0 bounded, ≈ -1 divergent.
    """

    candidates: tuple[complex, ...]
    grid: tuple[float, ...]
    exponents: tuple[float, ...]
    bounded: tuple[bool, ...]
    limits: tuple[Matrix, ...]
    threshold: float


def holomorphy_defect(model: CausticModel, v12: complex, t1: complex, t2: complex) -> Matrix:
    """The [1,1] block (m/(2t₂))V₁₂·Ψ̂⁻¹KΨ̂ - Ψ̂⁻¹∂_{t₂}Ψ̂, K = [[0, 1], [-1, 0]]."""
    e, f = model.metric.values(t1, t2)
    a, b, _ = psi_coefficients(model, t1, t2)
    tau2 = model.tau(t2) ** 2
    conj_K = 1j / (a * b) * np.array([[f, tau2 * e], [-e, -f]], dtype=np.complex128)
    return model.m / (2 * t2) * v12 * conj_K - psi_log_derivative(model, t1, t2, "t2")


def vring_scan(
    model: CausticModel,
    candidates: Sequence[complex],
    grid: Sequence[float] = tuple(10.0 ** -k for k in range(1, 7)),
    t1: complex = 0.0,
    threshold: float = -0.25,
    floor: float = 1e-8,
) -> VringReport:
    """Fit the growth exponent of the holomorphy defect along a t₂ grid approaching 0."""
    grid = tuple(sorted((float(t) for t in grid), reverse=True))
    if len(grid) < 2:
        raise ValueError("the t₂ grid needs at least two points")
    logs = np.log(grid)
    exponents, bounded, limits = [], [], []
    for v in candidates:
        defects = [holomorphy_defect(model, v, t1, t) for t in grid]
        norms = np.array([max(max_norm(X), floor) for X in defects])
        slope = float(np.polyfit(logs, np.log(norms), 1)[0])
        exponents.append(slope)
        bounded.append(slope >= threshold)
        limits.append(richardson_limit(defects[-1], defects[-2], grid[-1], grid[-2]))
    return VringReport(tuple(complex(v) for v in candidates), grid, tuple(exponents), tuple(bounded), tuple(limits), threshold)
