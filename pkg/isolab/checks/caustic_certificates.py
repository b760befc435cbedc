from collections.abc import Sequence

import numpy as np

from isolab.blocks import max_norm
from isolab.caustic import (
    CausticModel,
    caustic_psi,
    caustic_restricted_system,
    caustic_v11_limit,
    restricted_limit_residual,
    t1_certificate,
)
from isolab.check import Check
from isolab.check_result import CheckResult
from isolab.check_status import CheckStatus
from isolab.pfaffian import check_linear_constraints
from isolab.tolerances import Tolerances
from isolab.utils.lab_log import LabLog


class CausticCertificates(Check):
    """Certificates of the caustic model: Ψ, the t₂ = 0 block, the restricted system and 𝒯₁."""

    BOUNDS = {
        "psi_gram": 1e-10,
        "psi_diagonal": 1e-10,
        "v11_spectrum": 1e-12,
        "v11_trace": 1e-13,
        "restricted_constraints": 1e-12,
        "restricted_limit": 1e-9,
        "t1_equation": 1e-8,
        "t1_constraint": 1e-10,
    }

    def __init__(
        self,
        model: CausticModel,
        log: LabLog,
        t1: complex = 0.0,
        u: Sequence[complex] | None = None,
        grid: Sequence[float] = (1e-3, 1e-2, 1e-1),
        tolerances: Tolerances | None = None,
        parent: Check | None = None,
    ) -> None:
        """Initialize the CausticCertificates check.

        Args:
            model: The caustic model.
            log: The logger instance.
            t1: Point on the caustic.
            u: Canonical coordinates u₃..u_n; 3, 4, ... when omitted.
            grid: t₂ values for the Ψ certificates.
            tolerances: Numerical tolerances; defaults when omitted.
            parent: Optional parent Check for hierarchy.
        """
        self.model = model
        self.log = log
        self.t1 = t1
        self.u = tuple(range(3, model.n + 1)) if u is None else tuple(u)
        self.grid = tuple(grid)
        self.tolerances = tolerances or Tolerances()
        self.parent = parent

    def run(self, verbose: bool = False) -> CheckResult:
        """Evaluate every certificate and grade each against its own bound.

        Args:
            verbose: If True, log branch warnings of Ψ.

        Returns:
            CheckResult: PASS when every certificate is within its bound.
        """
        model, t1 = self.model, self.t1
        psis = [caustic_psi(model, t1, t2, self.u) for t2 in self.grid]
        if verbose:
            for psi in psis:
                for warning in psi.warnings:
                    self.log.warn_from(self, warning)
        block = caustic_v11_limit(model, t1)
        iv = 1j * model.v12
        eig = np.sort_complex(np.linalg.eigvals(block))
        restricted = caustic_restricted_system(model, t1, self.u, self.tolerances.eig_sep_tol)
        constraints = check_linear_constraints(restricted.form, self.tolerances.constraint_tol)
        tcert = t1_certificate(model, t1)
        residuals = {
            "psi_gram": max(p.gram_residual for p in psis),
            "psi_diagonal": max(p.diagonal_residual for p in psis),
            "v11_spectrum": float(np.max(np.abs(eig - np.sort_complex(np.array([iv, -iv]))))),
            "v11_trace": abs(complex(np.trace(block))),
            "restricted_constraints": max(constraints.residuals.values()) / constraints.scale,
            "restricted_limit": restricted_limit_residual(model, t1, self.u),
            "t1_equation": tcert.equation_residual,
            "t1_constraint": tcert.constraint_residual,
        }
        residuals["restricted_limit"] /= max(1.0, max_norm(restricted.system.A))
        failing = [name for name, value in residuals.items() if not value <= self.BOUNDS[name]]
        message = f"caustic certificates for m={model.m}, n={model.n}"
        if failing:
            return CheckResult(CheckStatus.FAIL, f"{message}; failing: {', '.join(failing)}", residuals)
        return CheckResult(CheckStatus.PASS, message, residuals)

    def description(self) -> str:
        return "Certifies Ψ, the caustic block and the restricted Pfaffian system"
