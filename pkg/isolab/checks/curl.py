from isolab.check import Check
from isolab.check_result import CheckResult
from isolab.check_status import CheckStatus
from isolab.flow import DSpec, flowing_form
from isolab.pfaffian import CoalescedSystem, curl_residual
from isolab.tolerances import Tolerances
from isolab.utils.lab_log import LabLog

RICHARDSON_BAND = (3.5, 4.5)
"""Accepted range of the Richardson ratio of a second-order stencil."""


class Curl(Check):
    """Finite-difference integrability check of the λ-part of the Pfaffian form.

    A(λ) around the centre is obtained from the deformation flow, so the
    residual measures the integrability of ω̃ together with 𝒟.
    """

    def __init__(
        self,
        system: CoalescedSystem,
        log: LabLog,
        dspec: DSpec | None = None,
        tolerances: Tolerances | None = None,
        parent: Check | None = None,
    ) -> None:
        """Initialize the Curl check.

        Args:
            system: The system at the stencil centre.
            log: The logger instance.
            dspec: Source of the 𝒟_j; zero when omitted.
            tolerances: Numerical tolerances; defaults when omitted.
            parent: Optional parent Check for hierarchy.
        """
        self.system = system
        self.log = log
        self.dspec = dspec
        self.tolerances = tolerances or Tolerances()
        self.parent = parent

    def run(self, verbose: bool = False) -> CheckResult:
        """Evaluate the curl residuals and grade their Richardson ratios.

        Args:
            verbose: If True, log the residual of every (j, k) pair.

        Returns:
            CheckResult: FAIL when the ω̃ or the 𝒟 curl exceeds curl_tol, WARN
            when a Richardson ratio falls outside RICHARDSON_BAND, PASS otherwise.
            The ratios are reported as diagnostics; None marks a residual with
            no step dependence above rounding.
        """
        tol = self.tolerances
        if self.system.s < 2:
            return CheckResult(CheckStatus.PASS, "single block: no curl to check")
        report = curl_residual(
            flowing_form(self.system, self.dspec, tol), self.system.lam.array, fd_step=tol.fd_step
        )
        if verbose:
            for (j, k), value in report.pair_residuals.items():
                self.log.info_from(self, f"curl({j},{k}) = {value:.3e}")
        residuals = {"omega_curl": report.max_residual, "d_curl": report.dcurl_residual}
        result = CheckResult.from_residuals(f"curl at h={report.h:.1e}", residuals, tol.curl_tol)
        ratios = {"richardson_ratio": report.ratio, "d_richardson_ratio": report.dcurl_ratio}
        result.diagnostics = dict(ratios)

        low, high = RICHARDSON_BAND
        notes, off_band = [], []
        for name, ratio in ratios.items():
            if ratio is None:
                notes.append(f"{name} undefined")
            elif low <= ratio <= high:
                notes.append(f"{name} {ratio:.3f}")
            else:
                notes.append(f"{name} {ratio:.3f} outside [{low}, {high}]")
                off_band.append(name)
        result.message = f"{result.message}; {', '.join(notes)}"
        if off_band and result.status == CheckStatus.PASS:
            result.status = CheckStatus.WARN
        return result

    def description(self) -> str:
        return "Verifies Frobenius integrability of the deformation form"
