from isolab.check import Check
from isolab.check_result import CheckResult
from isolab.check_status import CheckStatus
from isolab.infinity import formal_series
from isolab.levelt import SeriesCertificate, levelt_series
from isolab.monodromy import centred
from isolab.pfaffian import CoalescedSystem
from isolab.tolerances import Tolerances
from isolab.utils.lab_log import LabLog


def _entry(name: str, cert: SeriesCertificate) -> tuple[str, float]:
    if cert.exact:
        return f"{name}_residual", max(cert.residuals, default=0.0)
    return f"{name}_slope", float("nan") if cert.slope is None else cert.slope


class SeriesCertificates(Check):
    """Residual-slope certificates of the formal series at z = 0 and z = ∞."""

    LEVELT_SLACK = 1.5
    INFINITY_SLACK = 0.5

    def __init__(
        self,
        system: CoalescedSystem,
        log: LabLog,
        tolerances: Tolerances | None = None,
        parent: Check | None = None,
    ) -> None:
        """Initialize the SeriesCertificates check.

        Args:
            system: The system whose series are certified.
            log: The logger instance.
            tolerances: Numerical tolerances; defaults when omitted.
            parent: Optional parent Check for hierarchy.
        """
        self.system = system
        self.log = log
        self.tolerances = tolerances or Tolerances()
        self.parent = parent

    def run(self, verbose: bool = False) -> CheckResult:
        """Fit the residual slopes of both truncated series.

        Args:
            verbose: If True, log the sampled radii and residuals.

        Returns:
            CheckResult: PASS when the slopes reach K+1 within the slack (K-0.5 at 0, K+0.5 at ∞).
        """
        tol = self.tolerances
        sys = centred(self.system)
        at_zero = levelt_series(sys, tol.levelt_K, tol.int_tol).certificate
        at_inf = formal_series(sys, tol.infinity_K, tol.int_tol).certificate
        if verbose:
            self.log.info_from(self, f"z→0 radii {at_zero.radii} residuals {at_zero.residuals}")
            self.log.info_from(self, f"z→∞ radii {at_inf.radii} residuals {at_inf.residuals}")
        residuals = dict([_entry("levelt", at_zero), _entry("infinity", at_inf)])
        ok = at_zero.passed(self.LEVELT_SLACK) and at_inf.passed(self.INFINITY_SLACK)
        message = f"series certificates (K={tol.levelt_K} at 0, K={tol.infinity_K} at ∞)"
        return CheckResult(CheckStatus.PASS if ok else CheckStatus.FAIL, message, residuals)

    def description(self) -> str:
        return "Certifies the truncation order of the formal series at 0 and ∞"
