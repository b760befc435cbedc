from isolab.check import Check
from isolab.check_result import CheckResult
from isolab.check_status import CheckStatus
from isolab.flow import FlowResult
from isolab.monodromy import verify_strong_isomonodromy
from isolab.pfaffian import CoalescedSystem
from isolab.tolerances import Tolerances
from isolab.utils.lab_log import LabLog


class StrongIsomonodromy(Check):
    """Audit of 𝕊₀, 𝕊₁, C₀ and the exponents across λ-samples of a flow."""

    def __init__(
        self,
        flow: FlowResult,
        log: LabLog,
        samples: int = 3,
        tolerances: Tolerances | None = None,
        template: CoalescedSystem | None = None,
        parent: Check | None = None,
    ) -> None:
        """Initialize the StrongIsomonodromy check.

        Args:
            flow: The flow (or frozen control) to audit.
            log: The logger instance.
            samples: Number of λ-samples compared.
            tolerances: Numerical tolerances; defaults when omitted.
            template: System carrying the partition and 𝒟 of the flow.
            parent: Optional parent Check for hierarchy.
        """
        self.flow = flow
        self.log = log
        self.samples = samples
        self.tolerances = tolerances or Tolerances()
        self.template = template
        self.parent = parent

    def run(self, verbose: bool = False) -> CheckResult:
        """Compute the monodromy data at every sample and compare them.

        Args:
            verbose: If True, log the data of every sample.

        Returns:
            CheckResult: PASS when every item is constant within the audit bound.
        """
        audit = verify_strong_isomonodromy(self.flow, self.samples, self.tolerances, self.template)
        if verbose:
            for k, data in enumerate(audit.data):
                if data is None:
                    self.log.warn_from(self, f"sample {k} failed: {audit.errors[k]}")
                else:
                    self.log.info_from(self, f"sample {k} at λ={data.lam}: mu={data.mu}")
        bound = next(iter(audit.tolerances.values()))
        residuals = dict(audit.deviations)
        if audit.errors:
            failures = "; ".join(f"sample {k}: {msg}" for k, msg in sorted(audit.errors.items()))
            return CheckResult(CheckStatus.FAIL, f"monodromy data unavailable ({failures})", residuals, bound)
        return CheckResult.from_residuals(
            f"strong isomonodromy over {len(audit.lambdas)} samples in {len(audit.segments)} segment(s)",
            residuals,
            bound,
        )

    def description(self) -> str:
        return "Audits constancy of Stokes, connection and exponent data"
