from isolab.check import Check
from isolab.check_result import CheckResult
from isolab.flow import FlowResult
from isolab.tolerances import Tolerances
from isolab.utils.lab_log import LabLog


class FlowInvariants(Check):
    """Check of the monitors carried along a flow: isospectrality, diagonal blocks, T⁻¹A_D T."""

    def __init__(
        self,
        flow: FlowResult,
        log: LabLog,
        tolerances: Tolerances | None = None,
        parent: Check | None = None,
    ) -> None:
        """Initialize the FlowInvariants check.

        Args:
            flow: The integrated flow.
            log: The logger instance.
            tolerances: Numerical tolerances; defaults when omitted.
            parent: Optional parent Check for hierarchy.
        """
        self.flow = flow
        self.log = log
        self.tolerances = tolerances or Tolerances()
        self.parent = parent

    def run(self, verbose: bool = False) -> CheckResult:
        """Grade the maximal drift of every monitor against monitor_fail.

        The diagonal-block monitor only applies with zero 𝒟.

        Args:
            verbose: If True, log every warning the flow recorded.

        Returns:
            CheckResult: PASS when every applicable drift is within monitor_fail.
        """
        monitors = self.flow.monitors
        residuals = {"spectrum_drift": monitors.max_spectrum_drift}
        if self.flow.dspec_name == "zero":
            residuals["diag_block_drift"] = monitors.max_diag_block_drift
        if monitors.max_jordan_drift is not None:
            residuals["jordan_drift"] = monitors.max_jordan_drift
        if verbose:
            for warning in self.flow.warnings:
                self.log.warn_from(self, warning)
        return CheckResult.from_residuals(
            f"flow invariants over {self.flow.steps} steps", residuals, self.tolerances.monitor_fail
        )

    def description(self) -> str:
        return "Verifies isospectrality and block invariants along the flow"
