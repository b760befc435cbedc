from isolab.check import Check
from isolab.check_result import CheckResult
from isolab.check_status import CheckStatus
from isolab.flow import FlowResult
from isolab.tolerances import Tolerances
from isolab.utils.lab_log import LabLog


class LoopClosure(Check):
    """Check that a flow around a closed λ-loop returns A to its start."""

    def __init__(
        self,
        flow: FlowResult,
        log: LabLog,
        tolerances: Tolerances | None = None,
        parent: Check | None = None,
    ) -> None:
        """Initialize the LoopClosure check.

        Args:
            flow: A flow along a closed path.
            log: The logger instance.
            tolerances: Numerical tolerances; defaults when omitted.
            parent: Optional parent Check for hierarchy.
        """
        self.flow = flow
        self.log = log
        self.tolerances = tolerances or Tolerances()
        self.parent = parent

    def run(self, verbose: bool = False) -> CheckResult:
        """Compare A at the end of the loop with A at its start.

        Args:
            verbose: Unused.

        Returns:
            CheckResult: PASS when the closure residual is within closure_tol, WARN for open paths.
        """
        closure = self.flow.monitors.closure
        if closure is None:
            return CheckResult(CheckStatus.WARN, "path is not closed; closure not measured")
        return CheckResult.from_residuals("loop closure", {"closure": closure}, self.tolerances.closure_tol)

    def description(self) -> str:
        return "Verifies that contractible λ-loops return A to its start"
