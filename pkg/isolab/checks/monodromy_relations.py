from isolab.check import Check
from isolab.check_result import CheckResult
from isolab.monodromy import monodromy_data
from isolab.pfaffian import CoalescedSystem
from isolab.tolerances import Tolerances
from isolab.utils.lab_log import LabLog


class MonodromyRelations(Check):
    """Check of the relations tying the data at 0 and at ∞ together at one λ."""

    def __init__(
        self,
        system: CoalescedSystem,
        log: LabLog,
        tolerances: Tolerances | None = None,
        parent: Check | None = None,
    ) -> None:
        """Initialize the MonodromyRelations check.

        Args:
            system: The system whose monodromy data is computed.
            log: The logger instance.
            tolerances: Numerical tolerances; defaults when omitted.
            parent: Optional parent Check for hierarchy.
        """
        self.system = system
        self.log = log
        self.tolerances = tolerances or Tolerances()
        self.parent = parent

    def run(self, verbose: bool = False) -> CheckResult:
        """Compute the monodromy data and grade the cyclic and loop relations.

        Args:
            verbose: If True, log the Stokes matrices and warnings.

        Returns:
            CheckResult: PASS when every relation holds within the error budget.
        """
        tol = self.tolerances
        data = monodromy_data(self.system, tolerances=tol)
        for warning in data.warnings:
            self.log.warn_from(self, warning)
        if verbose:
            self.log.info_from(self, f"S0 =\n{data.S0}")
            self.log.info_from(self, f"S1 =\n{data.S1}")
        budget = data.eps_init + tol.ode_rtol * tol.match_scale / tol.eval_scale
        return CheckResult.from_residuals(
            "monodromy relations", dict(data.residuals), max(tol.audit_tol, 3 * budget)
        )

    def description(self) -> str:
        return "Verifies the cyclic and loop relations of the monodromy data"
