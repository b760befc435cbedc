from isolab.check import Check
from isolab.check_result import CheckResult
from isolab.pfaffian import CoalescedSystem, build_form, check_linear_constraints
from isolab.tolerances import Tolerances
from isolab.utils.lab_log import LabLog


class LinearConstraints(Check):
    """Check of the linear identities [Λ, ω̃_j] = [E_{p_j}, A] and their companions."""

    def __init__(
        self,
        system: CoalescedSystem,
        log: LabLog,
        tolerances: Tolerances | None = None,
        parent: Check | None = None,
    ) -> None:
        """Initialize the LinearConstraints check.

        Args:
            system: The coalesced system to check.
            log: The logger instance.
            tolerances: Numerical tolerances; defaults when omitted.
            parent: Optional parent Check for hierarchy.
        """
        self.system = system
        self.log = log
        self.tolerances = tolerances or Tolerances()
        self.parent = parent

    def run(self, verbose: bool = False) -> CheckResult:
        """Build the Pfaffian form and grade its constraint residuals.

        Args:
            verbose: If True, log each residual.

        Returns:
            CheckResult: PASS when every residual is below constraint_tol relative to the form's scale.
        """
        form = build_form(self.system, self.tolerances.eig_sep_tol)
        report = check_linear_constraints(form, self.tolerances.constraint_tol)
        if verbose:
            for name, value in report.residuals.items():
                self.log.info_from(self, f"{name} = {value:.3e}")
        return CheckResult.from_residuals(
            f"linear constraints on n={self.system.n}, s={self.system.s}",
            report.residuals,
            report.tolerance * report.scale,
        )

    def description(self) -> str:
        return "Verifies the algebraic constraints of the Pfaffian form"
