from isolab.check import Check
from isolab.check_result import CheckResult
from isolab.check_status import CheckStatus
from isolab.errors import IsolabError
from isolab.utils.lab_log import LabLog


class CheckEngine:
    """Runs a list of checks, logs every result and a summary."""

    def __init__(self, log: LabLog) -> None:
        """Initialize the CheckEngine.

        Args:
            log: The logger instance.
        """
        self.log = log
        self.checks: list[Check] = []

    def __repr__(self) -> str:
        """Return a string representation of this engine."""
        return f"CheckEngine(checks={len(self.checks)})"

    def add_check(self, check: Check) -> None:
        """Queue a check for the next run.

        Args:
            check: The check to add.
        """
        self.log.info_from(self, f"Adding check: {check}")
        self.checks.append(check)

    def run_checks(self, verbose: bool = False) -> list[tuple[Check, CheckResult]]:
        """Run all queued checks in order.

        A check that raises an IsolabError is recorded as FAIL and the run
        continues with the next check.

        Args:
            verbose: Passed through to every check.

        Returns:
            list[tuple[Check, CheckResult]]: Every check with its result.
        """
        self.log.info_from(self, f"Running {len(self.checks)} checks")
        outcomes: list[tuple[Check, CheckResult]] = []
        for i, check in enumerate(self.checks, 1):
            self.log.info_from(self, f"Check {i}/{len(self.checks)}: {check} - {check.description()}")
            try:
                result = check.run(verbose)
            except IsolabError as exc:
                result = CheckResult(CheckStatus.FAIL, f"{type(exc).__name__}: {exc}")
            self._log_result(check, result)
            outcomes.append((check, result))

        passed = sum(1 for _, r in outcomes if r.status == CheckStatus.PASS)
        failed = sum(1 for _, r in outcomes if r.status == CheckStatus.FAIL)
        warned = sum(1 for _, r in outcomes if r.status == CheckStatus.WARN)
        self.log.info_from(self, f"Summary: {passed} passed, {failed} failed, {warned} warned")
        return outcomes

    @staticmethod
    def verdict(outcomes: list[tuple[Check, CheckResult]]) -> CheckStatus:
        """Aggregate results: FAIL beats WARN beats PASS.

        Args:
            outcomes: The (check, result) pairs of a run.

        Returns:
            CheckStatus: PASS for an empty run.
        """
        statuses = {result.status for _, result in outcomes}
        if CheckStatus.FAIL in statuses:
            return CheckStatus.FAIL
        if CheckStatus.WARN in statuses:
            return CheckStatus.WARN
        return CheckStatus.PASS

    def _log_result(self, check: Check, result: CheckResult) -> None:
        """Log one result at the level matching its status.

        Args:
            check: The check that produced the result.
            result: Its result; PASS logs at INFO, WARN at WARN, FAIL at ERROR.
        """
        if result.status == CheckStatus.PASS:
            self.log.info_from(check, f"Result: {result}")
        elif result.status == CheckStatus.WARN:
            self.log.warn_from(check, f"Result: {result}")
        else:
            self.log.error_from(check, f"Result: {result}")
