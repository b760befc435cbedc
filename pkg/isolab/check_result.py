from dataclasses import dataclass, field

from isolab.check_status import CheckStatus


@dataclass
class CheckResult:
    """Result of one check.

    ``residuals`` are graded against ``tolerance``; ``diagnostics`` are reported
    alongside them but never compared to it.
    """

    status: CheckStatus
    message: str
    residuals: dict[str, float] = field(default_factory=dict)
    tolerance: float | None = None
    diagnostics: dict[str, float | None] = field(default_factory=dict)

    def __repr__(self) -> str:
        return f"[{self.status.value}] {self.message}"

    @classmethod
    def from_residuals(
        cls, message: str, residuals: dict[str, float], tolerance: float
    ) -> "CheckResult":
        """PASS when every residual is within ``tolerance``, FAIL otherwise.

        Args:
            message: Human-readable description of what was checked.
            residuals: Named residuals.
            tolerance: Pass threshold applied to each residual.

        Returns:
            CheckResult: The graded result; failing residual names are appended to the message.
        """
        failing = [name for name, value in residuals.items() if not value <= tolerance]
        if failing:
            return cls(CheckStatus.FAIL, f"{message}; failing: {', '.join(failing)}", residuals, tolerance)
        return cls(CheckStatus.PASS, message, residuals, tolerance)
