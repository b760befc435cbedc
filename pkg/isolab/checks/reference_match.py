import numpy as np
import numpy.typing as npt

from isolab.blocks import max_norm
from isolab.check import Check
from isolab.check_result import CheckResult
from isolab.utils.lab_log import LabLog


class ReferenceMatch(Check):
    """Relative distance between a computed matrix and a closed-form reference."""

    def __init__(
        self,
        label: str,
        actual: npt.ArrayLike,
        expected: npt.ArrayLike,
        log: LabLog,
        tolerance: float = 1e-8,
        parent: Check | None = None,
    ) -> None:
        self.label = label
        self.actual = np.asarray(actual, dtype=np.complex128)
        self.expected = np.asarray(expected, dtype=np.complex128)
        self.log = log
        self.tolerance = tolerance
        self.parent = parent

    def run(self, verbose: bool = False) -> CheckResult:
        error = max_norm(self.actual - self.expected) / max(max_norm(self.expected), 1e-300)
        return CheckResult.from_residuals(self.label, {"relative_error": error}, self.tolerance)

    def description(self) -> str:
        return f"Compares {self.label} with its closed form"
