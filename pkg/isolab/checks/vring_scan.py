from collections.abc import Sequence

from isolab.caustic import CausticModel, vring_scan, vring_value
from isolab.check import Check
from isolab.check_result import CheckResult
from isolab.check_status import CheckStatus
from isolab.utils.lab_log import LabLog


def default_candidates(m: int) -> tuple[complex, ...]:
    """V̊₁₂, V̊₁₂ ± 0.05 and 0, without repeats."""
    v = vring_value(m)
    out: list[complex] = []
    for c in (v, v + 0.05, v - 0.05, 0.0):
        if all(abs(c - o) > 1e-12 for o in out):
            out.append(complex(c))
    return tuple(out)


class VringScan(Check):
    """Scan of candidate V̊₁₂ values for holomorphy of the t₂-coefficient at the caustic."""

    def __init__(
        self,
        model: CausticModel,
        log: LabLog,
        candidates: Sequence[complex] | None = None,
        grid: Sequence[float] = tuple(10.0 ** -k for k in range(1, 7)),
        t1: complex = 0.0,
        parent: Check | None = None,
    ) -> None:
        """Initialize the VringScan check.

        Args:
            model: The caustic model; its V̊₁₂ is ignored by the scan.
            log: The logger instance.
            candidates: Values to test; V̊₁₂, V̊₁₂ ± 0.05 and 0 when omitted.
            grid: t₂ values approaching 0.
            t1: Point on the caustic.
            parent: Optional parent Check for hierarchy.
        """
        self.model = model
        self.log = log
        self.candidates = default_candidates(model.m) if candidates is None else tuple(candidates)
        self.grid = tuple(grid)
        self.t1 = t1
        self.parent = parent

    def run(self, verbose: bool = False) -> CheckResult:
        """Fit growth exponents and compare the bounded set with i(m-2)/(2m).

        Args:
            verbose: If True, log the exponent of each candidate.

        Returns:
            CheckResult: PASS when exactly the candidates equal to i(m-2)/(2m) are bounded.
        """
        report = vring_scan(self.model, self.candidates, self.grid, self.t1)
        expected = vring_value(self.model.m)
        residuals: dict[str, float] = {}
        mismatched = []
        for v, exponent, bounded in zip(report.candidates, report.exponents, report.bounded):
            residuals[f"exponent[{v:.6g}]"] = exponent
            if verbose:
                self.log.info_from(self, f"V̊₁₂={v:.6g}: exponent {exponent:.3f} ({'bounded' if bounded else 'divergent'})")
            if bounded != (abs(v - expected) <= 1e-9):
                mismatched.append(f"{v:.6g}")
        bounded_set = [f"{v:.6g}" for v, b in zip(report.candidates, report.bounded) if b]
        message = f"m={self.model.m}: bounded at {', '.join(bounded_set) or 'no candidate'}"
        if mismatched:
            return CheckResult(CheckStatus.FAIL, f"{message}; unexpected verdict for {', '.join(mismatched)}", residuals)
        return CheckResult(CheckStatus.PASS, message, residuals)

    def description(self) -> str:
        return "Scans V̊₁₂ candidates for holomorphy at the caustic"
