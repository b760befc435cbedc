from enum import Enum


class CheckStatus(Enum):
    """Outcome of a numerical check."""

    PASS = "PASS"
    FAIL = "FAIL"
    WARN = "WARN"

    def __repr__(self) -> str:
        return self.value
