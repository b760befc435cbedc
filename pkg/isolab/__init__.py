from isolab.check import Check
from isolab.check_engine import CheckEngine
from isolab.check_result import CheckResult
from isolab.check_status import CheckStatus
from isolab.container import Container
from isolab.tolerances import Tolerances

__all__ = [
    "Check",
    "CheckEngine",
    "CheckResult",
    "CheckStatus",
    "Container",
    "Tolerances",
]
