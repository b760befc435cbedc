class IsolabError(Exception):
    """Base class for every failure raised by isolab."""


class StratumError(IsolabError):
    """Raised when eigenvalues of Λ get closer than the separation tolerance."""


class PoleError(IsolabError):
    """Raised when a coefficient is evaluated at one of its poles."""


class SpectrumError(IsolabError):
    """Raised when the dense eigen-solver fails or sees non-finite input."""


class UnsupportedStructureError(IsolabError):
    """Raised for resonance or Jordan structure outside the supported subset."""

    def __init__(self, message: str, pair: tuple[int, int] | None = None) -> None:
        super().__init__(message if pair is None else f"{message} (pair {pair[0]}, {pair[1]})")
        self.pair = pair


class ConditioningError(IsolabError):
    """Raised when a numerical extraction is too ill-conditioned to trust."""


class IntegrationError(IsolabError):
    """Raised when the ODE solver fails, usually by step-size collapse."""


class GaugeError(IsolabError):
    """Raised when a gauge matrix is not a block-diagonal Jordanizer."""


class SpecError(IsolabError):
    """Raised for an invalid input document; carries the offending field path."""

    def __init__(self, message: str, field: str = "") -> None:
        super().__init__(f"{field}: {message}" if field else message)
        self.field = field


class DegenerateMetricError(SpecError):
    """Raised when the caustic metric model is degenerate at t₂ = 0."""
