from __future__ import annotations

import re
from abc import ABC, abstractmethod

from isolab.check_result import CheckResult


def _camel_to_snake(name: str) -> str:
    """Convert CamelCase to snake_case.

    Args:
        name: A CamelCase string (e.g., 'LinearConstraints', 'VringScan')

    Returns:
        The snake_case equivalent (e.g., 'linear_constraints', 'vring_scan')
    """
    s1 = re.sub("(.)([A-Z][a-z]+)", r"\1_\2", name)
    return re.sub("([a-z0-9])([A-Z])", r"\1_\2", s1).lower()


class Check(ABC):
    """A named numerical verification that can be run by the CheckEngine."""

    _parent: Check | None = None

    @property
    def parent(self) -> Check | None:
        """The enclosing check, or None for a top-level check."""
        return self._parent

    @parent.setter
    def parent(self, value: Check | None) -> None:
        self._parent = value

    def get_name(self) -> str:
        """Return the snake_case name derived from the class name."""
        return _camel_to_snake(self.__class__.__name__)

    def get_path(self) -> str:
        """Return the dot-separated path from the root check to this one.

        Returns:
            str: For example 'caustic_certificates.vring_scan'.
        """
        if self._parent is not None:
            return f"{self._parent.get_path()}.{self.get_name()}"
        return self.get_name()

    def __repr__(self) -> str:
        return self.get_path()

    @abstractmethod
    def run(self, verbose: bool = False) -> CheckResult:
        """Run the check.

        Args:
            verbose: If True, log every residual as it is computed.

        Returns:
            CheckResult: The graded outcome.
        """

    @abstractmethod
    def description(self) -> str:
        """Return a one-line description of what the check verifies."""
