import logging
from abc import ABC, abstractmethod
from datetime import datetime
from typing import Any


class LabLog(ABC):
    """Logging interface injected into every engine, check and command."""

    @abstractmethod
    def info(self, message: str) -> None:
        """Log an info message.

        Args:
            message: The message to log.
        """

    @abstractmethod
    def info_from(self, source: Any, message: str) -> None:
        """Log an info message prefixed with its source path.

        Args:
            source: The object the message comes from.
            message: The message to log.
        """

    @abstractmethod
    def warn(self, message: str) -> None:
        """Log a warning message.

        Args:
            message: The message to log.
        """

    @abstractmethod
    def warn_from(self, source: Any, message: str) -> None:
        """Log a warning message prefixed with its source path.

        Args:
            source: The object the message comes from.
            message: The message to log.
        """

    @abstractmethod
    def error(self, message: str) -> None:
        """Log an error message.

        Args:
            message: The message to log.
        """

    @abstractmethod
    def error_from(self, source: Any, message: str) -> None:
        """Log an error message prefixed with its source path.

        Args:
            source: The object the message comes from.
            message: The message to log.
        """


class LabLogImpl(LabLog):
    """Console logger with timestamped, coloured level tags.

    Lines go through the ``isolab`` logger of the standard library.
    """

    INFO_COLOR = "\033[32m"
    WARN_COLOR = "\033[33m"
    ERROR_COLOR = "\033[31m"
    RESET_COLOR = "\033[0m"

    _LEVELS = {"INFO": logging.INFO, "WARN": logging.WARNING, "ERROR": logging.ERROR}

    def __init__(self, quiet: bool = False) -> None:
        """Initialize the logger.

        Args:
            quiet: If True, INFO lines are dropped.
        """
        self.quiet = quiet
        self.logger = logging.getLogger("isolab")
        self.logger.setLevel(logging.DEBUG)
        self.logger.handlers.clear()
        handler = logging.StreamHandler()
        handler.setLevel(logging.DEBUG)
        handler.setFormatter(logging.Formatter("%(message)s"))
        self.logger.addHandler(handler)
        self.logger.propagate = False

    def _log(self, level: str, message: str, color: str) -> None:
        """Emit one formatted line unless quiet mode drops it.

        Args:
            level: The level tag (INFO, WARN, ERROR).
            message: The message to log.
            color: The ANSI colour code of the level tag.
        """
        if self.quiet and level == "INFO":
            return
        timestamp = datetime.now().strftime("%Y-%m-%d %H:%M")
        self.logger.log(self._LEVELS[level], f"{timestamp} {color}{level}{self.RESET_COLOR} {message}")

    def _format_with_source(self, source: Any, message: str) -> str:
        """Prefix a message with its source.

        Args:
            source: The object the message comes from; its repr is the check path.
            message: The message to log.

        Returns:
            str: The message as ``[source]: message``.
        """
        return f"[{source}]: {message}"

    def info(self, message: str) -> None:
        """Log an info message.

        Args:
            message: The message to log.
        """
        self._log("INFO", message, self.INFO_COLOR)

    def info_from(self, source: Any, message: str) -> None:
        """Log an info message prefixed with its source path.

        Args:
            source: The object the message comes from.
            message: The message to log.
        """
        self.info(self._format_with_source(source, message))

    def warn(self, message: str) -> None:
        """Log a warning message.

        Args:
            message: The message to log.
        """
        self._log("WARN", message, self.WARN_COLOR)

    def warn_from(self, source: Any, message: str) -> None:
        """Log a warning message prefixed with its source path.

        Args:
            source: The object the message comes from.
            message: The message to log.
        """
        self.warn(self._format_with_source(source, message))

    def error(self, message: str) -> None:
        """Log an error message.

        Args:
            message: The message to log.
        """
        self._log("ERROR", message, self.ERROR_COLOR)

    def error_from(self, source: Any, message: str) -> None:
        """Log an error message prefixed with its source path.

        Args:
            source: The object the message comes from.
            message: The message to log.
        """
        self.error(self._format_with_source(source, message))
