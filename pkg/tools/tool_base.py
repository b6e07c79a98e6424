"""
Auction Tools - Base Classes and Utilities
Base class, report builder and validators shared by the CLI commands.
"""

import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Any, Dict, Optional

from core.exceptions import AuctionError, InputValidationError
from utils.response_processor import ResponseProcessor

# Logger configuration
logger = logging.getLogger(__name__)

EXIT_PASS = 0
EXIT_FAILURE = 1
EXIT_INPUT_ERROR = 2


@dataclass(frozen=True)
class ToolResult:
    """Rendered JSON body and the process exit code."""

    body: str
    exit_code: int


class AuctionToolBase(ABC):
    """
    Abstract base class for all auction commands.
    Implements the flow validation → execution → formatting, with errors
    mapped to exit codes.
    """

    def __init__(self, name: str, description: str):
        self.name = name
        self.description = description
        self.logger = logging.getLogger(f"auction_tool.{name}")

    @abstractmethod
    def execute(self, **kwargs) -> Dict[str, Any]:
        """
        Runs the command.

        Returns:
            Dict[str, Any]: Result payload; a boolean "passed" entry decides
            the exit code
        """

    def validate_input(self, **kwargs) -> None:
        """Raises InputValidationError on bad arguments. Overridden per tool."""

    def format_response(self, result: Dict[str, Any]) -> str:
        return ResponseProcessor.to_json(result)

    def handle_error(self, error: Exception, context: Optional[Dict] = None) -> ToolResult:
        """
        Error body plus the exit code carried by the exception class.

        Args:
            error: Caught exception
            context: Additional error context

        Returns:
            ToolResult: JSON error body and exit code
        """
        exit_code = getattr(error, "exit_code", EXIT_FAILURE)
        self.logger.error(f"Error in command {self.name}: {error}")
        error_response = {
            "error": type(error).__name__,
            "details": str(error),
            "command": self.name,
        }
        if context:
            error_response.update(context)
        return ToolResult(body=self.format_response(error_response), exit_code=exit_code)

    def __call__(self, **kwargs) -> ToolResult:
        try:
            self.validate_input(**kwargs)
            result = self.execute(**kwargs)
            exit_code = EXIT_PASS if result.get("passed", True) else EXIT_FAILURE
            return ToolResult(body=self.format_response(result), exit_code=exit_code)
        except AuctionError as e:
            return self.handle_error(e)
        except (ValueError, TypeError) as e:
            return self.handle_error(InputValidationError(str(e)))


class ReportBuilder:
    """
    Builder for command reports.
    """

    def __init__(self, report_type: str):
        self.response: Dict[str, Any] = {"report_type": report_type}

    def add_input_info(self, **kwargs) -> "ReportBuilder":
        """Records the inputs the report was produced from."""
        self.response.setdefault("input", {}).update(kwargs)
        return self

    def add_result(self, **kwargs) -> "ReportBuilder":
        for key, value in kwargs.items():
            self.response[key] = value
        return self

    def add_verdict(self, passed: bool) -> "ReportBuilder":
        self.response["passed"] = bool(passed)
        return self

    def add_summary(self, summary: str) -> "ReportBuilder":
        self.response["summary"] = summary
        return self

    def build(self) -> Dict[str, Any]:
        return self.response


class InputValidator:
    """
    Argument checks shared by the commands.
    """

    @staticmethod
    def positive_int(value: Any, field_name: str) -> int:
        if isinstance(value, bool) or not isinstance(value, int) or value < 1:
            raise InputValidationError(f"{field_name} must be a positive integer, got {value!r}")
        return value

    @staticmethod
    def non_negative_int(value: Any, field_name: str) -> int:
        if isinstance(value, bool) or not isinstance(value, int) or value < 0:
            raise InputValidationError(f"{field_name} must be a non-negative integer, got {value!r}")
        return value

    @staticmethod
    def choice(value: str, valid: list, field_name: str) -> str:
        if value not in valid:
            raise InputValidationError(f"{field_name} must be one of {valid}, got {value!r}")
        return value
