"""
Response Processor - Turns result objects into stable JSON
Floats are rounded to 12 significant digits and keys keep insertion order,
so identical inputs give byte-identical output.
"""

import json
import math
from enum import Enum
from typing import Any

import numpy as np

SIGNIFICANT_DIGITS = 12


class ResponseProcessor:
    """
    Normalizes tool results for printing.
    """

    @staticmethod
    def round_float(value: float, digits: int = SIGNIFICANT_DIGITS) -> Any:
        """Rounds to significant digits; non-finite values become strings."""
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        rounded = float(f"{value:.{digits}g}")
        return 0.0 if rounded == 0.0 else rounded

    @staticmethod
    def normalize(payload: Any) -> Any:
        """
        Recursively converts numpy values, enums, tuples and dataclasses
        with to_dict() into plain JSON types with rounded floats.

        Args:
            payload: Any result structure

        Returns:
            Any: JSON-ready structure
        """
        if hasattr(payload, "to_dict") and not isinstance(payload, dict):
            payload = payload.to_dict()
        if isinstance(payload, Enum):
            return payload.value
        if isinstance(payload, dict):
            return {str(key): ResponseProcessor.normalize(value) for key, value in payload.items()}
        if isinstance(payload, (list, tuple)):
            return [ResponseProcessor.normalize(value) for value in payload]
        if isinstance(payload, np.ndarray):
            return [ResponseProcessor.normalize(value) for value in payload.tolist()]
        if isinstance(payload, np.generic):
            payload = payload.item()
        if isinstance(payload, bool) or payload is None or isinstance(payload, (int, str)):
            return payload
        if isinstance(payload, float):
            return ResponseProcessor.round_float(payload)
        return str(payload)

    @staticmethod
    def to_json(payload: Any) -> str:
        """Normalized payload as indented JSON."""
        return json.dumps(ResponseProcessor.normalize(payload), ensure_ascii=False, indent=2)
