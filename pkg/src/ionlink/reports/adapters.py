"""Adapters turning result objects into (rows, headers) for the table functions."""

from typing import Any, Iterable
from dataclasses import fields, is_dataclass
from enum import Enum


###############################################################################
# from_dataclasses
###############################################################################


def _cell(value: Any) -> Any:
    return value.value if isinstance(value, Enum) else value


def from_dataclasses(
    data: Iterable[Any], columns: list[str] | None = None
) -> tuple[list[list[Any]], list[str]]:
    """
    Convert dataclass instances to table format.

    Args:
        data: Iterable of dataclass instances of one type.
        columns: Optional field names to select and order. Unknown names
            are dropped.

    Returns:
        (rows, headers) tuple. Enum values are replaced by their `.value`.

    Example:
        >>> from ionlink.optics_circuit import HomPoint
        >>> from_dataclasses([HomPoint(1.0, 0.0)])
        ([[1.0, 0.0]], ['overlap', 'coincidence_probability'])
    """
    data_list = list(data)
    if not data_list:
        return [], list(columns or [])

    first = data_list[0]
    if not is_dataclass(first):
        raise TypeError(f"Expected dataclass instances, got {type(first).__name__}")

    all_fields = [f.name for f in fields(first) if not f.name.startswith("_")]
    if columns is not None:
        headers = [col for col in columns if col in all_fields]
    else:
        headers = all_fields

    rows = [[_cell(getattr(item, h, None)) for h in headers] for item in data_list]
    return rows, headers


def from_pairs(pairs: Iterable[tuple[str, Any]], headers: tuple[str, str] = ("name", "value")):
    """(rows, headers) for a two-column name/value listing."""
    return [[name, _cell(value)] for name, value in pairs], list(headers)
