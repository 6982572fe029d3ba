"""
JSON round-tripping for the frozen configuration dataclasses.

Enums are written by value; unknown keys are rejected so that typos in a
`--config` file surface as errors instead of silently using defaults.
"""

from typing import Any, Mapping, TypeVar
from dataclasses import fields, is_dataclass
from enum import Enum
import json
import types
import typing

T = TypeVar("T")


def to_dict(config: Any) -> dict[str, Any]:
    if not is_dataclass(config):
        raise TypeError(f"{type(config).__name__} is not a dataclass instance")
    return {f.name: _encode(getattr(config, f.name)) for f in fields(config)}


def _encode(value: Any) -> Any:
    if isinstance(value, Enum):
        return value.value
    if is_dataclass(value):
        return to_dict(value)
    if isinstance(value, (tuple, list)):
        return [_encode(v) for v in value]
    return value


def _enum_type(annotation: Any) -> type[Enum] | None:
    if isinstance(annotation, type) and issubclass(annotation, Enum):
        return annotation
    if isinstance(annotation, types.UnionType) or typing.get_origin(annotation) is typing.Union:
        for arg in typing.get_args(annotation):
            if isinstance(arg, type) and issubclass(arg, Enum):
                return arg
    return None


def from_dict(
    cls: type[T],
    data: Mapping[str, Any],
    error: type[ValueError] = ValueError,
) -> T:
    """
    Build `cls` from a mapping, converting enum fields from their values.

    Raises:
        error: on unknown keys, bad enum values or a rejected combination
            (the dataclass' own validation error is re-raised as `error`).
    """
    if not isinstance(data, Mapping):
        raise error(f"{cls.__name__} config must be a JSON object")
    hints = typing.get_type_hints(cls)
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise error(f"Unknown {cls.__name__} keys: {', '.join(unknown)}")

    kwargs = {}
    for name, value in data.items():
        enum_cls = _enum_type(hints.get(name))
        if enum_cls is not None and value is not None and not isinstance(value, enum_cls):
            try:
                value = enum_cls(value)
            except ValueError as e:
                raise error(f"Invalid value {value!r} for {cls.__name__}.{name}") from e
        kwargs[name] = value

    try:
        return cls(**kwargs)
    except TypeError as e:
        raise error(f"Invalid {cls.__name__} config: {e}") from e


def load_json(path: str, error: type[ValueError] = ValueError) -> dict[str, Any]:
    """Read a JSON object from `path`."""
    try:
        with open(path, encoding="utf-8") as f:
            data = json.load(f)
    except json.JSONDecodeError as e:
        raise error(f"Malformed JSON in {path}: {e.msg} (line {e.lineno})") from e
    if not isinstance(data, dict):
        raise error(f"{path} must contain a JSON object")
    return data
