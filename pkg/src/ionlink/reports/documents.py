"""
Deterministic JSON documents and the run manifest.

JSON is written with sorted keys and two-space indentation. Floats keep
their shortest exact repr; non-finite floats become null since JSON has no
spelling for them. The same document therefore always serializes to the
same bytes.
"""

from typing import Any, Mapping
from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import Enum
from importlib.resources import files
from math import isfinite
from pathlib import Path
import hashlib
import json
import os

import numpy as np

MANIFEST_NAME = "manifest.json"
SCHEMA_PACKAGE = "ionlink.schemas"


###############################################################################
# JSON
###############################################################################


def to_jsonable(value: Any) -> Any:
    """Plain JSON types for `value`, with numpy scalars unwrapped."""
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, Mapping):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple, np.ndarray)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.generic):
        value = value.item()
    if isinstance(value, float) and not isfinite(value):
        return None
    return value


def dumps(document: Any) -> str:
    return json.dumps(to_jsonable(document), indent=2, sort_keys=True, allow_nan=False) + "\n"


def dump_json(document: Any, path: str | Path) -> Path:
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(dumps(document))
    return path


def file_digest(path: str | Path) -> str:
    """SHA-256 hex digest of a file's bytes."""
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


###############################################################################
# ExperimentManifest
###############################################################################


def _timestamp() -> str:
    # SOURCE_DATE_EPOCH pins the timestamp for reproducible manifests
    epoch = os.getenv("SOURCE_DATE_EPOCH")
    moment = (
        datetime.fromtimestamp(int(epoch), tz=timezone.utc)
        if epoch
        else datetime.now(timezone.utc)
    )
    return moment.replace(microsecond=0).isoformat()


@dataclass
class ExperimentManifest:
    """
    Record of one CLI run: what was asked for and what was produced.

    Attributes:
        subcommand:
            CLI subcommand name.
        config:
            The fully resolved input configuration.
        version:
            Package version that produced the outputs.
        rng_seed:
            Seed of the run, or None for deterministic subcommands.
        timestamp:
            UTC time of the run in ISO 8601.
        outputs:
            File name to SHA-256 digest for every primary output.
    """

    subcommand: str
    config: dict[str, Any]
    version: str
    rng_seed: int | None = None
    timestamp: str = field(default_factory=_timestamp)
    outputs: dict[str, str] = field(default_factory=dict)

    def add_output(self, path: str | Path) -> None:
        path = Path(path)
        self.outputs[path.name] = file_digest(path)

    def to_dict(self) -> dict[str, Any]:
        return {
            "subcommand": self.subcommand,
            "config": to_jsonable(self.config),
            "version": self.version,
            "rng_seed": self.rng_seed,
            "timestamp": self.timestamp,
            "outputs": dict(self.outputs),
        }

    def write(self, directory: str | Path) -> Path:
        return dump_json(self.to_dict(), Path(directory) / MANIFEST_NAME)


###############################################################################
# Schemas
###############################################################################


def load_schema(name: str) -> dict[str, Any]:
    """The shipped JSON schema `<name>.schema.json`."""
    resource = files(SCHEMA_PACKAGE).joinpath(f"{name}.schema.json")
    if not resource.is_file():
        raise FileNotFoundError(f"No schema named {name!r}")
    return json.loads(resource.read_text(encoding="utf-8"))
