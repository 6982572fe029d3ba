from .styles import TableStyle, ScreenStyle, MarkdownStyle, CsvStyle
from .tables import (
    ColDef,
    InvalidColDefError,
    InvalidTableError,
    export_table,
    get_table,
)
from .adapters import from_dataclasses, from_pairs
from .documents import (
    MANIFEST_NAME,
    ExperimentManifest,
    dump_json,
    dumps,
    file_digest,
    load_schema,
    to_jsonable,
)

__all__ = [
    "TableStyle",
    "ScreenStyle",
    "MarkdownStyle",
    "CsvStyle",
    "ColDef",
    "InvalidColDefError",
    "InvalidTableError",
    "export_table",
    "get_table",
    "from_dataclasses",
    "from_pairs",
    "MANIFEST_NAME",
    "ExperimentManifest",
    "dump_json",
    "dumps",
    "file_digest",
    "load_schema",
    "to_jsonable",
]
