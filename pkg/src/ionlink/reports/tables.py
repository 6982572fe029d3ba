from typing import Any, Iterable, IO
from dataclasses import dataclass
from math import isfinite
from pathlib import Path
import re

from .styles import ScreenStyle, TableStyle


class InvalidTableError(ValueError): ...


class InvalidColDefError(ValueError): ...


###############################################################################
# ColDef
###############################################################################

_COL_SPEC_PATTERN = re.compile(
    r"^(?P<align>[<>^])?"
    r"(?P<width>\d+)?"
    r"(?P<precision>\.\d+)?"
    r"(?P<type>[eEfFgG%d])?$"
)


@dataclass
class ColDef:
    """
    How one column is sized, aligned and formatted.

    Attributes:
        width:
            Fixed width; 0 sizes the column to its content.
        align:
            One of "<", ">" or "^".
        format_spec:
            Python format spec applied to non-text values, e.g. ".6g".
        none_text:
            Text shown for None.
    """

    width: int = 0
    align: str = "<"
    format_spec: str = ""
    none_text: str = ""

    def format(self, value: Any) -> str:
        if value is None:
            return self.none_text
        if isinstance(value, float) and not isfinite(value):
            return str(value)
        if self.format_spec and not isinstance(value, str):
            try:
                return format(value, self.format_spec)
            except (TypeError, ValueError):
                return str(value)
        return str(value)

    def format_text(self, text: str) -> str:
        if self.align == "^":
            return text.center(self.width)
        if self.align == ">":
            return text.rjust(self.width)
        return text.ljust(self.width)

    @staticmethod
    def parse(text: str) -> "ColDef":
        """
        Build a ColDef from a compact spec such as ">12.6g" or "<".

        Example:
            >>> ColDef.parse(">10.3e")
            ColDef(width=10, align='>', format_spec='.3e', none_text='')
        """
        match = _COL_SPEC_PATTERN.match(text)
        if not match:
            raise InvalidColDefError(f"Invalid format specifier for column: {text}")
        spec = match.groupdict()
        return ColDef(
            width=int(spec["width"]) if spec["width"] else 0,
            align=spec["align"] or "<",
            format_spec=(spec["precision"] or "") + (spec["type"] or ""),
        )


def _col_defs_for(
    rows: list[list[Any]],
    col_defs: Iterable[str | ColDef] | None,
    columns: int,
    none_text: str,
) -> list[ColDef]:
    defs: list[ColDef] = []
    for spec in list(col_defs or [])[:columns]:
        col = ColDef.parse(spec) if isinstance(spec, str) else ColDef(**vars(spec))
        defs.append(col)
    while len(defs) < columns:
        defs.append(ColDef())
    for col in defs:
        if not col.none_text:
            col.none_text = none_text
    return defs


###############################################################################
# get_table
###############################################################################


def get_table(
    value_rows: Iterable[Iterable[Any]],
    header_row: Iterable[Any] | None = None,
    style: TableStyle = ScreenStyle(),
    col_defs: Iterable[str | ColDef] | None = None,
    none_text: str = "",
) -> str:
    """
    Render rows as a text table.

    Parameters:
        value_rows:
            A collection of rows, where each row is a collection of values.
        header_row:
            (optional) Column names.
        style:
            (optional) A TableStyle. Defaults to ScreenStyle.
        col_defs:
            (optional) ColDef objects or compact specs (">12.6g") per column.
        none_text:
            (optional) Text for None values without a column-level override.

    Behavior:
        - Rows shorter than the widest row are padded with empty cells.
        - Unsized columns take the width of their widest cell.
        - A style with `render_table` renders the table itself.

    Returns:
        The table as a single string without a trailing newline.
    """
    if not getattr(style, "string_output", True):
        raise InvalidTableError(f"{type(style).__name__} does not support string output")

    rows = [list(row) for row in value_rows]
    header = [str(h) for h in header_row] if header_row else None

    renderer = getattr(style, "render_table", None)
    if callable(renderer):
        return str(renderer(rows, header, col_defs))

    if not rows and not header:
        rows = [["No data to display"]]
    columns = max([len(r) for r in rows] + [len(header) if header else 0])
    for row in rows:
        row.extend([None] * (columns - len(row)))
    defs = _col_defs_for(rows, col_defs, columns, none_text)

    cells = [[defs[i].format(v) for i, v in enumerate(row)] for row in rows]
    for i, col in enumerate(defs):
        content = [len(r[i]) for r in cells] + ([len(header[i])] if header and i < len(header) else [])
        col.width = max(col.width, style.min_width, *content)

    pad = " " * style.cell_padding

    def line(texts: list[str]) -> str:
        inner = style.delimiter.join(f"{pad}{t}{pad}" for t in texts)
        return f"{style.left}{inner}{style.right}".rstrip()

    output = []
    if header:
        header = header + [""] * (columns - len(header))
        output.append(line([h.center(col.width) for h, col in zip(header, defs)]))
        rules = []
        for col in defs:
            width = col.width + 2 * style.cell_padding
            rule = style.header_rule_line * width
            if style.align_char and col.align in (">", "^"):
                rule = rule[:-1] + style.align_char
            if style.align_char and col.align == "^":
                rule = style.align_char + rule[1:]
            rules.append(rule)
        output.append(
            style.header_rule_left + style.header_rule_delimiter.join(rules) + style.header_rule_right
        )
    for row in cells:
        output.append(line([col.format_text(text) for text, col in zip(row, defs)]))

    return "\n".join(output)


###############################################################################
# export_table
###############################################################################


def export_table(
    value_rows: Iterable[Iterable[Any]],
    header_row: Iterable[Any] | None = None,
    style: TableStyle = ScreenStyle(),
    col_defs: Iterable[str | ColDef] | None = None,
    none_text: str = "",
    file: str | Path | IO[str] | None = None,
    encoding: str = "utf-8",
) -> str | Path | None:
    """
    Render the table and optionally write it to a file.

    Behavior:
        - A style with `write_table` writes the file itself.
        - Otherwise the table is rendered with `get_table` and written as text
          (a trailing newline is added).

    Returns:
        The path for path targets, None for file objects, and the rendered
        text when no file is given.
    """
    rows = [list(row) for row in value_rows]
    header = [str(h) for h in header_row] if header_row else None

    writer = getattr(style, "write_table", None)
    if callable(writer) and file is not None:
        writer(rows, header, col_defs, file)
        return Path(file) if isinstance(file, (str, Path)) else None

    content = get_table(rows, header, style=style, col_defs=col_defs, none_text=none_text)
    if not content.endswith("\n"):
        content += "\n"
    if file is None:
        return content
    if isinstance(file, (str, Path)):
        with open(file, "w", encoding=encoding) as f:
            f.write(content)
        return Path(file)
    file.write(content)
    return None
