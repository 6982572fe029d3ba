"""Table styles: terminal, GitHub markdown and CSV."""

from typing import Any, IO
from abc import ABC
from pathlib import Path
import csv
import io


class TableStyle(ABC):
    """Visual attributes that control how `get_table` renders a table.

    Subclasses override attributes in `__init__`. A style that defines
    `render_table(rows, header_row, col_defs)` takes over rendering entirely.
    """

    def __init__(self):
        self.terminal_style = True
        self.string_output = True
        self.align_char = None

        self.cell_padding = 1
        self.min_width = 1

        self.left = ""
        self.right = ""
        self.delimiter = " "

        self.header_rule_line = "─"
        self.header_rule_left = ""
        self.header_rule_right = ""
        self.header_rule_delimiter = " "


class ScreenStyle(TableStyle):
    """Whitespace-delimited columns with a rule under the header."""


class MarkdownStyle(TableStyle):
    """GitHub-flavored Markdown tables for documentation."""

    def __init__(self):
        super().__init__()
        self.terminal_style = False
        self.align_char = ":"
        self.min_width = 3

        self.left = "|"
        self.right = "|"
        self.delimiter = "|"

        self.header_rule_line = "-"
        self.header_rule_left = "|"
        self.header_rule_right = "|"
        self.header_rule_delimiter = "|"


def _csv_cell(value: Any) -> Any:
    # repr keeps floats exact, csv already uses it for float; None is empty
    return "" if value is None else value


class CsvStyle(TableStyle):
    """Comma-separated values with a mandatory header row.

    Values are written unformatted so that sweeps stay plottable; column
    definitions only affect the text styles.
    """

    def __init__(self):
        super().__init__()
        self.terminal_style = False

    def render_table(self, value_rows, header_row, col_defs=None) -> str:
        if not header_row:
            raise ValueError("CSV output requires a header row")
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(header_row)
        for row in value_rows:
            writer.writerow([_csv_cell(v) for v in row])
        return buffer.getvalue()

    def write_table(self, value_rows, header_row, col_defs, file: str | Path | IO[str]) -> None:
        content = self.render_table(value_rows, header_row, col_defs)
        if isinstance(file, (str, Path)):
            with open(file, "w", encoding="utf-8", newline="") as f:
                f.write(content)
        else:
            file.write(content)
