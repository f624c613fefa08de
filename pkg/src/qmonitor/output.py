"""Delimited output tables with a ``#`` metadata header.

Layout::

    # qmonitor <version>
    # command = run
    # created = <timestamp>
    # --- config ---
    # [drive]
    # ...
    # --- end config ---
    col_a,col_b,...
    <data rows>
    # <footer key> = <value>

Everything outside the column header and the data rows starts with ``#``;
numbers carry 17 significant digits so they round-trip exactly.
"""

from __future__ import annotations

import datetime as _dt
import io
import math

from . import __version__
from .config import dumps, format_value

CONFIG_BEGIN = "# --- config ---"
CONFIG_END = "# --- end config ---"


def fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, str):
        return value
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    value = float(value)
    if math.isnan(value):
        return "nan"
    return f"{value:.17g}"


class TableWriter:
    def __init__(self, command: str, resolved: dict, extra: dict | None = None, timestamp: bool = True):
        self.buf = io.StringIO()
        self.buf.write(f"# qmonitor {__version__}\n")
        self.buf.write(f"# command = {command}\n")
        for key, value in (extra or {}).items():
            self.buf.write(f"# {key} = {format_value(value)}\n")
        if timestamp:
            now = _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
            self.buf.write(f"# created = {now}\n")
        self.buf.write(CONFIG_BEGIN + "\n")
        for line in dumps(resolved).splitlines():
            self.buf.write(f"# {line}\n")
        self.buf.write(CONFIG_END + "\n")

    def block(self, columns, rows, name: str | None = None):
        if name is not None:
            self.buf.write(f"# block = {name}\n")
        self.buf.write(",".join(columns) + "\n")
        for row in rows:
            self.buf.write(",".join(fmt(v) for v in row) + "\n")

    def footer(self, values: dict):
        for key, value in values.items():
            self.buf.write(f"# {key} = {fmt(value)}\n")

    def getvalue(self) -> str:
        return self.buf.getvalue()

    def write(self, path):
        text = self.getvalue()
        if path in (None, "-"):
            import sys

            sys.stdout.write(text)
        else:
            with open(path, "w", newline="\n") as fh:
                fh.write(text)
        return text


def header_config(text: str) -> str:
    """The TOML config echoed in a table header."""
    lines = text.splitlines()
    try:
        start = lines.index(CONFIG_BEGIN)
        stop = lines.index(CONFIG_END)
    except ValueError:
        raise ValueError("no config block in table header") from None
    return "\n".join(line[2:] if line.startswith("# ") else line[1:] for line in lines[start + 1 : stop]) + "\n"


def data_lines(text: str) -> list[str]:
    """Column headers and data rows: every line not starting with ``#``."""
    return [line for line in text.splitlines() if line and not line.startswith("#")]


def footer_values(text: str) -> dict:
    """``# key = value`` lines after the config block."""
    lines = text.splitlines()
    stop = lines.index(CONFIG_END) if CONFIG_END in lines else -1
    out = {}
    for line in lines[stop + 1 :]:
        if line.startswith("# ") and " = " in line:
            key, _, value = line[2:].partition(" = ")
            out[key.strip()] = value.strip()
    return out
