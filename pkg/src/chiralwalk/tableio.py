"""Bit-stable CSV output with an embedded metadata header.

Files start with '# key: value' comment lines, then a header row, then data.
Floats are serialized with 17 significant digits so they round-trip exactly,
line endings are always LF, and the column order is fixed by the schema, so
identical inputs produce byte-identical files.
"""

from __future__ import annotations

import os
from pathlib import Path

__all__ = ["write_table", "read_table"]


def _format_value(value, kind: str) -> str:
    if kind == "int":
        return str(int(value))
    if kind == "float":
        return f"{float(value):.17g}"
    if kind == "str":
        text = str(value)
        if any(ch in text for ch in ",\n\r#"):
            raise ValueError(f"unsupported characters in string field: {text!r}")
        return text
    raise ValueError(f"unknown schema kind {kind!r}")


def write_table(rows, schema, path, metadata=None) -> Path:
    """Write rows to ``path`` per a (name, kind) schema, kind in int/float/str.

    ``rows`` is an iterable of sequences matching the schema; ``metadata`` is
    an ordered mapping emitted as '# key: value' lines.  An empty row set
    still produces the metadata block and header.  The file is written to a
    temporary name and moved into place.
    """
    path = Path(path)
    names = [name for name, _ in schema]
    kinds = [kind for _, kind in schema]
    lines = []
    for key, value in (metadata or {}).items():
        lines.append(f"# {key}: {value}")
    lines.append(",".join(names))
    for row in rows:
        if len(row) != len(schema):
            raise ValueError(f"row {row!r} does not match schema {names}")
        lines.append(",".join(_format_value(v, k) for v, k in zip(row, kinds)))
    payload = "\n".join(lines) + "\n"
    tmp = path.with_name(path.name + ".tmp")
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(tmp, "w", encoding="ascii", newline="\n") as handle:
        handle.write(payload)
    os.replace(tmp, path)
    return path


def read_table(path) -> tuple[dict, list[str], list[list[str]]]:
    """Read a table written by write_table.

    Returns (metadata, column names, rows-as-strings); callers coerce types.
    """
    metadata: dict[str, str] = {}
    header: list[str] | None = None
    rows: list[list[str]] = []
    with open(path, "r", encoding="ascii") as handle:
        for raw in handle:
            line = raw.rstrip("\n")
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if ":" in body:
                    key, value = body.split(":", 1)
                    metadata[key.strip()] = value.strip()
                continue
            if header is None:
                header = line.split(",")
            else:
                rows.append(line.split(","))
    if header is None:
        raise ValueError(f"{path} contains no header row")
    return metadata, header, rows
