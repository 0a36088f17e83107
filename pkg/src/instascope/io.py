"""CSV and sidecar helpers shared by exports and experiments.

All CSVs are comma-separated, UTF-8, LF line endings, fixed header
order, written atomically (temp file + rename). Floats are formatted
with Python's shortest round-trip repr so identical inputs yield
byte-identical files.
"""

import json
import os
import tempfile


def fmt(value) -> str:
    """Stable cell formatting: '' for None, repr-roundtrip for floats."""
    if value is None:
        return ""
    if isinstance(value, float):
        if value != value:  # NaN encodes as an empty cell
            return ""
        return repr(value)
    return str(value)


def write_csv(path, header, rows):
    """Atomically write rows (iterables of cells) under a header."""
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(fmt(c) for c in row))
    _atomic_write(path, "\n".join(lines) + "\n")


def append_block(path, header, rows, title=None):
    """Append a blank-line-separated summary block to an existing CSV."""
    lines = [""]
    if title is not None:
        lines.append(title)
    lines.append(",".join(header))
    for row in rows:
        lines.append(",".join(fmt(c) for c in row))
    with open(path, "a", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def write_json(path, obj):
    _atomic_write(path, json.dumps(obj, indent=2, sort_keys=True) + "\n")


def read_json(path):
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def _atomic_write(path, text: str):
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
