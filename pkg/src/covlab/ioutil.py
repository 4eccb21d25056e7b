"""Config parsing helpers and deterministic JSON/CSV writers.

Reports are serialized with floats at 17 significant digits so that two runs
with the same seed produce byte-identical files. Stdlib ``json`` cannot pin
the float text, so a small writer lives here; parsing still uses ``json``.
"""

from __future__ import annotations

import json
from typing import Any


class ConfigError(ValueError):
    """A bad or missing field in user-supplied configuration.

    The message always names the offending field so the CLI can surface it
    verbatim on exit code 2.
    """

    def __init__(self, field: str, message: str):
        super().__init__(f"config field '{field}': {message}")
        self.field = field


def load_json(path: str) -> Any:
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def require_keys(obj: dict, allowed: set[str], context: str) -> None:
    """Reject unknown keys so typos fail loudly instead of being ignored."""
    for key in obj:
        if key not in allowed:
            raise ConfigError(f"{context}.{key}", "unexpected field")


def get_number(obj: dict, key: str, context: str, default=None):
    if key not in obj:
        if default is None:
            raise ConfigError(f"{context}.{key}", "missing required field")
        return default
    val = obj[key]
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise ConfigError(f"{context}.{key}", f"expected a number, got {val!r}")
    return val


def fmt_float(x: float) -> str:
    """Render a finite float with 17 significant digits (round-trip exact)."""
    x = float(x)
    if x != x or x in (float("inf"), float("-inf")):
        raise ValueError(f"non-finite value in output: {x}")
    text = format(x, ".17g")
    return text


def _write(obj: Any, out: list[str], indent: int) -> None:
    pad = "  " * indent
    if obj is None:
        out.append("null")
    elif obj is True:
        out.append("true")
    elif obj is False:
        out.append("false")
    elif isinstance(obj, int):
        out.append(str(obj))
    elif isinstance(obj, float):
        out.append(fmt_float(obj))
    elif isinstance(obj, str):
        out.append(json.dumps(obj))
    elif isinstance(obj, (list, tuple)):
        if not obj:
            out.append("[]")
            return
        out.append("[\n")
        for i, item in enumerate(obj):
            out.append(pad + "  ")
            _write(item, out, indent + 1)
            out.append(",\n" if i + 1 < len(obj) else "\n")
        out.append(pad + "]")
    elif isinstance(obj, dict):
        if not obj:
            out.append("{}")
            return
        out.append("{\n")
        items = list(obj.items())
        for i, (key, val) in enumerate(items):
            out.append(pad + "  " + json.dumps(str(key)) + ": ")
            _write(val, out, indent + 1)
            out.append(",\n" if i + 1 < len(items) else "\n")
        out.append(pad + "}")
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj: Any) -> str:
    """Deterministic JSON text: insertion-ordered keys, 17-digit floats."""
    out: list[str] = []
    _write(obj, out, 0)
    out.append("\n")
    return "".join(out)


def write_json(path: str, obj: Any) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps(obj))


def kernel_csv_text(xs, ys, values) -> str:
    """CSV for a kernel grid: header x,y,k then row-major rows."""
    lines = ["x,y,k"]
    for i in range(len(xs)):
        for j in range(len(ys)):
            lines.append(
                f"{fmt_float(xs[i])},{fmt_float(ys[j])},{fmt_float(values[i][j])}"
            )
    return "\n".join(lines) + "\n"
