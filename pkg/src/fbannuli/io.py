"""Deterministic file output: CSV, JSON and manifests with 17 significant digits."""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from . import __version__

__all__ = ["fmt", "dumps17", "write_json", "write_csv", "manifest"]


def fmt(x) -> str:
    return format(float(x), ".17g")


def _enc(obj, indent: int, level: int) -> str:
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {_enc(v, indent, level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        seq = list(obj)
        if not seq:
            return "[]"
        return "[" + ", ".join(_enc(v, indent, level + 1) for v in seq) + "]"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x) or math.isinf(x):
            return json.dumps(str(x))
        t = fmt(x)
        return t if any(ch in t for ch in ".en") else t + ".0"
    if obj is None:
        return "null"
    return json.dumps(str(obj))


def dumps17(obj, indent: int = 2) -> str:
    """JSON text with every float written with 17 significant digits; non-finite floats become strings."""
    return _enc(obj, indent, 0) + "\n"


def write_json(path, obj) -> None:
    Path(path).write_text(dumps17(obj), encoding="utf-8", newline="\n")


def write_csv(path, header, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            out = []
            for x in row:
                if isinstance(x, (float, np.floating)):
                    out.append(fmt(x))
                elif x is None:
                    out.append("")
                else:
                    out.append(str(x))
            fh.write(",".join(out) + "\n")


def manifest(command: str, config: dict, extra: dict | None = None) -> dict:
    import scipy

    from .fbsearch import CERT_TOL, THRESHOLDS
    from .immersion import FRAME_TOL

    m = {
        "tool": "fbannuli",
        "version": __version__,
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "command": command,
        "config": config,
        "tolerances": {"frame": FRAME_TOL, "certificate_frame": CERT_TOL, "thresholds": dict(THRESHOLDS)},
    }
    if extra:
        m.update(extra)
    return m
