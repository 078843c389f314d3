"""Shared result formats: JSON matrices, canonical hashing, CSV tables.

Complex matrices serialize as row-major lists of [re, im] pairs next to
their lattice metadata. JSON numeric payloads round to 12 significant
digits and CSV cells to 9, both beyond every comparison tolerance used
in the result reports, so that re-running a scenario reproduces files
byte for byte.
"""
from __future__ import annotations

import hashlib
import json
import math
from typing import Any, Iterable

import numpy as np

from .lattice import ModeLattice

JSON_SIGNIFICANT_DIGITS = 12
CSV_SIGNIFICANT_DIGITS = 9


def round_floats(obj: Any, digits: int = JSON_SIGNIFICANT_DIGITS) -> Any:
    """Recursively round floats to a fixed significant-digit budget."""
    if isinstance(obj, dict):
        return {k: round_floats(v, digits) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [round_floats(v, digits) for v in obj]
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        if math.isnan(x) or math.isinf(x):
            return x
        return float(f"{x:.{digits}g}")
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return round_floats(obj.tolist(), digits)
    return obj


def dump_json(obj: Any, digits: int = JSON_SIGNIFICANT_DIGITS) -> str:
    """Deterministic JSON text: rounded floats, sorted keys, newline at EOF."""
    def _default(o):
        if isinstance(o, np.bool_):
            return bool(o)
        raise TypeError(f"not JSON serializable: {type(o)!r}")

    return json.dumps(round_floats(obj, digits), sort_keys=True, indent=2,
                      allow_nan=True, default=_default) + "\n"


def config_hash(config: dict) -> str:
    """SHA-256 of the bit-exact canonical serialization of a config."""
    canonical = json.dumps(config, sort_keys=True, separators=(",", ":"), allow_nan=True)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def matrix_to_json(matrix: np.ndarray, lattice: ModeLattice | None = None,
                   **metadata: Any) -> dict:
    m = np.asarray(matrix, dtype=complex)
    doc: dict[str, Any] = {
        "rows": int(m.shape[0]),
        "cols": int(m.shape[1]),
        "entries": [[float(z.real), float(z.imag)] for z in m.ravel(order="C")],
    }
    if lattice is not None:
        doc["lattice"] = {
            "mode_count": lattice.mode_count,
            "computational_dim": lattice.computational_dim,
            "window_offset": lattice.window_offset,
            "spacing_rad_per_s": lattice.spacing,
        }
    doc.update(metadata)
    return doc


def matrix_from_json(doc: dict) -> tuple[np.ndarray, ModeLattice | None]:
    rows, cols = int(doc["rows"]), int(doc["cols"])
    flat = np.array([complex(re, im) for re, im in doc["entries"]])
    if flat.size != rows * cols:
        raise ValueError(f"matrix document claims {rows}x{cols} but has {flat.size} entries")
    lattice = None
    if "lattice" in doc:
        lat = doc["lattice"]
        lattice = ModeLattice(int(lat["mode_count"]), int(lat["computational_dim"]),
                              int(lat["window_offset"]), float(lat["spacing_rad_per_s"]))
    return flat.reshape(rows, cols), lattice


def format_csv_cell(value: Any) -> str:
    if isinstance(value, (float, np.floating)):
        x = float(value)
        if math.isnan(x) or math.isinf(x):
            return str(x)
        return f"{x:.{CSV_SIGNIFICANT_DIGITS}g}"
    return str(value)


def write_csv(path, header: Iterable[str], rows: Iterable[Iterable[Any]]) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(format_csv_cell(v) for v in row))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
