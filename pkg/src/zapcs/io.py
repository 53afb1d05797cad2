"""Plain-text serialization: matrix/vector CSV and key=value files.

Matrix files start with a ``# rows=M cols=N`` header followed by one
comma-separated row per line. Vectors are stored as a single column. Floats
are written with 17 significant digits so values round-trip exactly.
"""

from __future__ import annotations

import re
from pathlib import Path

import numpy as np

from .errors import DimensionMismatch

FLOAT_FMT = "%.17g"
_HEADER = re.compile(r"#\s*rows\s*=\s*(\d+)\s+cols\s*=\s*(\d+)")


def fmt(value: float) -> str:
    return FLOAT_FMT % value


def write_matrix(path, A) -> None:
    A = np.atleast_2d(np.asarray(A, dtype=np.float64))
    lines = [f"# rows={A.shape[0]} cols={A.shape[1]}"]
    lines += [",".join(fmt(v) for v in row) for row in A]
    Path(path).write_text("\n".join(lines) + "\n")


def write_vector(path, v) -> None:
    v = np.asarray(v, dtype=np.float64).reshape(-1, 1)
    write_matrix(path, v)


def read_matrix(path) -> np.ndarray:
    text = Path(path).read_text().splitlines()
    if not text:
        raise DimensionMismatch(f"{path}: empty file")
    m = _HEADER.match(text[0].strip())
    if m is None:
        raise DimensionMismatch(f"{path}: missing '# rows=M cols=N' header")
    rows, cols = int(m.group(1)), int(m.group(2))
    body = [ln for ln in text[1:] if ln.strip()]
    if len(body) != rows:
        raise DimensionMismatch(f"{path}: header says {rows} rows, found {len(body)}")
    data = np.array([[float(tok) for tok in ln.split(",")] for ln in body], dtype=np.float64)
    if data.shape != (rows, cols):
        raise DimensionMismatch(f"{path}: expected {rows}x{cols}, parsed {data.shape}")
    return data


def read_vector(path) -> np.ndarray:
    data = read_matrix(path)
    if data.shape[1] != 1:
        raise DimensionMismatch(f"{path}: vector file must have one column")
    return data[:, 0].copy()


def write_keyvalue(path, items: dict) -> None:
    lines = []
    for key, value in items.items():
        if isinstance(value, float):
            value = fmt(value)
        lines.append(f"{key}={value}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_keyvalue(path) -> dict[str, str]:
    out = {}
    for raw in Path(path).read_text().splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"{path}: malformed line {raw!r}")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out
