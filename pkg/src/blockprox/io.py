"""File formats: Matrix Market matrices, dense tensor text files, run traces.

All writers emit floats with 17 significant digits, enough for binary64
round trips.  All parsers report the offending line number in error messages.
"""

from __future__ import annotations

import math
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .solver import BRANCHES, IterationRecord

__all__ = [
    "TRACE_HEADER",
    "load_matrix_market",
    "save_matrix_market",
    "load_dense_tensor",
    "save_dense_tensor",
    "save_trace_csv",
    "load_trace_csv",
]

TRACE_HEADER = "iter,elapsed_s,objective,relerr,beta,branch,sweeps,residual,order"

_MM_BANNER = "%%MatrixMarket"


def _fmt(value: float) -> str:
    return f"{value:.17g}"


def _parse_float(token: str, path: Path, lineno: int, what: str) -> float:
    try:
        value = float(token)
    except ValueError:
        raise ValueError(f"{path}:{lineno}: invalid {what} {token!r}") from None
    if not math.isfinite(value):
        raise ValueError(f"{path}:{lineno}: non-finite {what} {token!r}")
    return value


def _parse_int(token: str, path: Path, lineno: int, what: str) -> int:
    try:
        return int(token)
    except ValueError:
        raise ValueError(f"{path}:{lineno}: invalid {what} {token!r}") from None


def load_matrix_market(path: str | Path) -> np.ndarray:
    """Read a Matrix Market file into a dense float64 matrix.

    Supports the ``coordinate real general`` and ``array real general``
    flavors.  Symmetric and other packed symmetries are rejected with an
    "unsupported symmetry" error; duplicate coordinate entries keep the last
    value seen.
    """
    path = Path(path)
    with open(path, "r", encoding="ascii") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise ValueError(f"{path}:1: empty file, expected a Matrix Market banner")
    banner = lines[0].split()
    if len(banner) != 5 or banner[0] != _MM_BANNER:
        raise ValueError(
            f"{path}:1: expected banner '{_MM_BANNER} matrix <format> real general'"
        )
    obj, layout, fieldtype, symmetry = (tok.lower() for tok in banner[1:])
    if obj != "matrix":
        raise ValueError(f"{path}:1: unsupported object {obj!r}, expected 'matrix'")
    if layout not in ("coordinate", "array"):
        raise ValueError(
            f"{path}:1: unsupported format {layout!r}, expected 'coordinate' or 'array'"
        )
    if fieldtype != "real":
        raise ValueError(f"{path}:1: unsupported field {fieldtype!r}, expected 'real'")
    if symmetry != "general":
        raise ValueError(f"{path}:1: unsupported symmetry {symmetry!r}, expected 'general'")

    # Comment lines start with '%' and may only precede the size line.
    lineno = 1
    size_line = None
    for idx in range(1, len(lines)):
        lineno = idx + 1
        stripped = lines[idx].strip()
        if not stripped or stripped.startswith("%"):
            continue
        size_line = stripped
        break
    if size_line is None:
        raise ValueError(f"{path}:{lineno}: missing size line")

    tokens = size_line.split()
    body = [(i + 1, lines[i].strip()) for i in range(lineno, len(lines))]
    body = [(no, text) for no, text in body if text]

    if layout == "coordinate":
        if len(tokens) != 3:
            raise ValueError(
                f"{path}:{lineno}: coordinate size line needs 'rows cols nnz', got {size_line!r}"
            )
        rows = _parse_int(tokens[0], path, lineno, "row count")
        cols = _parse_int(tokens[1], path, lineno, "column count")
        nnz = _parse_int(tokens[2], path, lineno, "entry count")
        if rows < 1 or cols < 1:
            raise ValueError(f"{path}:{lineno}: matrix dimensions must be positive")
        if nnz < 0 or nnz > rows * cols:
            raise ValueError(f"{path}:{lineno}: entry count {nnz} out of range")
        if len(body) != nnz:
            raise ValueError(
                f"{path}:{lineno}: expected {nnz} entries, found {len(body)}"
            )
        out = np.zeros((rows, cols))
        for no, text in body:
            parts = text.split()
            if len(parts) != 3:
                raise ValueError(f"{path}:{no}: expected 'row col value', got {text!r}")
            i = _parse_int(parts[0], path, no, "row index")
            j = _parse_int(parts[1], path, no, "column index")
            if not (1 <= i <= rows and 1 <= j <= cols):
                raise ValueError(
                    f"{path}:{no}: index ({i}, {j}) out of range for {rows} x {cols}"
                )
            out[i - 1, j - 1] = _parse_float(parts[2], path, no, "value")
        return out

    if len(tokens) != 2:
        raise ValueError(
            f"{path}:{lineno}: array size line needs 'rows cols', got {size_line!r}"
        )
    rows = _parse_int(tokens[0], path, lineno, "row count")
    cols = _parse_int(tokens[1], path, lineno, "column count")
    if rows < 1 or cols < 1:
        raise ValueError(f"{path}:{lineno}: matrix dimensions must be positive")
    if len(body) != rows * cols:
        raise ValueError(
            f"{path}:{lineno}: expected {rows * cols} values, found {len(body)}"
        )
    values = np.empty(rows * cols)
    for pos, (no, text) in enumerate(body):
        if len(text.split()) != 1:
            raise ValueError(f"{path}:{no}: expected one value per line, got {text!r}")
        values[pos] = _parse_float(text, path, no, "value")
    # Array layout stores values column by column.
    return values.reshape((rows, cols), order="F")


def save_matrix_market(path: str | Path, matrix: np.ndarray, layout: str = "array") -> None:
    """Write a dense matrix in Matrix Market format (``array`` or ``coordinate``)."""
    arr = np.asarray(matrix, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"matrix must be 2-D, got ndim={arr.ndim}")
    if not np.isfinite(arr).all():
        raise ValueError("matrix contains non-finite entries")
    rows, cols = arr.shape
    lines: list[str] = []
    if layout == "array":
        lines.append(f"{_MM_BANNER} matrix array real general")
        lines.append(f"{rows} {cols}")
        for j in range(cols):
            for i in range(rows):
                lines.append(_fmt(arr[i, j]))
    elif layout == "coordinate":
        lines.append(f"{_MM_BANNER} matrix coordinate real general")
        entries = [
            (i + 1, j + 1, arr[i, j])
            for j in range(cols)
            for i in range(rows)
            if arr[i, j] != 0.0
        ]
        lines.append(f"{rows} {cols} {len(entries)}")
        for i, j, v in entries:
            lines.append(f"{i} {j} {_fmt(v)}")
    else:
        raise ValueError(f"layout must be 'array' or 'coordinate', got {layout!r}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="ascii")


def load_dense_tensor(path: str | Path) -> np.ndarray:
    """Read a dense tensor text file.

    Line 1 holds the number of modes, line 2 the mode dimensions, then one
    value per line with the first index varying fastest.
    """
    path = Path(path)
    with open(path, "r", encoding="ascii") as fh:
        lines = [line.strip() for line in fh.read().splitlines()]
    rows = [(no + 1, text) for no, text in enumerate(lines) if text]
    if len(rows) < 2:
        raise ValueError(f"{path}:1: expected a mode count line and a dimensions line")
    no, text = rows[0]
    if len(text.split()) != 1:
        raise ValueError(f"{path}:{no}: expected a single mode count, got {text!r}")
    ndim = _parse_int(text, path, no, "mode count")
    if ndim < 1:
        raise ValueError(f"{path}:{no}: mode count must be positive, got {ndim}")
    no, text = rows[1]
    tokens = text.split()
    if len(tokens) != ndim:
        raise ValueError(
            f"{path}:{no}: expected {ndim} dimensions, found {len(tokens)}"
        )
    dims = tuple(_parse_int(tok, path, no, "dimension") for tok in tokens)
    if any(d < 1 for d in dims):
        raise ValueError(f"{path}:{no}: dimensions must be positive, got {dims}")
    count = int(np.prod(dims))
    body = rows[2:]
    if len(body) != count:
        raise ValueError(f"{path}:{no}: expected {count} values, found {len(body)}")
    values = np.empty(count)
    for pos, (vno, vtext) in enumerate(body):
        if len(vtext.split()) != 1:
            raise ValueError(f"{path}:{vno}: expected one value per line, got {vtext!r}")
        values[pos] = _parse_float(vtext, path, vno, "value")
    return values.reshape(dims, order="F")


def save_dense_tensor(path: str | Path, tensor: np.ndarray) -> None:
    """Write a dense tensor in the text format read by :func:`load_dense_tensor`."""
    arr = np.asarray(tensor, dtype=np.float64)
    if arr.ndim < 1:
        raise ValueError("tensor must have at least one mode")
    if not np.isfinite(arr).all():
        raise ValueError("tensor contains non-finite entries")
    lines = [str(arr.ndim), " ".join(str(d) for d in arr.shape)]
    lines.extend(_fmt(v) for v in arr.ravel(order="F"))
    Path(path).write_text("\n".join(lines) + "\n", encoding="ascii")


def save_trace_csv(path: str | Path, records: Iterable[IterationRecord]) -> None:
    """Write a run trace as CSV; the visit order column is dash-joined, 1-based."""
    lines = [TRACE_HEADER]
    for r in records:
        order = "-".join(str(j + 1) for j in r.order)
        lines.append(
            f"{r.iteration},{_fmt(r.elapsed_s)},{_fmt(r.objective)},{_fmt(r.relerr)},"
            f"{_fmt(r.beta)},{r.branch},{r.sweep_count},{_fmt(r.residual_norm)},{order}"
        )
    Path(path).write_text("\n".join(lines) + "\n", encoding="ascii")


def load_trace_csv(path: str | Path) -> list[IterationRecord]:
    """Read a trace CSV written by :func:`save_trace_csv`."""
    path = Path(path)
    with open(path, "r", encoding="ascii") as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0] != TRACE_HEADER:
        raise ValueError(f"{path}:1: expected header {TRACE_HEADER!r}")
    records = []
    for no, text in enumerate(lines[1:], start=2):
        if not text:
            continue
        parts = text.split(",")
        if len(parts) != 9:
            raise ValueError(f"{path}:{no}: expected 9 fields, found {len(parts)}")
        branch = parts[5]
        if branch not in BRANCHES:
            raise ValueError(f"{path}:{no}: unknown branch {branch!r}")
        try:
            order = tuple(int(tok) - 1 for tok in parts[8].split("-"))
        except ValueError:
            raise ValueError(f"{path}:{no}: invalid order {parts[8]!r}") from None
        records.append(
            IterationRecord(
                iteration=_parse_int(parts[0], path, no, "iteration"),
                elapsed_s=_parse_float(parts[1], path, no, "elapsed_s"),
                objective=_parse_float(parts[2], path, no, "objective"),
                relerr=_parse_float(parts[3], path, no, "relerr"),
                beta=_parse_float(parts[4], path, no, "beta"),
                branch=branch,
                sweep_count=_parse_int(parts[6], path, no, "sweep count"),
                residual_norm=_parse_float(parts[7], path, no, "residual"),
                order=order,
            )
        )
    return records
