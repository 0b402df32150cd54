"""Matrix file reading and writing (CSV and Matrix Market).

Values are written with 17 significant digits so that a write/read cycle
reproduces every double exactly.
"""

from __future__ import annotations

import csv
import io
from enum import Enum
from pathlib import Path

import numpy as np
import numpy.typing as npt
import scipy.io
import scipy.sparse

from .errors import MatrixFormatError, ShapeMismatchError
from .matrix_core import DenseMatrix, as_matrix

MM_BANNER = "%%MatrixMarket"
_MM_FIELDS = {"real", "double", "integer"}


class MatrixFileFormat(str, Enum):
    MATRIX_MARKET_ARRAY = "mm-array"
    MATRIX_MARKET_COORDINATE = "mm-coordinate"
    CSV = "csv"


def _parse_banner(path: str, line: str) -> MatrixFileFormat:
    tokens = line.strip().lower().split()
    if len(tokens) != 5 or tokens[0] != MM_BANNER.lower() or tokens[1] != "matrix":
        raise MatrixFormatError(path, f"malformed Matrix Market header {line.strip()!r}", line=1)
    layout, value_field, symmetry = tokens[2:]
    if value_field not in _MM_FIELDS:
        raise MatrixFormatError(path, f"unsupported field {value_field!r}, need real", line=1)
    if symmetry != "general":
        raise MatrixFormatError(path, f"unsupported symmetry {symmetry!r}, need general", line=1)
    if layout == "array":
        return MatrixFileFormat.MATRIX_MARKET_ARRAY
    if layout == "coordinate":
        return MatrixFileFormat.MATRIX_MARKET_COORDINATE
    raise MatrixFormatError(path, f"unknown layout {layout!r}", line=1)


def _decode(path: str, raw: bytes) -> str:
    try:
        return raw.decode("utf-8")
    except UnicodeDecodeError as exc:
        lineno = raw.count(b"\n", 0, exc.start) + 1
        raise MatrixFormatError(path, "not valid UTF-8 text", line=lineno) from exc


def _read_text(path: str) -> str:
    return _decode(path, Path(path).read_bytes())


def detect_format(path: str | Path) -> MatrixFileFormat:
    """Matrix Market when the file starts with the ``%%MatrixMarket`` banner, else CSV."""
    with open(path, "rb") as fh:
        first = _decode(str(path), fh.readline())
    if first.startswith(MM_BANNER):
        return _parse_banner(str(path), first)
    return MatrixFileFormat.CSV


def _check_size_line(path: str) -> None:
    # scipy reports body errors without positions; validate the size line here
    with io.StringIO(_read_text(path)) as fh:
        for lineno, line in enumerate(fh, start=1):
            if lineno == 1 or line.startswith("%") or not line.strip():
                continue
            tokens = line.split()
            if len(tokens) not in (2, 3) or not all(t.isdigit() for t in tokens):
                raise MatrixFormatError(path, f"malformed size line {line.strip()!r}", line=lineno)
            if int(tokens[0]) < 1 or int(tokens[1]) < 1:
                raise MatrixFormatError(path, "matrix dimensions must be positive", line=lineno)
            return
    raise MatrixFormatError(path, "missing size line")


def _read_matrix_market(path: str) -> DenseMatrix:
    _check_size_line(path)
    try:
        data = scipy.io.mmread(path)
    except (ValueError, IndexError, OSError) as exc:
        raise MatrixFormatError(path, f"malformed Matrix Market body: {exc}") from exc
    if scipy.sparse.issparse(data):
        data = data.toarray()
    return np.asarray(data, dtype=np.float64)


def _read_csv(path: str) -> DenseMatrix:
    rows: list[list[float]] = []
    with io.StringIO(_read_text(path), newline="") as fh:
        for lineno, cells in enumerate(csv.reader(fh), start=1):
            if not cells or all(not cell.strip() for cell in cells):
                continue
            try:
                row = [float(cell) for cell in cells]
            except ValueError:
                raise MatrixFormatError(path, f"non-numeric cell in {cells!r}", line=lineno) from None
            if not all(np.isfinite(row)):
                raise MatrixFormatError(path, "non-finite value", line=lineno)
            if rows and len(row) != len(rows[0]):
                raise MatrixFormatError(
                    path, f"expected {len(rows[0])} columns, got {len(row)}", line=lineno
                )
            rows.append(row)
    if not rows:
        raise MatrixFormatError(path, "no data rows")
    return np.array(rows, dtype=np.float64)


def read_matrix(
    path: str | Path, fmt: MatrixFileFormat | str | None = None
) -> DenseMatrix:
    """Load a finite dense matrix; the format is auto-detected unless *fmt* is given."""
    path = str(path)
    detected = detect_format(path)
    if fmt is not None and MatrixFileFormat(fmt) is not detected:
        expected = MatrixFileFormat(fmt).value
        raise MatrixFormatError(path, f"file is {detected.value}, expected {expected}")
    if detected is MatrixFileFormat.CSV:
        values = _read_csv(path)
    else:
        values = _read_matrix_market(path)
    if not np.all(np.isfinite(values)):
        raise MatrixFormatError(path, "matrix contains NaN or infinite values")
    return as_matrix(values, name=path)


def write_matrix(
    m: npt.ArrayLike,
    path: str | Path,
    fmt: MatrixFileFormat | str = MatrixFileFormat.CSV,
) -> None:
    values = as_matrix(m)
    fmt = MatrixFileFormat(fmt)
    if fmt is MatrixFileFormat.CSV:
        np.savetxt(path, values, fmt="%.17g", delimiter=",")
        return
    if fmt is MatrixFileFormat.MATRIX_MARKET_ARRAY:
        target = values
    else:
        target = scipy.sparse.coo_matrix(values)
    # an open handle keeps scipy from appending a .mtx suffix to the path
    with open(path, "wb") as fh:
        scipy.io.mmwrite(fh, target, field="real", precision=17, symmetry="general")


def read_vector(path: str | Path) -> npt.NDArray[np.float64]:
    """Read a single-row or single-column matrix file as a 1-D vector."""
    values = read_matrix(path)
    if 1 not in values.shape:
        raise ShapeMismatchError(f"{path}: expected a vector", values.shape)
    return values.reshape(-1)


def write_vector(v: npt.ArrayLike, path: str | Path) -> None:
    """Write a vector as a one-column CSV."""
    write_matrix(np.reshape(np.asarray(v, dtype=np.float64), (-1, 1)), path)
