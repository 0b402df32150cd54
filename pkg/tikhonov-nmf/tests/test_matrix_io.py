"""Tests for CSV / Matrix Market reading and writing."""

from __future__ import annotations

import numpy as np
import pytest
from numpy.testing import assert_array_equal

from tikhonov_nmf.errors import MatrixFormatError, NonFiniteError, ShapeMismatchError
from tikhonov_nmf.matrix_io import (
    MatrixFileFormat,
    detect_format,
    read_matrix,
    read_vector,
    write_matrix,
    write_vector,
)


# ======================================================================
# reading
# ======================================================================

class TestReadCsv:
    def test_simple(self, tmp_path):
        path = tmp_path / "a.csv"
        path.write_text("1,2\n3,4\n")
        assert_array_equal(read_matrix(path), [[1.0, 2.0], [3.0, 4.0]])
        assert detect_format(path) is MatrixFileFormat.CSV

    def test_blank_lines_skipped(self, tmp_path):
        path = tmp_path / "a.csv"
        path.write_text("1,2\n\n3,4\n")
        assert read_matrix(path).shape == (2, 2)

    def test_ragged_row_reports_line(self, tmp_path):
        path = tmp_path / "a.csv"
        path.write_text("1,2\n3,4,5\n")
        with pytest.raises(MatrixFormatError, match=r"a\.csv:2:") as excinfo:
            read_matrix(path)
        assert excinfo.value.line == 2

    def test_non_numeric_reports_line(self, tmp_path):
        path = tmp_path / "a.csv"
        path.write_text("1,2\n3,x\n")
        with pytest.raises(MatrixFormatError) as excinfo:
            read_matrix(path)
        assert excinfo.value.line == 2

    def test_non_finite(self, tmp_path):
        path = tmp_path / "a.csv"
        path.write_text("1,nan\n")
        with pytest.raises(MatrixFormatError, match="non-finite"):
            read_matrix(path)

    def test_empty_file(self, tmp_path):
        path = tmp_path / "a.csv"
        path.write_text("")
        with pytest.raises(MatrixFormatError):
            read_matrix(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(OSError):
            read_matrix(tmp_path / "nope.csv")

    def test_binary_first_line_is_a_format_error(self, tmp_path):
        path = tmp_path / "a.csv"
        path.write_bytes(b"\xff\xfe1,2\n3,4\n")
        with pytest.raises(MatrixFormatError, match="UTF-8") as excinfo:
            detect_format(path)
        assert excinfo.value.line == 1
        with pytest.raises(MatrixFormatError):
            read_matrix(path)

    def test_invalid_utf8_reports_line(self, tmp_path):
        path = tmp_path / "a.csv"
        path.write_bytes(b"1,2\n3,4\n\xff,5\n")
        with pytest.raises(MatrixFormatError, match=r"a\.csv:3:") as excinfo:
            read_matrix(path)
        assert excinfo.value.line == 3


class TestReadMatrixMarket:
    def test_array_is_column_major(self, tmp_path):
        path = tmp_path / "a.mtx"
        path.write_text("%%MatrixMarket matrix array real general\n2 2\n1\n3\n2\n4\n")
        assert detect_format(path) is MatrixFileFormat.MATRIX_MARKET_ARRAY
        assert_array_equal(read_matrix(path), [[1.0, 2.0], [3.0, 4.0]])

    def test_coordinate_fills_zeros(self, tmp_path):
        path = tmp_path / "a.mtx"
        path.write_text(
            "%%MatrixMarket matrix coordinate real general\n% comment\n2 3 2\n1 1 5\n2 3 7.5\n"
        )
        assert detect_format(path) is MatrixFileFormat.MATRIX_MARKET_COORDINATE
        assert_array_equal(read_matrix(path), [[5.0, 0.0, 0.0], [0.0, 0.0, 7.5]])

    def test_unsupported_symmetry(self, tmp_path):
        path = tmp_path / "a.mtx"
        path.write_text("%%MatrixMarket matrix array real symmetric\n1 1\n1\n")
        with pytest.raises(MatrixFormatError, match="symmetry") as excinfo:
            read_matrix(path)
        assert excinfo.value.line == 1

    def test_unsupported_field(self, tmp_path):
        path = tmp_path / "a.mtx"
        path.write_text("%%MatrixMarket matrix array complex general\n1 1\n1 0\n")
        with pytest.raises(MatrixFormatError, match="field"):
            read_matrix(path)

    def test_malformed_header(self, tmp_path):
        path = tmp_path / "a.mtx"
        path.write_text("%%MatrixMarket vector\n1 1\n1\n")
        with pytest.raises(MatrixFormatError) as excinfo:
            read_matrix(path)
        assert excinfo.value.line == 1

    def test_malformed_size_line(self, tmp_path):
        path = tmp_path / "a.mtx"
        path.write_text("%%MatrixMarket matrix array real general\n% note\ntwo 2\n1\n")
        with pytest.raises(MatrixFormatError) as excinfo:
            read_matrix(path)
        assert excinfo.value.line == 3

    def test_invalid_utf8_in_body(self, tmp_path):
        path = tmp_path / "a.mtx"
        path.write_bytes(b"%%MatrixMarket matrix array real general\n2 1\n1\n\xe9\n")
        with pytest.raises(MatrixFormatError) as excinfo:
            read_matrix(path)
        assert excinfo.value.line == 4

    def test_forced_format_mismatch(self, tmp_path):
        path = tmp_path / "a.csv"
        path.write_text("1,2\n")
        with pytest.raises(MatrixFormatError, match="expected mm-array"):
            read_matrix(path, MatrixFileFormat.MATRIX_MARKET_ARRAY)
        assert read_matrix(path, "csv").shape == (1, 2)


# ======================================================================
# writing
# ======================================================================

class TestWrite:
    def test_zero_scalar_csv(self, tmp_path):
        path = tmp_path / "z.csv"
        write_matrix([[0.0]], path)
        assert path.read_text() == "0\n"

    def test_identity_csv(self, tmp_path):
        path = tmp_path / "i.csv"
        write_matrix(np.eye(2), path)
        assert path.read_text() == "1,0\n0,1\n"

    @pytest.mark.parametrize("fmt", list(MatrixFileFormat))
    def test_round_trip(self, rng, tmp_path, fmt):
        values = rng.normal(size=(6, 5)) * 10.0 ** rng.integers(-8, 8, size=(6, 5))
        path = tmp_path / f"m.{fmt.value}"
        write_matrix(values, path, fmt)
        assert detect_format(path) is fmt
        assert_array_equal(read_matrix(path), values)

    def test_writer_keeps_exact_path(self, tmp_path):
        path = tmp_path / "b.out"
        write_matrix(np.ones((2, 2)), path, MatrixFileFormat.MATRIX_MARKET_ARRAY)
        assert path.exists()
        assert not (tmp_path / "b.out.mtx").exists()

    def test_rejects_non_finite(self, tmp_path):
        with pytest.raises(NonFiniteError):
            write_matrix([[np.inf]], tmp_path / "x.csv")


class TestVectors:
    def test_column_round_trip(self, rng, tmp_path):
        v = rng.normal(size=7)
        path = tmp_path / "v.csv"
        write_vector(v, path)
        assert_array_equal(read_vector(path), v)

    def test_row_vector_accepted(self, tmp_path):
        path = tmp_path / "v.csv"
        path.write_text("1,2,3\n")
        assert_array_equal(read_vector(path), [1.0, 2.0, 3.0])

    def test_matrix_rejected(self, tmp_path):
        path = tmp_path / "m.csv"
        path.write_text("1,2\n3,4\n")
        with pytest.raises(ShapeMismatchError):
            read_vector(path)
