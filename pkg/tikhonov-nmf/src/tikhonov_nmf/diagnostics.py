"""Per-iteration trace records and CSV export.

Two objective values are kept per iteration because they obey different
guarantees: ``objective_frozen`` (new factors, weights from before the
update) never increases, while ``objective_combined`` (new factors, new
weights) may.
"""

from __future__ import annotations

import csv
import io
from dataclasses import astuple, dataclass, fields
from pathlib import Path
from typing import BinaryIO, Iterable, Sequence

import numpy as np

from .errors import InsufficientDataError, NonFiniteError
from .matrix_core import (
    DenseMatrix,
    ObjectiveForm,
    RegParams,
    check_factor_shapes,
    complementary_slackness,
    frobenius_norm_sq,
    grad_b,
    grad_c,
    objective_j,
    penalty_terms,
)

INCREASE_SLACK = 1e-12


@dataclass(slots=True, frozen=True)
class IterationTrace:
    iteration: int
    objective_frozen: float
    objective_combined: float
    residual_norm_sq: float
    solution_norm_sq_b: float
    solution_norm_sq_c: float
    max_slack_b: float
    max_slack_c: float
    beta_min: float
    beta_max: float
    beta_mean: float
    alpha_min: float
    alpha_max: float
    alpha_mean: float


TRACE_COLUMNS: tuple[str, ...] = tuple(f.name for f in fields(IterationTrace))


def record_iteration(
    iteration: int,
    a: DenseMatrix,
    b: DenseMatrix,
    c: DenseMatrix,
    frozen_params: RegParams,
    params: RegParams,
    *,
    form: ObjectiveForm = "direct",
    tr_ata: float | None = None,
) -> IterationTrace:
    """Summarize one completed iteration without touching its matrices.

    ``frozen_params`` are the weights the factor steps used; ``params`` are
    the weights after this iteration's update. Slacks use ``params``, the
    same point the stopping test looks at.
    """
    check_factor_shapes(a, b, c, params)
    residual = a - b @ c
    residual_norm_sq = frobenius_norm_sq(residual)
    if form == "direct":
        objective_frozen = 0.5 * (residual_norm_sq + penalty_terms(b, c, frozen_params))
        objective_combined = 0.5 * (residual_norm_sq + penalty_terms(b, c, params))
    else:
        objective_frozen = objective_j(a, b, c, frozen_params, form=form, tr_ata=tr_ata)
        objective_combined = objective_j(a, b, c, params, form=form, tr_ata=tr_ata)

    slack_b = complementary_slackness(grad_b(a, b, c, params), b)
    slack_c = complementary_slackness(grad_c(a, b, c, params), c)
    trace = IterationTrace(
        iteration=iteration,
        objective_frozen=objective_frozen,
        objective_combined=objective_combined,
        residual_norm_sq=residual_norm_sq,
        solution_norm_sq_b=frobenius_norm_sq(b),
        solution_norm_sq_c=frobenius_norm_sq(c),
        max_slack_b=float(np.max(np.abs(slack_b))),
        max_slack_c=float(np.max(np.abs(slack_c))),
        beta_min=float(params.beta.min()),
        beta_max=float(params.beta.max()),
        beta_mean=float(params.beta.mean()),
        alpha_min=float(params.alpha.min()),
        alpha_max=float(params.alpha.max()),
        alpha_mean=float(params.alpha.mean()),
    )
    for name in TRACE_COLUMNS[1:]:
        if not np.isfinite(getattr(trace, name)):
            raise NonFiniteError(
                f"iteration {iteration}: trace field {name} is not finite",
                iteration=iteration,
                field=name,
            )
    return trace


def count_combined_increases(traces: Sequence[IterationTrace]) -> int:
    """Number of iterations where the combined objective went up.

    Increases are expected when the weights move; this is a diagnostic only.
    """
    if len(traces) < 2:
        raise InsufficientDataError("count_combined_increases needs at least 2 traces")
    count = 0
    for prev, cur in zip(traces, traces[1:]):
        prev_j = prev.objective_combined
        if cur.objective_combined > prev_j + INCREASE_SLACK * (1.0 + abs(prev_j)):
            count += 1
    return count


def _format_cell(value: float | int) -> str:
    if isinstance(value, int):
        return str(value)
    return format(value, ".17g")


def format_trace_csv(traces: Iterable[IterationTrace]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(TRACE_COLUMNS)
    for trace in traces:
        writer.writerow(_format_cell(v) for v in astuple(trace))
    return buffer.getvalue()


def export_trace_csv(
    traces: Iterable[IterationTrace], destination: str | Path | BinaryIO
) -> bytes:
    """Write the trace CSV (17 significant digits) and return the bytes written."""
    payload = format_trace_csv(traces).encode("utf-8")
    if isinstance(destination, (str, Path)):
        Path(destination).write_bytes(payload)
    else:
        destination.write(payload)
    return payload


def load_trace_csv(source: str | Path) -> list[IterationTrace]:
    with open(source, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(header) != TRACE_COLUMNS:
            raise ValueError(f"{source}: not a trace CSV (unexpected header {header!r})")
        return [
            IterationTrace(int(row[0]), *(float(cell) for cell in row[1:])) for row in reader
        ]
