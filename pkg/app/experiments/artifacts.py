import csv
import json
from pathlib import Path

import numpy as np
from pydantic import BaseModel

from app.core.errors import ShapeMismatch, StepTooLarge
from app.dynamics.steppers import gd_step_lifted
from app.experiments.rows import evaluate_row
from app.experiments.schema import SummaryReport, TrajectoryLog, TrajectoryRow
from app.linalg.schema import Matrix
from app.lifted.schema import ProblemSpec
from app.lifted.state import derive
from app.measurement.schema import MeasOp

COLUMNS = list(TrajectoryRow.model_fields)


class SnapshotMeta(BaseModel):
    t: float
    rows: int
    cols: int
    k: int | None = None


def write_trajectory(log: TrajectoryLog, path: Path) -> None:
    with path.open("w", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=COLUMNS, lineterminator="\n")
        writer.writeheader()
        for row in log.rows:
            writer.writerow(row.model_dump())


def read_trajectory(path: Path) -> list[TrajectoryRow]:
    with path.open(newline="") as f:
        return [TrajectoryRow.model_validate(record) for record in csv.DictReader(f)]


def write_json(data: dict, path: Path) -> None:
    path.write_text(json.dumps(data, indent=2) + "\n")


def write_summary(summary: SummaryReport, path: Path) -> None:
    write_json(summary.model_dump(mode="json"), path)


def write_matrix(M: Matrix, path: Path, meta: SnapshotMeta) -> None:
    """Flat little-endian float64 payload with a JSON sidecar of the same stem."""
    path.parent.mkdir(parents=True, exist_ok=True)
    np.ascontiguousarray(M, dtype="<f8").tofile(path)
    path.with_suffix(".json").write_text(meta.model_dump_json(indent=2) + "\n")


def write_snapshot(W: Matrix, t: float, k: int, directory: Path) -> Path:
    path = directory / f"W_{k:08d}.bin"
    write_matrix(W, path, SnapshotMeta(t=t, rows=W.shape[0], cols=W.shape[1], k=k))
    return path


def read_snapshot(path: Path) -> tuple[Matrix, SnapshotMeta]:
    meta = SnapshotMeta.model_validate_json(path.with_suffix(".json").read_text())
    flat = np.fromfile(path, dtype="<f8")
    if flat.size != meta.rows * meta.cols:
        raise ShapeMismatch(
            f"Snapshot {path.name} holds {flat.size} values, sidecar says {meta.rows}x{meta.cols}"
        )
    return flat.reshape(meta.rows, meta.cols).astype(np.float64), meta


def write_factors(spec: ProblemSpec, W: Matrix, out_dir: Path, t: float) -> None:
    """Final U and V rotated back into the frame of the supplied target."""
    U, V = spec.to_original_frame(W[: spec.m], W[spec.m :])
    for name, M in (("final_U", U), ("final_V", V)):
        meta = SnapshotMeta(t=t, rows=M.shape[0], cols=M.shape[1])
        write_matrix(M, out_dir / f"{name}.bin", meta)


def recompute_row(path: Path, spec: ProblemSpec, op: MeasOp) -> TrajectoryRow:
    """Rebuild a trajectory row from its W snapshot alone."""
    W, meta = read_snapshot(path)
    k = meta.k if meta.k is not None else int(round(meta.t / spec.eta))
    state = derive(W, spec, meta.t)
    try:
        rec = gd_step_lifted(state, op, spec, k)
    except StepTooLarge:
        rec = None
    return evaluate_row(state, rec, spec, k).row
