"""File storage for run artifacts: time series, summaries, field snapshots and reports.

Every run owns a directory under the configured output directory. Writes go to a
sibling temporary file first and are moved into place with os.replace, so a
reader never sees a half-written artifact.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import os
import struct
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from pydantic import BaseModel

from fnls_lab.exceptions import SnapshotFormatError
from fnls_lab.models import SERIES_COLUMNS, RatioSample, RunSummary, SeriesRow, SweepRow, VerificationReport
from fnls_lab.spectral import Field, Grid

logger = logging.getLogger(__name__)

SNAPSHOT_MAGIC = b"FNLSFLD\0"
SNAPSHOT_VERSION = 1
_PREFIX = struct.Struct("<8sII")
_TRAILER = struct.Struct("<ddd")


def format_float(value: float | None) -> str:
    """17 significant digits, enough to round-trip any double."""
    if value is None:
        return ""
    return f"{value:.17g}"


@dataclass(frozen=True)
class Snapshot:
    """A decoded field snapshot."""

    grid: Grid
    values: np.ndarray
    s: float
    sigma: float
    t: float

    @property
    def field(self) -> Field:
        return Field(self.grid, self.values)


def encode_snapshot(field: Field, s: float, sigma: float, t: float) -> bytes:
    grid = field.grid
    ndim = grid.ndim
    header = (
        _PREFIX.pack(SNAPSHOT_MAGIC, SNAPSHOT_VERSION, ndim)
        + struct.pack(f"<{ndim}I", *grid.n)
        + struct.pack(f"<{ndim}d", *grid.lengths)
        + _TRAILER.pack(s, sigma, t)
    )
    data = np.ascontiguousarray(field.physical(), dtype="<c16")
    return header + data.tobytes(order="C")


def decode_snapshot(payload: bytes) -> Snapshot:
    """Parse a snapshot produced by encode_snapshot.

    Raises:
        SnapshotFormatError: On a wrong magic, an unknown version, or a size mismatch.
    """
    if len(payload) < _PREFIX.size:
        raise SnapshotFormatError("snapshot shorter than its header")
    magic, version, ndim = _PREFIX.unpack_from(payload, 0)
    if magic != SNAPSHOT_MAGIC:
        raise SnapshotFormatError(f"bad snapshot magic {magic!r}")
    if version != SNAPSHOT_VERSION:
        raise SnapshotFormatError(f"unsupported snapshot version {version}")
    if ndim < 1:
        raise SnapshotFormatError("snapshot declares no axes")
    offset = _PREFIX.size
    header_size = offset + 4 * ndim + 8 * ndim + _TRAILER.size
    if len(payload) < header_size:
        raise SnapshotFormatError("snapshot header truncated")
    counts = struct.unpack_from(f"<{ndim}I", payload, offset)
    offset += 4 * ndim
    lengths = struct.unpack_from(f"<{ndim}d", payload, offset)
    offset += 8 * ndim
    s, sigma, t = _TRAILER.unpack_from(payload, offset)
    offset += _TRAILER.size

    expected = int(np.prod(counts)) * 16
    if len(payload) - offset != expected:
        raise SnapshotFormatError(f"snapshot carries {len(payload) - offset} data bytes, expected {expected}")
    try:
        grid = Grid.create(counts, lengths)
    except ValueError as exc:
        raise SnapshotFormatError(f"snapshot grid is invalid: {exc}") from exc
    values = np.frombuffer(payload, dtype="<c16", offset=offset).reshape(counts).astype(np.complex128)
    return Snapshot(grid=grid, values=values, s=s, sigma=sigma, t=t)


def read_snapshot(path: str | Path) -> Snapshot:
    file_path = Path(path)
    if not file_path.is_file():
        raise FileNotFoundError(f"Snapshot not found: {file_path}")
    return decode_snapshot(file_path.read_bytes())


def atomic_write(path: Path, data: bytes | str) -> None:
    """Write ``data`` to ``path`` through a temporary sibling and os.replace."""
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = data.encode() if isinstance(data, str) else data
    fd, tmp_name = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as handle:
            handle.write(payload)
        os.replace(tmp_name, path)
    except BaseException:
        Path(tmp_name).unlink(missing_ok=True)
        raise


class RunStorage:
    """Manages persistence of run artifacts under one output directory."""

    def __init__(self, base_path: str | Path) -> None:
        self.base_path = Path(base_path)
        self.base_path.mkdir(parents=True, exist_ok=True)

    def run_path(self, run: str) -> Path:
        path = self.base_path / run
        path.mkdir(parents=True, exist_ok=True)
        return path

    def _write_csv(self, path: Path, header: list[str], rows: list[list[str]]) -> Path:
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
        atomic_write(path, buffer.getvalue())
        return path

    def _write_model(self, path: Path, model: BaseModel) -> Path:
        atomic_write(path, model.model_dump_json(indent=2))
        logger.info("Saved %s", path)
        return path

    # -- time series ---------------------------------------------------------

    def write_series(self, run: str, rows: list[SeriesRow]) -> Path:
        """Write the sampled series with the fixed column set; floats carry 17 significant digits."""
        body = [[format_float(value) for value in row.as_row()] for row in rows]
        path = self._write_csv(self.run_path(run) / "series.csv", list(SERIES_COLUMNS), body)
        logger.info("Saved %d series rows to %s", len(rows), path)
        return path

    def read_series(self, run: str) -> list[dict[str, float]]:
        file_path = self.base_path / run / "series.csv"
        if not file_path.exists():
            raise FileNotFoundError(f"Series not found for run: {run}")
        with file_path.open(newline="") as handle:
            return [{key: float(value) for key, value in row.items()} for row in csv.DictReader(handle)]

    # -- summaries and reports -----------------------------------------------

    def save_summary(self, run: str, summary: RunSummary) -> Path:
        return self._write_model(self.run_path(run) / "summary.json", summary)

    def load_summary(self, run: str) -> RunSummary:
        """Load a run summary.

        Raises:
            FileNotFoundError: If the run has no summary.
        """
        file_path = self.base_path / run / "summary.json"
        if not file_path.exists():
            raise FileNotFoundError(f"Run summary not found: {run}")
        return RunSummary.model_validate_json(file_path.read_text())

    def save_json(self, run: str, name: str, payload: dict | list) -> Path:
        path = self.run_path(run) / name
        atomic_write(path, json.dumps(payload, indent=2, default=str))
        logger.info("Saved %s", path)
        return path

    def save_verification(self, run: str, report: VerificationReport) -> Path:
        return self._write_model(self.run_path(run) / "verification.json", report)

    def write_report(self, run: str, text: str) -> Path:
        path = self.run_path(run) / "report.md"
        atomic_write(path, text)
        return path

    def write_ratios(self, run: str, samples: list[RatioSample]) -> Path:
        """ratios.csv with columns family, parameters, lhs, rhs, ratio; parameters as sorted key=value pairs."""
        body = [
            [
                sample.family,
                ";".join(f"{key}={format_float(value)}" for key, value in sorted(sample.parameters.items())),
                format_float(sample.lhs),
                format_float(sample.rhs),
                format_float(sample.ratio),
            ]
            for sample in samples
        ]
        return self._write_csv(self.run_path(run) / "ratios.csv", ["family", "parameters", "lhs", "rhs", "ratio"], body)

    # -- snapshots -------------------------------------------------------------

    def write_snapshot(self, run: str, name: str, field: Field, s: float, sigma: float, t: float) -> Path:
        path = self.run_path(run) / f"{name}.fld"
        atomic_write(path, encode_snapshot(field, s, sigma, t))
        logger.info("Saved snapshot %s (t=%g)", path, t)
        return path

    def read_snapshot(self, run: str, name: str) -> Snapshot:
        return read_snapshot(self.base_path / run / f"{name}.fld")

    # -- sweeps ---------------------------------------------------------------

    def save_sweep_row(self, run: str, row: SweepRow) -> Path:
        return self._write_model(self.run_path(run) / "row.json", row)

    def load_sweep_row(self, run: str) -> SweepRow | None:
        """The stored verdict row of a finished sweep cell, or None when absent or unreadable."""
        file_path = self.base_path / run / "row.json"
        if not file_path.exists():
            return None
        try:
            return SweepRow.model_validate_json(file_path.read_text())
        except ValueError as exc:
            logger.warning("Ignoring corrupt sweep row %s: %s", file_path, exc)
            return None

    def write_sweep(self, run: str, axes: list[str], rows: list[SweepRow]) -> Path:
        header = [
            "cell", *axes, "status", "exit_code", "branch", "applicable", "detected", "t_detect", "energy", "message"
        ]
        body = [
            [
                row.cell,
                *(format_float(row.axes.get(axis)) for axis in axes),
                row.status,
                str(row.exit_code),
                row.branch or "",
                str(row.applicable).lower(),
                str(row.detected).lower(),
                format_float(row.t_detect),
                format_float(row.energy),
                row.message,
            ]
            for row in rows
        ]
        path = self._write_csv(self.run_path(run) / "sweep.csv", header, body)
        logger.info("Saved %d sweep rows to %s", len(rows), path)
        return path

    # -- listing --------------------------------------------------------------

    def list_runs(self, status: str | None = None, limit: int = 50) -> list[dict]:
        """List stored runs with optional status filtering.

        Args:
            status: Filter by run status (completed, blowup-detected, ...).
            limit: Maximum number of runs to return.

        Returns:
            List of summary dicts with name, status, s_c, branch and created_at.
        """
        results: list[dict] = []
        files = sorted(self.base_path.glob("*/summary.json"), key=lambda p: p.stat().st_mtime, reverse=True)

        for file_path in files:
            if len(results) >= limit:
                break
            try:
                data = json.loads(file_path.read_text())
                if status and data.get("status") != status:
                    continue
                results.append({
                    "run": file_path.parent.name,
                    "name": data["name"],
                    "status": data["status"],
                    "exit_code": data.get("exit_code"),
                    "s_c": data.get("s_c"),
                    "branch": (data.get("verdict") or {}).get("branch"),
                    "created_at": data.get("created_at"),
                })
            except (json.JSONDecodeError, KeyError) as exc:
                logger.warning("Skipping corrupt run summary %s: %s", file_path, exc)
                continue

        return results
