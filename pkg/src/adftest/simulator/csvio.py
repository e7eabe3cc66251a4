"""Trajectory CSV: header row, one sample per line, LF endings."""
from __future__ import annotations

import io

import numpy as np

from ..errors import FormatError
from .engine import COLUMNS, Trajectory

HEADER = ",".join(COLUMNS)


def export_csv(traj: Trajectory) -> str:
    # repr is the shortest string that parses back to the identical double
    lines = [HEADER]
    lines.extend(",".join(map(repr, row)) for row in traj.data.tolist())
    return "\n".join(lines) + "\n"


def parse_csv(text: str) -> Trajectory:
    first, _, body = text.partition("\n")
    if first.strip() != HEADER:
        raise FormatError(f"unexpected trajectory header {first.strip()!r}")
    if not body.strip():
        return Trajectory()
    try:
        data = np.loadtxt(io.StringIO(body), delimiter=",", ndmin=2)
    except ValueError as exc:
        raise FormatError(f"bad trajectory row: {exc}") from exc
    if data.shape[1] != len(COLUMNS):
        raise FormatError(f"expected {len(COLUMNS)} columns, got {data.shape[1]}")
    return Trajectory(data)
