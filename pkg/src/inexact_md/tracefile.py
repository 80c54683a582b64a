"""Trace / report serialization.

``trace.csv``     one row per iteration, fixed header TRACE_HEADER.
``iterates.csv``  the vectors of each step (x^k, x^{k+1}, the step direction)
                  so certificates can be recomputed from disk.
``report.json``   run config, problem spec, result scalars and certificates.

Floats are written with ``repr`` so they round-trip exactly.  All files are
UTF-8 with LF line endings and are written atomically (temp file + rename).
"""
from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from pathlib import Path

import numpy as np

from .oracle import DeltaSubgradient
from .solver import IterationRecord

TRACE_HEADER = ["k", "productive", "h", "sub_norm", "delta", "g_value", "f_estimate", "bregman_to_ref"]


def fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def atomic_write_text(path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def trace_csv(trace: list[IterationRecord]) -> str:
    rows = [
        [fmt(r.k), fmt(r.productive), fmt(r.h), fmt(r.sub_norm), fmt(r.sub.delta),
         fmt(r.g_value), fmt(r.f_value_estimate), fmt(r.bregman_to_ref)]
        for r in trace
    ]
    return _csv_text(TRACE_HEADER, rows)


def iterates_header(dim: int) -> list[str]:
    cols = ["k"]
    for prefix in ("x", "x_next", "p"):
        cols += [f"{prefix}_{i}" for i in range(dim)]
    return cols + ["sub_value", "g_delta", "g_sub_norm"]


def iterates_csv(trace: list[IterationRecord], dim: int) -> str:
    rows = []
    for r in trace:
        row = [fmt(r.k)]
        for vec in (r.x, r.x_next, r.sub.vector):
            row += [fmt(v) for v in vec]
        row += [fmt(r.sub.value), fmt(r.g_delta), fmt(r.g_sub_norm)]
        rows.append(row)
    return _csv_text(iterates_header(dim), rows)


def _float(s: str):
    return None if s == "" else float(s)


def read_trace(trace_path, iterates_path, dim: int) -> list[IterationRecord]:
    with open(trace_path, encoding="utf-8", newline="") as fh:
        trace_rows = list(csv.reader(fh))
    with open(iterates_path, encoding="utf-8", newline="") as fh:
        it_rows = list(csv.reader(fh))
    if trace_rows[0] != TRACE_HEADER:
        raise ValueError(f"unexpected trace header {trace_rows[0]}")
    if it_rows[0] != iterates_header(dim):
        raise ValueError("unexpected iterates header")
    if len(trace_rows) != len(it_rows):
        raise ValueError("trace and iterates files have different lengths")
    records = []
    for t, it in zip(trace_rows[1:], it_rows[1:]):
        k = int(t[0])
        if int(it[0]) != k:
            raise ValueError(f"row mismatch at k={k}")
        vals = [float(v) for v in it[1:]]
        x = np.array(vals[:dim])
        y = np.array(vals[dim:2 * dim])
        p = np.array(vals[2 * dim:3 * dim])
        sub_value, g_delta, g_sub_norm = vals[3 * dim:]
        records.append(IterationRecord(
            k=k, productive=t[1] == "1", h=float(t[2]), x=x, x_next=y,
            sub=DeltaSubgradient(p, float(t[4]), sub_value), sub_norm=float(t[3]),
            g_value=float(t[5]), g_delta=g_delta, g_sub_norm=g_sub_norm,
            f_value_estimate=float(t[6]), bregman_to_ref=_float(t[7]),
        ))
    return records


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        return f if math.isfinite(f) else repr(f)  # "inf" / "nan" keeps strict JSON
    return obj


def dumps_report(report: dict) -> str:
    return json.dumps(_jsonable(report), indent=1, sort_keys=True, allow_nan=False) + "\n"

