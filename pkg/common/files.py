# common/files.py
from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from pathlib import Path
from typing import Any, Iterable, List, Sequence

import numpy as np

from pydantic import ValidationError

from common.errors import CurveFileError
from common.models import CurveFile, FrameTable, diagnostics


def _replace_atomic(path: str | Path, text: str) -> str:
    """Write text next to path, then os.replace it into place."""
    out = Path(path)
    out.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{out.name}.", dir=out.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as f:
            f.write(text)
        os.replace(tmp, out)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return str(out)


def dumps_report(obj: Any) -> str:
    # sorted keys and fixed indentation keep reports byte-identical across runs
    return json.dumps(obj, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def write_json_atomic(path: str | Path, obj: Any) -> str:
    return _replace_atomic(path, dumps_report(obj))


def save_rows_csv(rows: List[dict], path: str | Path, columns: Sequence[str] | None = None) -> str:
    # columns = given order, else first-seen order across rows
    if columns is None:
        cols: list[str] = []
        for r in rows:
            cols += [k for k in r if k not in cols]
    else:
        cols = list(columns)

    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: r.get(k) for k in cols})
    return _replace_atomic(path, buf.getvalue())


# ---------- frame curves as CSV: t, then n*n row-major entries ----------

def save_frame_csv(times: Iterable[float], frames: np.ndarray, path: str | Path) -> str:
    frames = np.asarray(frames, dtype=float)
    n = frames.shape[-1]
    header = ["t"] + [f"F{i}{j}" for i in range(n) for j in range(n)]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for t, F in zip(times, frames):
        w.writerow([repr(float(t))] + [repr(float(x)) for x in F.reshape(-1)])
    return _replace_atomic(path, buf.getvalue())


def load_frame_csv(path: str | Path) -> tuple[np.ndarray, np.ndarray]:
    """Return (times[S], frames[S, n, n])."""
    p = Path(path)
    try:
        with p.open("r", encoding="utf-8", newline="") as f:
            reader = csv.reader(f)
            header = next(reader, None)
            rows = [[float(x) for x in r] for r in reader if r]
    except (OSError, ValueError) as e:
        raise CurveFileError(f"cannot read frame file {p}: {e}") from e

    if not header or header[0].strip() != "t":
        raise CurveFileError(f"frame file {p}: first column must be 't'", diagnostics=["header: expected t, F00, ..."])
    n = int(round(np.sqrt(len(header) - 1)))
    if n * n != len(header) - 1:
        raise CurveFileError(f"invalid frame file {p}", diagnostics=[f"header: {len(header) - 1} entries is not a square"])
    try:
        FrameTable.model_validate({"dim": n, "rows": rows})
    except ValidationError as e:
        raise CurveFileError(f"invalid frame file {p}", diagnostics=diagnostics(e)) from e
    arr = np.asarray(rows, dtype=float)
    return arr[:, 0], arr[:, 1:].reshape(-1, n, n)


# ---------- curve files ----------

def load_curve_payload(path: str | Path) -> dict:
    """Read and validate a curve file; raises CurveFileError with diagnostics."""
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as e:
        raise CurveFileError(f"cannot read curve file {p}: {e}") from e
    try:
        payload = json.loads(text)
    except json.JSONDecodeError as e:
        raise CurveFileError(
            f"curve file {p} is not valid JSON",
            diagnostics=[f"line {e.lineno} column {e.colno}: {e.msg}"],
        ) from e

    try:
        model = CurveFile.model_validate(payload)
    except ValidationError as e:
        raise CurveFileError(f"invalid curve file {p}", diagnostics=diagnostics(e)) from e
    return model.model_dump(exclude_none=True)
