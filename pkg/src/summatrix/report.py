"""Turning results into deterministic JSON and CSV documents."""

from __future__ import annotations

import csv
import dataclasses
import enum
import io
import json
import math
import os
import tempfile
from importlib import resources

import numpy as np

from .matrices import TransformResult, Verdict
from .numerics import LimitEstimate, Sequence, TruncationPolicy


def _float(x: float):
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return x


def jsonable(obj):
    """Plain JSON data for ``obj``.

    Complex numbers become {"re", "im"}, non-finite floats the strings
    "inf", "-inf" and "nan", enums their values.  Verdicts drop their policy,
    which reports carry once at top level.  Sequences (functions) are
    omitted.
    """
    if obj is None or isinstance(obj, (bool, str)):
        return obj
    if isinstance(obj, enum.Enum):
        return obj.value
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return _float(float(obj))
    if isinstance(obj, (complex, np.complexfloating)):
        return {"re": _float(float(obj.real)), "im": _float(float(obj.imag))}
    if isinstance(obj, np.ndarray):
        return [jsonable(x) for x in obj.tolist()]
    if isinstance(obj, (list, tuple)):
        return [jsonable(x) for x in obj]
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, TruncationPolicy):
        return jsonable(obj.to_dict())
    if isinstance(obj, Verdict):
        return {"status": obj.status.value, "evidence": jsonable(obj.evidence)}
    if isinstance(obj, Sequence):
        return None
    if isinstance(obj, TransformResult):
        return transform_summary(obj)
    if dataclasses.is_dataclass(obj):
        return {f.name: jsonable(getattr(obj, f.name)) for f in dataclasses.fields(obj)
                if not isinstance(getattr(obj, f.name), Sequence)}
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def transform_summary(tr: TransformResult, head: int = 8, tail: int = 4) -> dict:
    n = len(tr.prefix)
    bounds = [b for b in tr.per_term_truncation]
    return {
        "terms": n,
        "prefix_head": jsonable(tr.prefix[:head]),
        "prefix_tail": jsonable(tr.prefix[max(n - tail, 0):]),
        "max_tail_bound": jsonable(max(bounds) if bounds else 0.0),
        "flagged_rows": list(tr.flagged_rows),
        "limit": jsonable(tr.limit),
    }


def dumps(doc: dict) -> str:
    return json.dumps(jsonable(doc), sort_keys=True, indent=2, allow_nan=False) + "\n"


def _rows(prefix: str, node, out: list):
    if isinstance(node, dict):
        if "status" in node and isinstance(node["status"], str):
            value = node.get("evidence", {}).get("value") if isinstance(node.get("evidence"), dict) else None
            if isinstance(value, dict):
                value = f"{value['re']}{'+' if not str(value['im']).startswith('-') else ''}{value['im']}i"
            out.append((prefix, node["status"], "" if value is None else str(value)))
        for k in sorted(node):
            _rows(f"{prefix}.{k}" if prefix else k, node[k], out)
    elif isinstance(node, list):
        for n, x in enumerate(node):
            _rows(f"{prefix}[{n}]", x, out)


def to_csv(doc: dict) -> str:
    """One row per verdict found anywhere in the document, top verdict first."""
    data = jsonable(doc)
    rows: list = []
    if isinstance(data.get("verdict"), str):
        rows.append(("verdict", data["verdict"], data.get("exit_code", "")))
    _rows("", data, rows)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("path", "status", "value"))
    w.writerows(rows)
    return buf.getvalue()


def write_atomic(path: str, text: str):
    """Write ``text`` to ``path`` through a temporary file and a rename."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix=".summatrix-", dir=directory)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def schema() -> dict:
    text = resources.files("summatrix").joinpath("report.schema.json").read_text(encoding="utf-8")
    return json.loads(text)
