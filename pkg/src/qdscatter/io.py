"""Plain-text outputs: CSV with a '#' metadata header, JSON for scalar results.

Numbers are written with a fixed format so that identical inputs give
byte-identical files.
"""
from __future__ import annotations

import csv
import json
import math
from importlib import metadata
from pathlib import Path

import numpy as np

FLOAT_FMT = "{:.12e}"


class DataError(ValueError):
    pass


def version():
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "0+unknown"


def _plain(x):
    """JSON-safe conversion; non-finite floats become strings."""
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, np.ndarray):
        return _plain(x.tolist())
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, (np.integer, int)):
        return int(x)
    if isinstance(x, (complex, np.complexfloating)):
        return {"re": _plain(float(x.real)), "im": _plain(float(x.imag))}
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else str(x)
    return x


def metadata_block(scenario, bundle=None, extra=None):
    meta = {"artifact": "qdscatter", "version": version(), "scenario": scenario}
    if bundle is not None:
        meta["config"] = bundle.as_dict()
    if extra:
        meta["scenario_options"] = extra
    return _plain(meta)


def dumps(obj):
    return json.dumps(_plain(obj), sort_keys=True, indent=2) + "\n"


def write_json(path, obj, meta=None):
    out = {"meta": meta, "result": obj} if meta is not None else obj
    Path(path).write_text(dumps(out), encoding="utf-8")


def write_csv(path, columns, meta=None):
    """Write equal-length columns ({name: array}) with a commented header."""
    names = list(columns)
    arrays = [np.asarray(columns[n]) for n in names]
    n = {a.shape[0] for a in arrays}
    if len(n) != 1:
        raise ValueError("columns differ in length")
    lines = []
    if meta is not None:
        for line in json.dumps(_plain(meta), sort_keys=True, indent=1).splitlines():
            lines.append("# " + line)
    lines.append(",".join(names))
    for row in zip(*arrays):
        lines.append(",".join(FLOAT_FMT.format(float(v)) for v in row))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_table(path, required, optional=()):
    """Read a CSV with a header row (comment lines '#' skipped).

    Returns {column: float array}; missing optional columns are absent.
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"data file not found: {path}")
    rows, header = [], None
    with path.open(newline="", encoding="utf-8") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or not "".join(row).strip() or row[0].lstrip().startswith("#"):
                continue
            if header is None:
                header = [c.strip() for c in row]
                missing = [c for c in required if c not in header]
                if missing:
                    raise DataError(f"{path}:{lineno}: missing column(s) {', '.join(missing)}")
                continue
            if len(row) != len(header):
                raise DataError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
            try:
                rows.append([float(c) for c in row])
            except ValueError:
                raise DataError(f"{path}:{lineno}: non-numeric value in {row!r}") from None
    if header is None or not rows:
        raise DataError(f"{path}: no data rows")
    data = np.array(rows)
    return {c: data[:, header.index(c)] for c in (*required, *optional) if c in header}


def read_g1_data(path):
    t = read_table(path, ("tau_ps", "v"), ("v_err",))
    return t["tau_ps"], t["v"], t.get("v_err")


def read_spectrum_data(path):
    t = read_table(path, ("energy_meV", "counts"))
    return t["energy_meV"], t["counts"]
