"""File formats.

ROI CSV
    One row per time point, one column per region, header row = region
    labels.
Subject manifest (JSON)
    ``{"tr_seconds": 2.0, "subjects": [{"id": "s01", "path": "s01.csv"}, ...]}``;
    a subject may also be given as a bare path string.  Relative paths are
    resolved against the manifest's directory.
Phase CSV
    Same orientation as the ROI CSV.
Tensor CSV
    Header ``i,j,<time_s>...``; one row per region pair in tensor order;
    missing values written as ``nan``.
Tensor binary (``.pstb``), little-endian::

    magic      4 bytes  b"PSTB"
    n_regions  uint32
    n_times    uint32   (T')
    metric_id  uint32   (Metric.code)
    values     float64 x P x T', row-major (NaN = missing)
    valid      ceil(P * T' / 8) bytes, row-major bitmask, LSB first

All writers go through :func:`atomic_write` (temp file + rename) and format
floats with 17 significant digits so a CSV round-trip is exact.
"""

import csv
import io as _io
import json
import os
import struct
import tempfile
from pathlib import Path

import numpy as np

from .exceptions import InputError
from .psmetrics import Metric, PsTensor, pair_index
from .signals import RoiDataset

FLOAT_FMT = ".17g"
TENSOR_MAGIC = b"PSTB"
_HEADER = struct.Struct("<4sIII")


def fmt(value):
    return format(float(value), FLOAT_FMT)


def atomic_write(path, data):
    """Write ``data`` (str or bytes) to ``path`` via a temp file + rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    mode = "wb" if isinstance(data, bytes) else "w"
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, mode, **({} if mode == "wb" else {"newline": ""})) as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def _csv_text(header, rows):
    buf = _io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def write_json(path, obj):
    return atomic_write(path, json.dumps(obj, indent=2, sort_keys=True) + "\n")


# --- ROI data ---------------------------------------------------------------

def read_roi_csv(path, tr_seconds):
    """Load a time-by-region CSV into a :class:`RoiDataset`."""
    path = Path(path)
    if not path.is_file():
        raise InputError(f"no such file: {path}")
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise InputError(f"{path}: empty file") from None
        try:
            rows = [[float(v) for v in row] for row in reader if row]
        except ValueError as exc:
            raise InputError(f"{path}: non-numeric value ({exc})") from None
    if not rows or any(len(r) != len(header) for r in rows):
        raise InputError(f"{path}: every row needs {len(header)} values")
    values = np.array(rows).T
    try:
        return RoiDataset(values, tr_seconds, [h.strip() for h in header])
    except InputError as exc:
        raise InputError(f"{path}: {exc}") from None


def write_roi_csv(path, dataset):
    rows = ([fmt(v) for v in col] for col in np.asarray(dataset.values).T)
    return atomic_write(path, _csv_text(dataset.region_labels, rows))


def read_subject_manifest(path):
    """Parse a subject manifest: ``(tr_seconds, [(subject_id, csv_path), ...])``."""
    path = Path(path)
    if not path.is_file():
        raise InputError(f"no such manifest: {path}")
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON ({exc})") from None
    if "tr_seconds" not in doc or "subjects" not in doc:
        raise InputError(f"{path}: manifest needs 'tr_seconds' and 'subjects'")
    subjects = []
    for k, entry in enumerate(doc["subjects"]):
        if isinstance(entry, str):
            entry = {"path": entry}
        p = Path(entry["path"])
        if not p.is_absolute():
            p = path.parent / p
        subjects.append((str(entry.get("id", p.stem)), p))
    if not subjects:
        raise InputError(f"{path}: manifest lists no subjects")
    return float(doc["tr_seconds"]), subjects


def load_subjects(manifest_path):
    """Read every subject of a manifest; all must share region count and length."""
    tr, entries = read_subject_manifest(manifest_path)
    datasets = []
    for sid, p in entries:
        data = read_roi_csv(p, tr)
        if datasets and data.values.shape != datasets[0][1].values.shape:
            raise InputError(
                f"{p}: shape {data.values.shape} (regions x samples) differs from "
                f"{datasets[0][1].values.shape} of the first subject")
        datasets.append((sid, data))
    return datasets


def write_phase_csv(path, phases):
    rows = ([fmt(v) for v in col] for col in np.asarray(phases.phases).T)
    return atomic_write(path, _csv_text(phases.region_labels, rows))


# --- tensors ----------------------------------------------------------------

def write_tensor_csv(path, tensor):
    header = ["i", "j"] + [fmt(t) for t in tensor.times_s]
    rows = ([i, j] + [fmt(v) for v in row]
            for (i, j), row in zip(tensor.pair_index, tensor.values))
    return atomic_write(path, _csv_text(header, rows))


def read_tensor_csv(path, metric, window=None, tr_seconds=None, region_labels=None):
    """Read a tensor CSV written by :func:`write_tensor_csv`."""
    path = Path(path)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [row for row in reader if row]
    try:
        times = np.array([float(t) for t in header[2:]])
        pairs = [(int(r[0]), int(r[1])) for r in rows]
        values = np.array([[float(v) for v in r[2:]] for r in rows]).reshape(len(rows), len(times))
    except (ValueError, IndexError) as exc:
        raise InputError(f"{path}: malformed tensor CSV ({exc})") from None
    n_regions = max(j for _, j in pairs) + 1 if pairs else 0
    if pairs != pair_index(n_regions):
        raise InputError(f"{path}: pair rows are not in the expected order")
    if tr_seconds is None:
        tr_seconds = float(times[1] - times[0]) if times.size > 1 else 1.0
    offset = int(round(times[0] / tr_seconds)) if times.size else 0
    return PsTensor(values, n_regions, Metric(metric), window, offset, tr_seconds, region_labels)


def write_tensor_binary(path, tensor):
    values = np.ascontiguousarray(tensor.values, dtype="<f8")
    header = _HEADER.pack(TENSOR_MAGIC, tensor.n_regions, values.shape[1], tensor.metric.code)
    mask = np.packbits(tensor.valid.ravel(), bitorder="little")
    return atomic_write(path, header + values.tobytes() + mask.tobytes())


def read_tensor_binary(path):
    """Returns ``(tensor, valid_mask)``; timing metadata is not stored."""
    blob = Path(path).read_bytes()
    if len(blob) < _HEADER.size:
        raise InputError(f"{path}: truncated tensor file")
    magic, n_regions, n_times, code = _HEADER.unpack_from(blob)
    if magic != TENSOR_MAGIC:
        raise InputError(f"{path}: not a tensor file (bad magic {magic!r})")
    n_pairs = n_regions * (n_regions - 1) // 2
    n_vals = n_pairs * n_times
    start = _HEADER.size
    stop = start + 8 * n_vals
    values = np.frombuffer(blob[start:stop], dtype="<f8").reshape(n_pairs, n_times).astype(float)
    bits = np.unpackbits(np.frombuffer(blob[stop:], dtype=np.uint8), count=n_vals, bitorder="little")
    valid = bits.reshape(n_pairs, n_times).astype(bool)
    return PsTensor(values, n_regions, Metric.from_code(code)), valid
