"""On-disk formats: schema-tagged JSON for histograms, CSV for sweeps and
response matrices. Histogram and sweep files round-trip exactly; response
matrices are exported with 12 significant digits. All writes are atomic
(temp file plus rename)."""
from __future__ import annotations

import json
import os
import tempfile

import numpy as np

from .calibration import CalibrationResult
from .detector import PovmMatrix
from .histograms import CountHistogram, JointCountHistogram, SweepSeries

SCHEMA_HIST = "mppc-hist/1"
SCHEMA_JOINT = "mppc-joint/1"
G2_SWEEP_HEADER = "mean_counts_per_pulse,g2,g2_err"
NRF_SWEEP_HEADER = "mean_photons,nrf,nrf_err"


class SchemaError(ValueError):
    """The file does not match the declared schema."""


def atomic_write_text(path, text: str) -> None:
    """Write text via a temp file in the target directory plus rename."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _jsonable_meta(meta: dict) -> dict:
    out = {}
    for key, val in meta.items():
        if isinstance(val, (np.integer,)):
            val = int(val)
        elif isinstance(val, (np.floating,)):
            val = float(val)
        elif isinstance(val, np.ndarray):
            val = val.tolist()
        out[str(key)] = val
    return out


def _int_counts(counts: np.ndarray) -> list:
    rounded = np.rint(counts)
    if np.any(np.abs(counts - rounded) > 1e-9):
        raise ValueError("only integer event histograms are serialized")
    return [int(v) for v in rounded.ravel()]


def write_histogram(path, hist: CountHistogram) -> None:
    doc = {
        "schema": SCHEMA_HIST,
        "trials": int(hist.trials),
        "counts": _int_counts(hist.counts),
        "meta": _jsonable_meta(hist.meta),
    }
    atomic_write_text(path, json.dumps(doc, indent=1) + "\n")


def read_histogram(path) -> CountHistogram:
    with open(path) as fh:
        doc = json.load(fh)
    if doc.get("schema") != SCHEMA_HIST:
        raise SchemaError(f"{path}: expected schema {SCHEMA_HIST!r}")
    counts = np.asarray(doc["counts"], dtype=np.int64)
    if counts.sum() != doc["trials"]:
        raise SchemaError(f"{path}: counts do not sum to trials")
    return CountHistogram(doc["trials"], counts, doc.get("meta", {}))


def write_joint_histogram(path, joint: JointCountHistogram) -> None:
    rows = [
        _int_counts(joint.counts[i]) for i in range(joint.counts.shape[0])
    ]
    doc = {
        "schema": SCHEMA_JOINT,
        "trials": int(joint.trials),
        "counts": rows,
        "meta": _jsonable_meta(joint.meta),
    }
    atomic_write_text(path, json.dumps(doc, indent=1) + "\n")


def read_joint_histogram(path) -> JointCountHistogram:
    with open(path) as fh:
        doc = json.load(fh)
    if doc.get("schema") != SCHEMA_JOINT:
        raise SchemaError(f"{path}: expected schema {SCHEMA_JOINT!r}")
    counts = np.asarray(doc["counts"], dtype=np.int64)
    if counts.ndim != 2 or counts.sum() != doc["trials"]:
        raise SchemaError(f"{path}: counts matrix does not sum to trials")
    return JointCountHistogram(doc["trials"], counts, doc.get("meta", {}))


def _write_rows(path, header: str, rows) -> None:
    rows = sorted(rows, key=lambda r: r[0])
    lines = [header]
    for row in rows:
        lines.append(",".join(repr(float(v)) for v in row))
    atomic_write_text(path, "\n".join(lines) + "\n")


def _read_rows(path, header: str) -> np.ndarray:
    with open(path) as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines or lines[0] != header:
        raise SchemaError(f"{path}: expected header {header!r}")
    rows = []
    for ln in lines[1:]:
        parts = ln.split(",")
        if len(parts) != 3:
            raise SchemaError(f"{path}: malformed row {ln!r}")
        rows.append([float(v) for v in parts])
    data = np.asarray(rows, dtype=float)
    if data.size and np.any(np.diff(data[:, 0]) < 0):
        raise SchemaError(f"{path}: rows not sorted by first column")
    return data


def write_g2_sweep(path, series: SweepSeries) -> None:
    _write_rows(path, G2_SWEEP_HEADER, series.points.tolist())


def read_g2_sweep(path) -> SweepSeries:
    return SweepSeries(_read_rows(path, G2_SWEEP_HEADER))


def write_nrf_sweep(path, rows) -> None:
    _write_rows(path, NRF_SWEEP_HEADER, rows)


def read_nrf_sweep(path) -> np.ndarray:
    return _read_rows(path, NRF_SWEEP_HEADER)


def write_povm_csv(path, povm: PovmMatrix) -> None:
    lines = ["N," + ",".join(str(k) for k in range(povm.k_max + 1))]
    for n in range(povm.q.shape[0]):
        entries = ",".join(f"{v:.12g}" for v in povm.q[n])
        lines.append(f"{n},{entries}")
    atomic_write_text(path, "\n".join(lines) + "\n")


def read_povm_csv(path) -> np.ndarray:
    with open(path) as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines or not lines[0].startswith("N,"):
        raise SchemaError(f"{path}: expected a response-matrix header")
    rows = [[float(v) for v in ln.split(",")[1:]] for ln in lines[1:]]
    return np.asarray(rows, dtype=float)


def _sig6(value):
    if value is None:
        return None
    return float(f"{float(value):.6g}")


def calibration_result_doc(result: CalibrationResult) -> dict:
    """JSON document of a calibration result, decimals at 6 significant digits."""
    return {
        "p_hat": _sig6(result.p_hat),
        "p_err": _sig6(result.p_err),
        "a_coef": _sig6(result.a_coef),
        "b_coef": _sig6(result.b_coef),
        "cod": _sig6(result.cod),
        "residuals": [_sig6(r) for r in result.residuals],
        "method": result.method,
    }


def write_calibration_result(path, result: CalibrationResult) -> None:
    atomic_write_text(path, json.dumps(calibration_result_doc(result), indent=1) + "\n")
