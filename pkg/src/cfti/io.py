"""Binary volume/measurement files, CSV reports and key=value config files.

``HSV1`` volume layout (little endian)::

    b"HSV1" | u32 n_xi | u32 side | u32 side | n_xi*side*side f64 (vec(X) order)

``FTIM`` measurement layout (little endian)::

    b"FTIM" | u8 scheme (0 CI, 1 SI) | u8 flags (1 constrained, 2 dedup)
    | u8 pmf family (0 uniform, 1 power, 2 optimal) | u8 reserved
    | u32 n_xi | u32 n_p | u32 M | u32 n_rows
    | f64 alpha | u64 seed | f64 sigma | f64 amplification
    | n_pmf f64 probabilities | M u32 draws | values as interleaved (re, im) f64
"""

import csv
import io as _io
import struct

import numpy as np

from .sampling import Pmf, SamplingPlan, dedup, power_masses
from .sensing import HSVolume, MeasurementSet

__all__ = [
    "FormatError",
    "write_volume",
    "read_volume",
    "write_measurements",
    "read_measurements",
    "REPORT_COLUMNS",
    "format_report_csv",
    "write_report_csv",
    "read_report_csv",
    "read_config",
    "write_config",
]

REPORT_COLUMNS = (
    "scheme", "alpha", "ratio", "M", "M_eff", "sigma", "epsilon", "constrained",
    "metric_name", "metric_value", "trial", "seed", "wall_ms",
)

_HSV_HEADER = struct.Struct("<4sIII")
_FTIM_HEADER = struct.Struct("<4sBBBBIIIIdQdd")
_FAMILY_CODES = {"uniform": 0, "power": 1, "optimal": 2}
_FAMILY_NAMES = {v: k for k, v in _FAMILY_CODES.items()}


class FormatError(ValueError):
    """Malformed or truncated file."""


def _read_bytes(path):
    with open(path, "rb") as fh:
        return fh.read()


def write_volume(path, vol):
    vol = vol if isinstance(vol, HSVolume) else HSVolume(vol)
    header = _HSV_HEADER.pack(b"HSV1", vol.n_xi, vol.side, vol.side)
    payload = np.ascontiguousarray(vol.vec(), dtype="<f8").tobytes()
    with open(path, "wb") as fh:
        fh.write(header + payload)


def read_volume(path):
    raw = _read_bytes(path)
    if len(raw) < _HSV_HEADER.size:
        raise FormatError(f"{path}: header needs {_HSV_HEADER.size} bytes, file has {len(raw)}")
    magic, n_xi, s1, s2 = _HSV_HEADER.unpack_from(raw, 0)
    if magic != b"HSV1":
        raise FormatError(f"{path}: bad magic {magic!r} at offset 0, expected b'HSV1'")
    if s1 != s2:
        raise FormatError(f"{path}: non-square image {s1}x{s2} at offset 8")
    expected = _HSV_HEADER.size + 8 * n_xi * s1 * s2
    if len(raw) != expected:
        raise FormatError(f"{path}: expected {expected} bytes, got {len(raw)}")
    data = np.frombuffer(raw, dtype="<f8", offset=_HSV_HEADER.size).astype(float)
    data = data.reshape(n_xi, s1 * s2, order="F")
    return HSVolume(data)


def write_measurements(path, meas):
    plan = meas.plan
    pmf = plan.pmf
    flags = (1 if meas.constrained else 0) | (2 if meas.mode == "dedup" else 0)
    values = np.ascontiguousarray(meas.values, dtype=complex)
    n_rows = values.shape[0]
    header = _FTIM_HEADER.pack(
        b"FTIM", 0 if meas.scheme == "CI" else 1, flags, _FAMILY_CODES[pmf.family], 0,
        meas.n_xi, meas.n_p, plan.m, n_rows,
        float("nan") if pmf.alpha is None else float(pmf.alpha),
        int(plan.seed or 0), float(meas.sigma), float(meas.amplification))
    body = (np.asarray(pmf.probs, dtype="<f8").tobytes()
            + np.asarray(plan.draws, dtype="<u4").tobytes()
            + values.view(float).astype("<f8").tobytes())
    with open(path, "wb") as fh:
        fh.write(header + body)


def read_measurements(path):
    raw = _read_bytes(path)
    if len(raw) < _FTIM_HEADER.size:
        raise FormatError(f"{path}: header needs {_FTIM_HEADER.size} bytes, file has {len(raw)}")
    (magic, scheme_code, flags, family_code, _, n_xi, n_p, m, n_rows,
     alpha, seed, sigma, amp) = _FTIM_HEADER.unpack_from(raw, 0)
    if magic != b"FTIM":
        raise FormatError(f"{path}: bad magic {magic!r} at offset 0, expected b'FTIM'")
    if scheme_code not in (0, 1) or family_code not in _FAMILY_NAMES:
        raise FormatError(f"{path}: invalid scheme/family code at offset 4")
    scheme = "CI" if scheme_code == 0 else "SI"
    n_pmf = n_xi if scheme == "CI" else n_xi * n_p
    n_cols = n_p if scheme == "CI" else 1
    expected = _FTIM_HEADER.size + 8 * n_pmf + 4 * m + 16 * n_rows * n_cols
    if len(raw) != expected:
        raise FormatError(f"{path}: expected {expected} bytes, got {len(raw)}")
    off = _FTIM_HEADER.size
    probs = np.frombuffer(raw, "<f8", n_pmf, off).astype(float)
    off += 8 * n_pmf
    draws = np.frombuffer(raw, "<u4", m, off).astype(np.int64)
    off += 4 * m
    values = np.frombuffer(raw, "<f8", 2 * n_rows * n_cols, off).astype(float).view(complex)
    values = values.reshape(n_rows, n_p) if scheme == "CI" else values
    family = _FAMILY_NAMES[family_code]
    norm_inv = None
    if family != "optimal":
        norm_inv = float(power_masses(n_xi, alpha).sum())
    pmf = Pmf(probs, family, scheme, n_xi, n_p if scheme == "SI" else 1,
              None if np.isnan(alpha) else alpha, norm_inv)
    plan = SamplingPlan(pmf, draws, int(seed))
    dedup_mode = bool(flags & 2)
    return MeasurementSet(scheme, values, plan, sigma, n_xi, n_p, amp, bool(flags & 1),
                          effective=dedup(plan) if dedup_mode else None,
                          mode="dedup" if dedup_mode else "weighted", seed=int(seed))


def _fmt(value):
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return "" if value is None else str(value)


def format_report_csv(rows, include_timing=False):
    """Serialise report rows with the fixed column schema.

    Wall-clock times are blanked unless ``include_timing`` is set, so that
    reruns at a fixed seed produce identical bytes.
    """
    buf = _io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(REPORT_COLUMNS)
    for row in rows:
        rec = dict(row)
        if not include_timing:
            rec["wall_ms"] = None
        writer.writerow([_fmt(rec.get(col)) for col in REPORT_COLUMNS])
    return buf.getvalue()


def write_report_csv(path, rows, include_timing=False):
    text = format_report_csv(rows, include_timing)
    with open(path, "w", newline="") as fh:
        fh.write(text)


def read_report_csv(path):
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != REPORT_COLUMNS:
            raise FormatError(f"{path}: unexpected CSV header {reader.fieldnames}")
        return list(reader)


def read_config(path):
    """Parse ``key = value`` lines; ``#`` starts a comment.  Keys use dashes or underscores."""
    out = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise FormatError(f"{path}:{lineno}: expected key=value")
            key, value = (part.strip() for part in line.split("=", 1))
            if not key:
                raise FormatError(f"{path}:{lineno}: empty key")
            out[key.replace("-", "_")] = value
    return out


def write_config(path, mapping):
    with open(path, "w") as fh:
        for key, value in mapping.items():
            fh.write(f"{key} = {value}\n")
