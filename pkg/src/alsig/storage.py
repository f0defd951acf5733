"""Bit-exact feature-bundle files, model snapshots, and report files.

A feature bundle is a directory holding `features.fbnd` (binary header +
float32 matrix, little-endian) and `manifest.csv` (one row per sample:
sample_id, user_id, kind, source tag). Reports are versioned JSON with the
config echoed; CSV views are derived from them, never primary.
"""

from __future__ import annotations

import csv
import dataclasses
import json
import math
import struct
from pathlib import Path

import numpy as np

from .dataset import Dataset, Kind, SampleRecord
from .errors import BadMagic, LengthMismatch, ManifestMismatch, VersionUnsupported
from .harness import ExperimentReport, UserRow
from .svm import KernelSpec, PlattScaling, SvmModel

BUNDLE_MAGIC = b"FBND"
BUNDLE_VERSION = 1
_HEADER = struct.Struct("<4sIQQ")  # magic, version, n_samples, dim

FEATURES_NAME = "features.fbnd"
MANIFEST_NAME = "manifest.csv"

_KIND_TOKENS = {"genuine": Kind.GENUINE, "skilled_forgery": Kind.SKILLED_FORGERY}


def write_bundle(ds: Dataset, path, source_tag: str = "") -> None:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    X = np.stack([r.features for r in ds.records]).astype("<f4")
    header = _HEADER.pack(BUNDLE_MAGIC, BUNDLE_VERSION, len(ds.records), ds.dim)
    (out / FEATURES_NAME).write_bytes(header + X.tobytes(order="C"))
    with (out / MANIFEST_NAME).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        for r in ds.records:
            w.writerow([r.sample_id, r.user_id, r.kind.value, source_tag])


def read_manifest(path) -> list[tuple[int, int, str, str]]:
    rows = []
    with (Path(path) / MANIFEST_NAME).open("r", newline="", encoding="utf-8") as fh:
        for i, row in enumerate(csv.reader(fh)):
            if len(row) != 4:
                raise ManifestMismatch(f"manifest row {i} has {len(row)} fields, expected 4")
            try:
                sid, uid = int(row[0]), int(row[1])
            except ValueError:
                raise ManifestMismatch(f"manifest row {i} has non-integer ids") from None
            if row[2] not in _KIND_TOKENS:
                raise ManifestMismatch(f"manifest row {i} has unknown kind {row[2]!r}")
            rows.append((sid, uid, row[2], row[3]))
    return rows


def read_bundle(path) -> Dataset:
    """Load and validate a bundle; inverse of write_bundle bit for bit.

    The user count is inferred as max(user_id) + 1, so every user is expected
    to own at least one sample.
    """
    path = Path(path)
    raw = (path / FEATURES_NAME).read_bytes()
    if len(raw) < _HEADER.size or raw[:4] != BUNDLE_MAGIC:
        raise BadMagic(
            f"{FEATURES_NAME} does not start with {BUNDLE_MAGIC!r} "
            f"(got {raw[:4]!r})"
        )
    magic, version, n_samples, dim = _HEADER.unpack_from(raw)
    if version != BUNDLE_VERSION:
        raise VersionUnsupported(f"bundle version {version}, supported: {BUNDLE_VERSION}")
    expected = 4 * n_samples * dim
    body = len(raw) - _HEADER.size
    if body != expected:
        raise LengthMismatch(
            f"matrix holds {body} bytes, header implies {expected} "
            f"(n_samples={n_samples}, dim={dim})"
        )
    X = np.frombuffer(raw, dtype="<f4", offset=_HEADER.size).reshape(n_samples, dim)

    rows = read_manifest(path)
    if len(rows) != n_samples:
        if len(rows) > n_samples:
            raise ManifestMismatch(
                f"unexpected manifest row {n_samples}: matrix has {n_samples} samples"
            )
        raise ManifestMismatch(
            f"manifest ends at row {len(rows)}, matrix has {n_samples} samples"
        )
    seen: dict[int, int] = {}
    records = []
    for i, (sid, uid, kind, _tag) in enumerate(rows):
        if sid in seen:
            raise ManifestMismatch(
                f"manifest row {i} repeats sample_id {sid} (first at row {seen[sid]})"
            )
        seen[sid] = i
        records.append(SampleRecord(sid, uid, _KIND_TOKENS[kind], X[i].copy()))
    n_users = max(r.user_id for r in records) + 1
    return Dataset(records, n_users=n_users, dim=dim)


# --- model snapshots (debugging aid) ---

MODEL_MAGIC = b"ASVM"
MODEL_VERSION = 1
_KERNEL_CODE = {"linear": 0, "rbf": 1}
_KERNEL_NAME = {v: k for k, v in _KERNEL_CODE.items()}


def save_model(m: SvmModel, path) -> None:
    n = len(m.support_ids)
    platt = m.platt or PlattScaling(math.nan, math.nan)
    head = struct.pack(
        "<4sIBdddddqdBddBQ",
        MODEL_MAGIC,
        MODEL_VERSION,
        _KERNEL_CODE[m.kernel.kind],
        m.kernel.gamma if m.kernel.gamma is not None else math.nan,
        m.bias,
        m.c_pos,
        m.c_neg,
        m.tol,
        m.n_iter,
        m.kkt_violation,
        1 if m.platt is not None else 0,
        platt.a,
        platt.b,
        1 if platt.degenerate else 0,
        n,
    )
    body = (
        np.asarray(m.support_ids, dtype="<i8").tobytes()
        + np.asarray(m.dual_coeffs, dtype="<f8").tobytes()
        + struct.pack("<d", m.objective)
    )
    Path(path).write_bytes(head + body)


def load_model(path) -> SvmModel:
    raw = Path(path).read_bytes()
    fmt = "<4sIBdddddqdBddBQ"
    head = struct.unpack_from(fmt, raw)
    (magic, version, kcode, gamma, bias, c_pos, c_neg, tol,
     n_iter, violation, has_platt, pa, pb, pdeg, n) = head
    if magic != MODEL_MAGIC:
        raise BadMagic(f"model file magic {magic!r}")
    if version != MODEL_VERSION:
        raise VersionUnsupported(f"model version {version}")
    off = struct.calcsize(fmt)
    ids = np.frombuffer(raw, dtype="<i8", count=n, offset=off).copy()
    off += 8 * n
    coeffs = np.frombuffer(raw, dtype="<f8", count=n, offset=off).copy()
    off += 8 * n
    (objective,) = struct.unpack_from("<d", raw, off)
    return SvmModel(
        support_ids=ids,
        dual_coeffs=coeffs,
        bias=bias,
        kernel=KernelSpec(_KERNEL_NAME[kcode], None if math.isnan(gamma) else gamma),
        platt=PlattScaling(pa, pb, bool(pdeg)) if has_platt else None,
        c_pos=c_pos,
        c_neg=c_neg,
        tol=tol,
        n_iter=int(n_iter),
        kkt_violation=violation,
        objective=objective,
    )


# --- reports ---

REPORT_FORMAT = "alsig-report"
REPORT_VERSION = 1


def report_to_dict(report: ExperimentReport) -> dict:
    return {
        "format": REPORT_FORMAT,
        "version": REPORT_VERSION,
        "config": report.config,
        "rows": [
            dict(dataclasses.asdict(r), queries=[list(q) for q in r.queries])
            for r in report.rows
        ],
        "aggregates": report.aggregates,
        "wall_time_s": report.wall_time_s,
    }


def dumps_report(report: ExperimentReport) -> str:
    return json.dumps(report_to_dict(report), sort_keys=True, indent=2) + "\n"


def write_report(report: ExperimentReport, path) -> None:
    Path(path).write_text(dumps_report(report), encoding="utf-8")


def read_report(path) -> dict:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    if data.get("format") != REPORT_FORMAT:
        raise BadMagic(f"not an {REPORT_FORMAT} file: {path}")
    if data.get("version") != REPORT_VERSION:
        raise VersionUnsupported(f"report version {data.get('version')}")
    return data


def report_from_dict(data: dict) -> ExperimentReport:
    rows = tuple(
        UserRow(
            **dict(
                r,
                degenerate=tuple(r["degenerate"]),
                queries=tuple(tuple(q) for q in r["queries"]),
            )
        )
        for r in data["rows"]
    )
    return ExperimentReport(
        config=data["config"],
        rows=rows,
        aggregates=data["aggregates"],
        wall_time_s=data["wall_time_s"],
    )
