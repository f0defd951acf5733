import dataclasses

import numpy as np
import pytest

from alsig import harness, storage, svm
from alsig.errors import BadMagic, LengthMismatch, ManifestMismatch, VersionUnsupported
from alsig.svm import PlattScaling

from test_harness import small_protocol


def datasets_equal(a, b) -> bool:
    if a.n_users != b.n_users or a.dim != b.dim or len(a) != len(b):
        return False
    for ra, rb in zip(a.records, b.records):
        if (ra.sample_id, ra.user_id, ra.kind) != (rb.sample_id, rb.user_id, rb.kind):
            return False
        if ra.features.tobytes() != rb.features.tobytes():
            return False
    return True


class TestBundleRoundTrip:
    def test_bit_exact(self, tiny_ds, tmp_path):
        storage.write_bundle(tiny_ds, tmp_path / "b", source_tag="synthetic:tiny")
        back = storage.read_bundle(tmp_path / "b")
        assert datasets_equal(tiny_ds, back)
        # writing the loaded dataset again produces identical bytes
        storage.write_bundle(back, tmp_path / "b2", source_tag="synthetic:tiny")
        a = (tmp_path / "b" / storage.FEATURES_NAME).read_bytes()
        b = (tmp_path / "b2" / storage.FEATURES_NAME).read_bytes()
        assert a == b

    def test_manifest_tags(self, tiny_ds, tmp_path):
        storage.write_bundle(tiny_ds, tmp_path / "b", source_tag="pooled-2048")
        rows = storage.read_manifest(tmp_path / "b")
        assert len(rows) == len(tiny_ds)
        assert all(r[3] == "pooled-2048" for r in rows)


class TestBundleErrors:
    @pytest.fixture()
    def bundle(self, tiny_ds, tmp_path):
        storage.write_bundle(tiny_ds, tmp_path / "b")
        return tmp_path / "b"

    def test_truncated_matrix(self, bundle):
        f = bundle / storage.FEATURES_NAME
        f.write_bytes(f.read_bytes()[:-7])
        with pytest.raises(LengthMismatch, match="bytes"):
            storage.read_bundle(bundle)

    def test_bad_magic(self, bundle):
        f = bundle / storage.FEATURES_NAME
        raw = bytearray(f.read_bytes())
        raw[:4] = b"NOPE"
        f.write_bytes(bytes(raw))
        with pytest.raises(BadMagic):
            storage.read_bundle(bundle)

    def test_unsupported_version(self, bundle):
        f = bundle / storage.FEATURES_NAME
        raw = bytearray(f.read_bytes())
        raw[4:8] = (99).to_bytes(4, "little")
        f.write_bytes(bytes(raw))
        with pytest.raises(VersionUnsupported, match="99"):
            storage.read_bundle(bundle)

    def test_extra_manifest_row_names_index(self, bundle, tiny_ds):
        m = bundle / storage.MANIFEST_NAME
        m.write_text(m.read_text() + "9999,0,genuine,extra\n")
        with pytest.raises(ManifestMismatch, match=str(len(tiny_ds))):
            storage.read_bundle(bundle)

    def test_missing_manifest_row(self, bundle):
        m = bundle / storage.MANIFEST_NAME
        lines = m.read_text().splitlines(keepends=True)
        m.write_text("".join(lines[:-1]))
        with pytest.raises(ManifestMismatch, match="ends at row"):
            storage.read_bundle(bundle)

    def test_unknown_kind_token(self, bundle):
        m = bundle / storage.MANIFEST_NAME
        lines = m.read_text().splitlines()
        parts = lines[3].split(",")
        parts[2] = "traced"
        lines[3] = ",".join(parts)
        m.write_text("\n".join(lines) + "\n")
        with pytest.raises(ManifestMismatch, match="row 3"):
            storage.read_bundle(bundle)

    def test_duplicate_sample_id(self, bundle):
        m = bundle / storage.MANIFEST_NAME
        lines = m.read_text().splitlines()
        first_id = lines[0].split(",")[0]
        parts = lines[5].split(",")
        parts[0] = first_id
        lines[5] = ",".join(parts)
        m.write_text("\n".join(lines) + "\n")
        with pytest.raises(ManifestMismatch, match="repeats"):
            storage.read_bundle(bundle)


class TestModelSnapshot:
    def test_round_trip(self, tiny_ds, tmp_path):
        ids = tiny_ds.genuine_ids(0)[:3] + tiny_ds.genuine_ids(1)[:3]
        labels = [1, 1, 1, -1, -1, -1]
        m = svm.train(tiny_ds, ids, labels, svm.SvmConfig(c=10.0))
        m = dataclasses.replace(m, platt=PlattScaling(-1.5, 0.25))
        p = tmp_path / "model.bin"
        storage.save_model(m, p)
        back = storage.load_model(p)
        assert np.array_equal(back.support_ids, m.support_ids)
        assert np.array_equal(back.dual_coeffs, m.dual_coeffs)
        assert back.bias == m.bias
        assert back.kernel == m.kernel
        assert back.platt == m.platt
        assert back.objective == m.objective
        assert (back.c_pos, back.c_neg, back.tol) == (m.c_pos, m.c_neg, m.tol)

    def test_no_platt_round_trip(self, tiny_ds, tmp_path):
        ids = tiny_ds.genuine_ids(0)[:2] + tiny_ds.genuine_ids(1)[:2]
        m = svm.train(tiny_ds, ids, [1, 1, -1, -1], svm.SvmConfig())
        storage.save_model(m, tmp_path / "m.bin")
        assert storage.load_model(tmp_path / "m.bin").platt is None


class TestReportFiles:
    def test_write_read_round_trip(self, small_ds, tmp_path):
        report = harness.run_experiment(small_ds, small_protocol(n_seed_repeats=1))
        p = tmp_path / "report.json"
        storage.write_report(report, p)
        data = storage.read_report(p)
        back = storage.report_from_dict(data)
        assert back.rows == report.rows
        assert back.aggregates == report.aggregates
        assert back.config == report.config

    def test_rejects_foreign_json(self, tmp_path):
        p = tmp_path / "x.json"
        p.write_text('{"hello": 1}')
        with pytest.raises(BadMagic):
            storage.read_report(p)
