import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cfti.io import (
    REPORT_COLUMNS,
    FormatError,
    format_report_csv,
    read_config,
    read_measurements,
    read_report_csv,
    read_volume,
    write_config,
    write_measurements,
    write_report_csv,
    write_volume,
)
from cfti.sampling import build_pmf_ci, build_pmf_optimal, build_pmf_si, draw_plan
from cfti.sensing import HSVolume, ci_forward, dedup_ci_forward, nyquist_forward, si_forward

SCHEMA = "scheme,alpha,ratio,M,M_eff,sigma,epsilon,constrained,metric_name,metric_value,trial,seed,wall_ms"


class TestVolumeFile:
    def test_round_trip_is_bit_exact(self, tmp_path, rng):
        vol = HSVolume(rng.standard_normal((16, 4)))
        path = tmp_path / "v.hsv"
        write_volume(path, vol)
        back = read_volume(path)
        assert back.data.tobytes() == vol.data.tobytes()

    def test_layout(self, tmp_path):
        data = np.arange(32, dtype=float).reshape(8, 4, order="F")
        path = tmp_path / "v.hsv"
        write_volume(path, data)
        raw = path.read_bytes()
        assert raw[:4] == b"HSV1"
        assert np.frombuffer(raw[4:16], "<u4").tolist() == [8, 2, 2]
        np.testing.assert_array_equal(np.frombuffer(raw[16:], "<f8"), np.arange(32))

    def test_truncated_file_names_lengths(self, tmp_path):
        path = tmp_path / "v.hsv"
        write_volume(path, np.ones((8, 4)))
        path.write_bytes(path.read_bytes()[:-3])
        with pytest.raises(FormatError, match=r"expected 272 bytes, got 269"):
            read_volume(path)

    def test_bad_magic_and_short_header(self, tmp_path):
        path = tmp_path / "v.hsv"
        path.write_bytes(b"XXXX" + bytes(12))
        with pytest.raises(FormatError, match="offset 0"):
            read_volume(path)
        path.write_bytes(b"HSV")
        with pytest.raises(FormatError, match="header"):
            read_volume(path)

    @given(st.sampled_from([2, 8, 32]), st.sampled_from([1, 4, 16]), st.integers(0, 99))
    def test_round_trip_property(self, n_xi, n_p, seed):
        import tempfile
        import os

        vol = HSVolume(np.random.default_rng(seed).standard_normal((n_xi, n_p)))
        with tempfile.TemporaryDirectory() as d:
            path = os.path.join(d, "v.hsv")
            write_volume(path, vol)
            assert read_volume(path).data.tobytes() == vol.data.tobytes()


class TestMeasurementFile:
    def _check(self, meas, path):
        write_measurements(path, meas)
        back = read_measurements(path)
        assert back.scheme == meas.scheme and back.mode == meas.mode
        assert back.constrained == meas.constrained
        assert back.amplification == meas.amplification
        np.testing.assert_array_equal(back.values, meas.values)
        np.testing.assert_array_equal(back.plan.draws, meas.plan.draws)
        np.testing.assert_array_equal(back.plan.pmf.probs, meas.plan.pmf.probs)
        assert back.plan.seed == meas.plan.seed
        return back

    def test_ci(self, tmp_path, rng):
        plan = draw_plan(build_pmf_ci(16, 1.0), 7, 3)
        meas = ci_forward(rng.random((16, 4)), plan, 0.1, 4, constrained=True)
        back = self._check(meas, tmp_path / "m.bin")
        assert back.sigma == meas.sigma and back.plan.pmf.alpha == 1.0

    def test_si(self, tmp_path, rng):
        plan = draw_plan(build_pmf_si(16, 4, 2.0), 20, 5)
        self._check(si_forward(rng.random((16, 4)), plan, 0.1, 6), tmp_path / "m.bin")

    def test_dedup(self, tmp_path, rng):
        plan = draw_plan(build_pmf_ci(16, 1.0), 20, 5)
        meas = dedup_ci_forward(nyquist_forward(rng.random((16, 4))), plan, 0.2)
        back = self._check(meas, tmp_path / "m.bin")
        np.testing.assert_array_equal(back.effective.indices, meas.effective.indices)

    def test_optimal_pmf(self, tmp_path, rng):
        plan = draw_plan(build_pmf_optimal(np.linspace(1, 2, 8)), 5, 5)
        back = self._check(ci_forward(rng.random((8, 1)), plan), tmp_path / "m.bin")
        assert back.plan.pmf.alpha is None

    def test_truncated(self, tmp_path, rng):
        path = tmp_path / "m.bin"
        write_measurements(path, ci_forward(rng.random((8, 1)),
                                            draw_plan(build_pmf_ci(8, 1.0), 3, 1)))
        path.write_bytes(path.read_bytes()[:-1])
        with pytest.raises(FormatError, match="expected"):
            read_measurements(path)


class TestReportCsv:
    def test_header_schema(self):
        assert ",".join(REPORT_COLUMNS) == SCHEMA
        assert format_report_csv([]).splitlines()[0] == SCHEMA

    def test_timing_blanked_by_default(self):
        row = dict(scheme="CI", alpha="1.0", ratio=0.5, M=4, M_eff=3, sigma=0.0, epsilon=0.0,
                   constrained=False, metric_name="success", metric_value=1.0, trial=0,
                   seed=9, wall_ms=12.5)
        line = format_report_csv([row]).splitlines()[1]
        assert line == "CI,1.0,0.5,4,3,0.0,0.0,0,success,1.0,0,9,"
        assert format_report_csv([row], include_timing=True).splitlines()[1].endswith(",12.5")

    def test_round_trip(self, tmp_path):
        row = dict(scheme="SI", metric_name="x", metric_value=0.25)
        path = tmp_path / "r.csv"
        write_report_csv(path, [row])
        back = read_report_csv(path)
        assert back[0]["metric_value"] == "0.25" and back[0]["M"] == ""

    def test_rejects_foreign_header(self, tmp_path):
        path = tmp_path / "r.csv"
        path.write_text("a,b\n1,2\n")
        with pytest.raises(FormatError):
            read_report_csv(path)


class TestConfig:
    def test_round_trip_and_comments(self, tmp_path):
        path = tmp_path / "c.cfg"
        write_config(path, {"n-xi": 64, "alpha": 1.0})
        with open(path, "a") as fh:
            fh.write("# comment\n\nseed = 5  # trailing\n")
        assert read_config(path) == {"n_xi": "64", "alpha": "1.0", "seed": "5"}

    def test_malformed(self, tmp_path):
        path = tmp_path / "c.cfg"
        path.write_text("novalue\n")
        with pytest.raises(FormatError, match=":1:"):
            read_config(path)
        path.write_text(" = 3\n")
        with pytest.raises(FormatError):
            read_config(path)
