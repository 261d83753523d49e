import csv
import subprocess
import sys

import numpy as np
import pytest

from cfti.cli import main
from cfti.io import REPORT_COLUMNS, read_measurements, read_volume
from cfti.recon import rsnr
from cfti.sampling import build_pmf_ci


def rows_of(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


@pytest.fixture
def volume(tmp_path):
    path = tmp_path / "vol.hsv"
    assert main(["gen-volume", "--n-xi", "64", "--side", "4", "--seed", "1",
                 "--out", str(path)]) == 0
    return path


def test_gen_volume(volume, tmp_path):
    vol = read_volume(volume)
    assert vol.data.shape == (64, 16) and np.all(vol.data >= 0)
    other = tmp_path / "ph.hsv"
    assert main(["gen-volume", "--kind", "phantom", "--n-xi", "32", "--side", "2",
                 "--out", str(other)]) == 0
    assert read_volume(other).data.shape == (32, 4)


def test_gen_volume_is_deterministic(volume, tmp_path):
    again = tmp_path / "again.hsv"
    main(["gen-volume", "--n-xi", "64", "--side", "4", "--seed", "1", "--out", str(again)])
    assert again.read_bytes() == volume.read_bytes()


def test_pmf_csv(tmp_path):
    out = tmp_path / "pmf.csv"
    assert main(["pmf", "--scheme", "ci", "--n-xi", "8", "--alpha", "1", "--out", str(out)]) == 0
    rows = rows_of(out)
    assert rows[0] == ["index", "probability"]
    probs = np.array([float(r[1]) for r in rows[1:]])
    np.testing.assert_array_equal(probs, build_pmf_ci(8, 1.0).probs)


def test_coherence_csv(tmp_path):
    out = tmp_path / "coh.csv"
    assert main(["coherence", "--n-xi", "8", "--out", str(out)]) == 0
    rows = rows_of(out)
    assert rows[0] == ["index", "kappa", "exact_mu", "kappa_sq_norm"]
    assert float(rows[4][2]) == pytest.approx(1.0)
    assert all(float(r[1]) >= float(r[2]) - 1e-12 for r in rows[1:])


def test_noise_bound_csv(tmp_path):
    out = tmp_path / "nb.csv"
    assert main(["noise-bound", "--n-xi", "64", "--m", "8,32", "--out", str(out)]) == 0
    rows = rows_of(out)
    assert rows[0] == ["M", "epsilon_analytic", "epsilon_empirical"]
    assert [r[0] for r in rows[1:]] == ["8", "32"]
    assert all(float(r[1]) >= float(r[2]) for r in rows[1:])


@pytest.mark.parametrize("extra", [[], ["--constrained"], ["--scheme", "si", "--constrained"],
                                   ["--dedup"]])
def test_simulate_and_reconstruct(volume, tmp_path, extra):
    meas_path = tmp_path / "m.bin"
    m = "320" if "si" in extra else "24"
    assert main(["simulate", "--vol", str(volume), "--m", m, "--sigma", "0.01",
                 "--seed", "3", "--out", str(meas_path)] + extra) == 0
    meas = read_measurements(meas_path)
    assert meas.constrained == ("--constrained" in extra)
    truth = read_volume(volume)
    scores = {}
    for method in ("cs", "me"):
        out = tmp_path / f"{method}.hsv"
        prior = ["--prior", "3d"] if "si" in extra else []
        assert main(["reconstruct", "--meas", str(meas_path), "--method", method, "--real",
                     "--out", str(out)] + prior) == 0
        scores[method] = rsnr(truth, read_volume(out))
    assert scores["cs"] > 0 and scores["me"] > 0


def test_reconstruct_with_explicit_epsilon(volume, tmp_path):
    meas_path = tmp_path / "m.bin"
    main(["simulate", "--vol", str(volume), "--m", "32", "--sigma", "0.05", "--out",
          str(meas_path)])
    out = tmp_path / "cs.hsv"
    assert main(["reconstruct", "--meas", str(meas_path), "--epsilon", "0.5", "--real",
                 "--out", str(out)]) == 0
    assert read_volume(out).data.shape == (64, 16)


def test_nonconvergence_is_reported(volume, tmp_path, capsys):
    meas_path = tmp_path / "m.bin"
    main(["simulate", "--vol", str(volume), "--m", "32", "--out", str(meas_path)])
    code = main(["reconstruct", "--meas", str(meas_path), "--epsilon", "0", "--max-iter", "5",
                 "--out", str(tmp_path / "cs.hsv")])
    assert code == 3
    assert "unconverged columns" in capsys.readouterr().err


def test_phase_transition_is_byte_identical(tmp_path):
    outs = []
    for k in range(2):
        out = tmp_path / f"pt{k}.csv"
        assert main(["phase-transition", "--scheme", "ci", "--n-xi", "32", "--n-p", "4",
                     "--k-xi", "2", "--k-p", "2", "--alphas", "1,opt", "--ratios", "0.5,1",
                     "--trials", "2", "--out", str(out)]) == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]
    header = outs[0].decode().splitlines()[0]
    assert header == ",".join(REPORT_COLUMNS)


def test_exposure_sweep_and_timing(tmp_path):
    out = tmp_path / "ex.csv"
    assert main(["exposure-sweep", "--n-xi", "64", "--side", "2", "--ratios", "0.5",
                 "--trials", "1", "--timing", "--out", str(out)]) == 0
    rows = rows_of(out)
    cs = [r for r in rows[1:] if r[8] == "rsnr_cs"]
    assert cs and all(r[12] for r in cs)


def test_dedup_pipeline_with_truth(volume, tmp_path):
    out = tmp_path / "dd.csv"
    assert main(["dedup-pipeline", "--vol", str(volume), "--intensities", "100,200",
                 "--trials", "1", "--out", str(out)]) == 0
    names = {r[8] for r in rows_of(out)[1:]}
    assert {"rsnr_norm_cs", "mean_rsnr_norm_cs", "m_eff_ratio"} <= names


def test_config_file(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("n-xi = 16\nalpha = 0\n")
    out = tmp_path / "pmf.csv"
    assert main(["pmf", "--config", str(cfg), "--out", str(out)]) == 0
    probs = [float(r[1]) for r in rows_of(out)[1:]]
    assert probs == [1 / 16] * 16


def test_config_rejects_unknown_keys(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("bogus = 1\n")
    with pytest.raises(SystemExit):
        main(["pmf", "--config", str(cfg)])


def test_errors_return_code(tmp_path, capsys):
    assert main(["pmf", "--n-xi", "12", "--out", str(tmp_path / "x.csv")]) == 2
    assert "power of two" in capsys.readouterr().err
    missing = tmp_path / "nope.hsv"
    assert main(["simulate", "--vol", str(missing), "--m", "4", "--out",
                 str(tmp_path / "m.bin")]) == 2


def test_binary_outputs_need_a_path(volume):
    with pytest.raises(SystemExit):
        main(["simulate", "--vol", str(volume), "--m", "4"])


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "cfti", "--help"], capture_output=True,
                          text=True, check=True)
    for name in ("gen-volume", "phase-transition", "dedup-pipeline"):
        assert name in proc.stdout
