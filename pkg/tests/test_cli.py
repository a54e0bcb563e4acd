import json
import math

import numpy as np
import pytest

from timebin_sfg.cli import main
from timebin_sfg.config import default_config_text
from timebin_sfg.pulse import fwhm_wavelength_to_sigma


def run(tmp_path, *args):
    return main([*args, "--out", str(tmp_path)])


def test_bounds_default(tmp_path):
    assert run(tmp_path, "bounds") == 0
    report = json.loads((tmp_path / "bounds.json").read_text())
    assert 0.19 <= report["lower_ps"] <= 0.20
    assert 13.5 <= report["upper_ps"] <= 14.5
    assert report["valid"]


def test_bounds_wide_spacing(tmp_path):
    assert run(tmp_path, "bounds", "--tau-ps", "20") == 0
    report = json.loads((tmp_path / "bounds.json").read_text())
    assert report["interferes"] is False and report["valid"] is False


def test_spectrum_outputs(tmp_path):
    assert run(tmp_path, "spectrum") == 0
    peaks = json.loads((tmp_path / "peaks.json").read_text())
    assert peaks["resolved_peaks"] == 3
    assert 0.136 <= peaks["side_displacement_nm"]["numeric"] <= 0.138
    head = (tmp_path / "spectrum_numeric.csv").read_text().splitlines()[:2]
    assert head[0].startswith("# fingerprint=")
    assert head[1] == "wavelength_nm,angular_frequency_rad_s,intensity_normalized"


def test_spectrum_zero_spacing_single_peak(tmp_path):
    assert run(tmp_path, "spectrum", "--tau-ps", "0", "--format", "json") == 0
    assert json.loads((tmp_path / "peaks.json").read_text())["resolved_peaks"] == 1
    assert (tmp_path / "spectrum_analytic.json").exists()


def test_regime_error_exit_code(tmp_path):
    sigma = fwhm_wavelength_to_sigma(810.4e-9, 4.53e-9)
    chirp_fs2 = math.sqrt(5.0) / sigma**2 / 1e-30
    text = default_config_text().replace("670e3", f"{chirp_fs2!r}")
    cfg = tmp_path / "weak.toml"
    cfg.write_text(text)
    assert run(tmp_path, "spectrum", "--config", str(cfg)) == 3


def test_config_error_exit_code(tmp_path, capsys):
    cfg = tmp_path / "broken.toml"
    cfg.write_text("[photon]\ncenter_wavelength_nm = 'x'\n")
    assert run(tmp_path, "bounds", "--config", str(cfg)) == 2
    assert "input error" in capsys.readouterr().err


def test_malformed_counts_exit_code(tmp_path, capsys):
    counts = tmp_path / "counts.csv"
    counts.write_text("setting_index,idler_label,signal_label,counts\n0,H,e,5\n1,H,l,abc\n")
    assert run(tmp_path, "tomo", "--counts", str(counts)) == 2
    assert "counts.csv:3:" in capsys.readouterr().err


@pytest.mark.parametrize("v, expected, violation", [(1.0, 2.8284, True), (0.893, 2.526, True), (0.6, 1.697, False)])
def test_chsh_noiseless(tmp_path, v, expected, violation):
    assert run(tmp_path, "chsh", "--noiseless", "--visibility", str(v)) == 0
    report = json.loads((tmp_path / "chsh.json").read_text())
    assert report["S_noiseless"] == pytest.approx(expected, abs=1e-3)
    assert report["violation"] is violation


def test_fringe_noiseless(tmp_path):
    assert run(tmp_path, "fringe", "--noiseless") == 0
    report = json.loads((tmp_path / "fringe_fit.json").read_text())
    assert [c["visibility"] for c in report["curves"]] == pytest.approx([0.893] * 4, abs=5e-3)


def test_fringe_unit_visibility(tmp_path):
    assert run(tmp_path, "fringe", "--noiseless", "--visibility", "1") == 0
    report = json.loads((tmp_path / "fringe_fit.json").read_text())
    assert report["mean_visibility"] == pytest.approx(1.0, abs=1e-9)


def test_tomo_simulate_noiseless_and_reload(tmp_path):
    assert run(tmp_path, "tomo", "--simulate", "--noiseless", "--visibility", "1", "--resamples", "0") == 0
    first = json.loads((tmp_path / "density_matrix.json").read_text())
    assert first["fidelity_phi_tilde_plus"] > 0.999
    out2 = tmp_path / "again"
    assert main(["tomo", "--counts", str(tmp_path / "tomo_counts.csv"), "--resamples", "0", "--out", str(out2)]) == 0
    second = json.loads((out2 / "density_matrix.json").read_text())
    np.testing.assert_allclose(second["real"], first["real"], atol=1e-9)


def test_reruns_are_byte_identical(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        assert main(["fringe", "--seed", "7", "--out", str(out)]) == 0
        assert main(["chsh", "--seed", "7", "--resamples", "50", "--out", str(out)]) == 0
        assert main(["tomo", "--simulate", "--seed", "7", "--resamples", "5", "--out", str(out)]) == 0
    for name in ("fringe_counts.csv", "fringe_singles.csv", "fringe_fit.json", "chsh.json",
                 "tomo_counts.csv", "density_matrix.json"):
        assert (a / name).read_bytes() == (b / name).read_bytes(), name


def test_seed_changes_counts(tmp_path):
    main(["fringe", "--seed", "1", "--out", str(tmp_path / "a")])
    main(["fringe", "--seed", "2", "--out", str(tmp_path / "b")])
    assert (tmp_path / "a" / "fringe_counts.csv").read_text() != (tmp_path / "b" / "fringe_counts.csv").read_text()


def test_unknown_command_is_usage_error():
    with pytest.raises(SystemExit) as exc:
        main(["nope"])
    assert exc.value.code == 2


def test_out_path_is_file(tmp_path):
    f = tmp_path / "file"
    f.write_text("")
    assert main(["bounds", "--out", str(f)]) == 2
