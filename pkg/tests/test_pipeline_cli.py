import numpy as np
import pytest

from tdsampling import StageError
from tdsampling.cli import main
from tdsampling.config import load_config_text
from tdsampling.pipeline import run_pipeline

SMALL = """\
sources:
  - {type: point, location: [0.5, 0.0, 0.0], intensity: 2}
  - {type: point, location: [-1.0, 1.0, 0.0], intensity: 3}
grid: {lower: [-2, -2, -2], upper: [2, 2, 2], n: 17}
noise: {level: 0.0, seed: 0}
peaks: {threshold: 1.0}
"""

CURVE = """\
sources:
  - {type: curve, x1: "t", x2: "t**2 - 1", x3: "0", range: [-1, 1], intensity: "2"}
grid: {lower: [-2, -2, -2], upper: [2, 2, 2], n: 21}
recover: {abscissa: 1, ordinate: 2}
"""


@pytest.fixture
def small_cfg(tmp_path):
    p = tmp_path / "small.yaml"
    p.write_text(SMALL)
    return p


def test_pipeline_point_mode(tmp_path):
    cfg = load_config_text(SMALL)
    rep = run_pipeline(cfg, tmp_path / "run")
    assert len(rep.peaks) == 2
    order = np.argsort(rep.peaks.locations[:, 0])
    np.testing.assert_allclose(rep.peaks.locations[order], [[-1, 1, 0], [0.5, 0, 0]])
    np.testing.assert_allclose(rep.intensities.intensities[order], [3.0, 2.0], rtol=1e-8)
    names = sorted(p.name for p in (tmp_path / "run").iterdir())
    assert names == sorted(
        ["field.csv", "indicator.csv", "peaks.csv", "report.txt", "slice_1_8.pgm", "slice_2_8.pgm", "slice_3_8.pgm"]
    )
    text = (tmp_path / "run" / "report.txt").read_text()
    assert "peaks found: 2" in text and "nearest actual source" in text
    assert set(rep.timings) >= {"simulate", "indicator", "peaks", "intensities", "export"}


def test_pipeline_curve_mode_structure():
    # accuracy on the default grid is covered by the acceptance run; the
    # coarse grid here only exercises the curve branch of the pipeline
    cfg = load_config_text(CURVE)
    rep = run_pipeline(cfg, write=False)
    assert rep.intensities is None
    c = rep.curves
    assert len(c.branches) >= 1
    assert len(c.fits) == len(c.selected) == len(c.branches)
    for fits, best in zip(c.fits, c.selected):
        assert best is None or any(best is f for f in fits)
    used = set(np.concatenate([b.members for b in c.branches]).tolist()) | set(c.leftover.members.tolist())
    assert used == set(range(len(rep.peaks)))


# a source placed exactly on the first sensor of the default array
ON_SENSOR = SMALL.replace("[0.5, 0.0, 0.0]", "[0.490085701647803, 0.0, 4.975923633360985]")


def test_stage_error_names_stage(tmp_path):
    with pytest.raises(StageError) as info:
        run_pipeline(load_config_text(ON_SENSOR), tmp_path)
    assert info.value.stage == "simulate"


def test_cli_simulate_writes_full_field(tmp_path, small_cfg, capsys):
    assert main(["simulate", "--config", str(small_cfg), "--out", str(tmp_path)]) == 0
    lines = (tmp_path / "field.csv").read_text().splitlines()
    assert len(lines) == 1 + 256 * 65


def test_cli_half_aperture_and_chain(tmp_path, small_cfg, capsys):
    out = str(tmp_path)
    assert main(["simulate", "--config", str(small_cfg), "--out", out, "--sensors", "half", "--noise-level", "0.05", "--seed", "3"]) == 0
    assert len((tmp_path / "field.csv").read_text().splitlines()) == 1 + 144 * 65
    assert main(["reconstruct", "--config", str(small_cfg), "--out", out, "--sensors", "half"]) == 0
    assert (tmp_path / "peaks.csv").exists() and (tmp_path / "indicator.csv").exists()
    assert main(["recover", "--config", str(small_cfg), "--out", out, "--sensors", "half"]) == 0
    rows = (tmp_path / "intensities.csv").read_text().splitlines()
    assert rows[0] == "rank,z1,z2,z3,intensity" and len(rows) >= 2


def test_cli_fit_without_config(tmp_path, capsys):
    x = np.linspace(-1, 1, 9)
    lines = ["rank,z1,z2,z3,I"] + [f"{k + 1},{float(v)!r},{float(v * v - 1)!r},0.0,1.0" for k, v in enumerate(x)]
    (tmp_path / "peaks.csv").write_text("\n".join(lines) + "\n")
    assert main(["fit", "--out", str(tmp_path)]) == 0
    report = (tmp_path / "fit_report.txt").read_text()
    assert "branch 1: 9 points" in report


def test_cli_pipeline_prints_report(tmp_path, small_cfg, capsys):
    assert main(["pipeline", "--config", str(small_cfg), "--out", str(tmp_path), "--jobs", "2"]) == 0
    assert "peaks found: 2" in capsys.readouterr().out


def test_cli_config_error_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.yaml"
    bad.write_text(SMALL + "grid: {n: 1}\n")
    assert main(["pipeline", "--config", str(bad), "--out", str(tmp_path)]) == 2
    assert "config-error" in capsys.readouterr().err
    assert main(["pipeline", "--config", str(tmp_path / "nope.yaml")]) == 2


def test_cli_numeric_error_exit_code(tmp_path, capsys):
    bad = tmp_path / "near.yaml"
    bad.write_text(ON_SENSOR)
    assert main(["pipeline", "--config", str(bad), "--out", str(tmp_path)]) == 3
    assert "stage 'simulate'" in capsys.readouterr().err


def test_cli_missing_input_file(tmp_path, small_cfg, capsys):
    assert main(["reconstruct", "--config", str(small_cfg), "--out", str(tmp_path / "empty")]) == 3


def test_cli_lemma_check(capsys):
    assert main(["lemma-check", "--n-random", "2", "--seed", "1"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert len(out) == 5 and all(line.startswith("PASS") for line in out)


def test_cli_lemma_check_failure_exit_code(capsys):
    # a very wide regularization cannot reach the tolerance
    assert main(["lemma-check", "--n-random", "1", "--width", "0.5"]) == 1
