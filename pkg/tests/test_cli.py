import pytest

from nmrqsd import cli, experiment as exp


def test_run_and_config_file(tmp_path, capsys):
    cfg = tmp_path / "sim.cfg"
    cfg.write_text("frame = rotating\nsteps = 40\n")
    assert cli.main(["run", "--config", str(cfg), "--beta", "0.2", "--out-dir", str(tmp_path), "--name", "x"]) == 0
    text = (tmp_path / "x.csv").read_text().splitlines()
    assert text[0] == exp.CSV_HEADER and len(text) == 42
    assert "median_my_abs_re" in capsys.readouterr().out


@pytest.mark.parametrize(
    "argv",
    [
        ["run", "--alpha", "0.3", "--beta", "0.7", "--seed", "5"],
        ["reproduce-figures", "--steps", "60", "--seed", "5"],
        ["sweep", "--steps", "60", "--seed", "5", "--pairs", "1,0;0.3,0.7"],
        ["compare-oracle", "--trajectories", "150", "--steps", "100", "--seed", "5"],
    ],
)
def test_subcommands_are_byte_reproducible(tmp_path, argv):
    outputs = []
    for sub in ("a", "b"):
        out = tmp_path / sub
        assert cli.main(argv + ["--out-dir", str(out)]) == 0
        outputs.append({p.name: p.read_bytes() for p in sorted(out.glob("*.csv"))})
    assert outputs[0] and outputs[0] == outputs[1]


def test_config_error_exit_code(tmp_path, capsys):
    assert cli.main(["run", "--alpha", "3", "--steps", "0", "--out-dir", str(tmp_path)]) == cli.EXIT_CONFIG
    err = capsys.readouterr().err
    assert "alpha" in err and "steps" in err
    assert cli.main(["compare-oracle", "--trajectories", "10"]) == cli.EXIT_CONFIG
    assert cli.main(["sweep", "--pairs", "1;2", "--out-dir", str(tmp_path)]) == cli.EXIT_CONFIG


def test_io_error_exit_code(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    assert cli.main(["run", "--steps", "5", "--out-dir", str(blocker / "sub")]) == cli.EXIT_IO


def test_numerical_failure_exit_code(tmp_path, monkeypatch):
    from nmrqsd.qsd import DegenerateTrajectoryError

    def degenerate(*args, **kwargs):
        raise DegenerateTrajectoryError("norm collapsed")

    monkeypatch.setattr(exp, "simulate", degenerate)
    assert cli.main(["run", "--out-dir", str(tmp_path)]) == cli.EXIT_NUMERICAL


def test_default_config_printed(capsys):
    assert cli.main(["default-config"]) == 0
    assert "steps = 500" in capsys.readouterr().out
