"""End-to-end tests of the command-line interface."""

import csv
import json
import logging

import pytest

from mild_descent.cli import main
from mild_descent.utils.artifacts import sha256_file

SMALL = "n_space = 32\ndt = 0.01\nn_intervals = 10\nouter_iters = 2\n"


@pytest.fixture(autouse=True)
def restore_logging():
    root = logging.getLogger()
    saved = (list(root.handlers), root.level)
    yield
    root.handlers[:] = saved[0]
    root.setLevel(saved[1])


@pytest.fixture
def config_file(tmp_path):
    path = tmp_path / "small.toml"
    path.write_text(SMALL + f'output_dir = "{(tmp_path / "out").as_posix()}"\n')
    return path


def _costs(directory):
    with open(directory / "cost_history.csv", newline="") as f:
        return [float(row["cost"]) for row in csv.DictReader(f)]


def test_no_command_prints_help(capsys):
    assert main([]) == 0
    assert "mild-descent" in capsys.readouterr().out


def test_reproduce_writes_artifacts(config_file, tmp_path, capsys):
    assert main(["reproduce", "-c", str(config_file), "-q"]) == 0
    out = tmp_path / "out"
    costs = _costs(out)
    assert len(costs) == 3
    assert costs == sorted(costs, reverse=True)
    for k in range(3):
        with open(out / f"control_iter{k}.csv", newline="") as f:
            rows = list(csv.reader(f))
        assert rows[0] == ["t_start", "t_end", "u1", "u2"]
        assert len(rows) == 11
        assert len((out / f"terminal_profile_iter{k}.csv").read_text().splitlines()) == 33
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["command"] == "reproduce"
    assert manifest["config.n_space"] == 32
    assert manifest["summary.iterations"] == 2
    assert manifest["summary.steps_per_interval"] == 20
    assert manifest["file.manifest.json"] == "self"
    files = {key[5:] for key in manifest if key.startswith("file.")}
    assert files == {p.name for p in out.iterdir()}
    for name in files - {"manifest.json"}:
        assert manifest[f"file.{name}"] == sha256_file(out / name)
    assert "reproduce: 2 iteration(s)" in capsys.readouterr().out


def test_reproduce_is_deterministic(config_file, tmp_path):
    first, second = tmp_path / "a", tmp_path / "b"
    assert main(["reproduce", "-c", str(config_file), "-o", str(first), "-q"]) == 0
    assert main(["reproduce", "-c", str(config_file), "-o", str(second), "-q"]) == 0
    for name in ("cost_history.csv", "control_iter2.csv", "terminal_profile_iter2.csv"):
        assert (first / name).read_bytes() == (second / name).read_bytes()


def test_reproduce_json(config_file, capsys):
    assert main(["reproduce", "-c", str(config_file), "--iters", "1", "-q", "--json"]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["iterations"] == 1
    assert len(payload["cost_history"]) == 2
    assert "manifest.json" in payload["files"]


def test_increment_of_identical_files(config_file, tmp_path, capsys):
    main(["reproduce", "-c", str(config_file), "--iters", "1", "-q"])
    capsys.readouterr()
    control = tmp_path / "out" / "control_iter1.csv"
    assert main(["increment", str(control), str(control), "-c", str(config_file), "-q", "--direct"]) == 0
    assert capsys.readouterr().out == "0\n0\n"


def test_increment_matches_direct(config_file, tmp_path, capsys):
    main(["reproduce", "-c", str(config_file), "--iters", "1", "-q"])
    capsys.readouterr()
    out = tmp_path / "out"
    args = ["increment", str(out / "control_iter0.csv"), str(out / "control_iter1.csv")]
    assert main(args + ["-c", str(config_file), "-q", "--json", "--direct"]) == 0
    payload = json.loads(capsys.readouterr().out)
    costs = _costs(out)
    assert payload["direct"] == pytest.approx(costs[1] - costs[0], rel=1e-12)
    assert payload["increment"] == pytest.approx(payload["direct"], rel=0.1)


def test_config_error_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.toml"
    bad.write_text("nu = -1.0\n")
    assert main(["reproduce", "-c", str(bad)]) == 2
    err = capsys.readouterr().err.strip().splitlines()
    assert err[-1] == "error: code=config message=nu must be > 0"


def test_missing_init_control(config_file, tmp_path, capsys):
    code = main(["descend", "-c", str(config_file), "--init-control", str(tmp_path / "none.csv"), "-q"])
    assert code == 1
    assert capsys.readouterr().err.startswith("error: code=artifact message=cannot read control file")


def test_descend_needs_config():
    with pytest.raises(SystemExit) as info:
        main(["descend"])
    assert info.value.code == 2


def test_descend_warm_start(config_file, tmp_path, capsys):
    main(["reproduce", "-c", str(config_file), "-q"])
    previous = _costs(tmp_path / "out")
    warm = tmp_path / "warm"
    control = tmp_path / "out" / "control_iter2.csv"
    assert main(["descend", "-c", str(config_file), "-o", str(warm), "--init-control", str(control), "-q"]) == 0
    costs = _costs(warm)
    assert costs[0] == pytest.approx(previous[-1], rel=1e-14)
    assert costs[-1] <= costs[0]
    assert json.loads((warm / "manifest.json").read_text())["command"] == "descend"


def test_verify_json(config_file, capsys):
    code = main(["verify", "-c", str(config_file), "--draws", "1", "-q", "--json"])
    payload = json.loads(capsys.readouterr().out)
    assert code == 0
    assert payload["passed"]
    assert [r["name"] for r in payload["checks"] if not r["passed"]] == []
    checks = {r["name"]: r for r in payload["checks"]}
    assert checks["minimizer violations"]["value"] == 0.0
    assert checks["monotonicity rejections"]["value"] == 0.0
    assert checks["integrator order error"]["value"] <= 0.15
    assert all(set(r) == {"name", "value", "threshold", "passed", "detail"} for r in payload["checks"])


def test_negative_seed_is_config_error(tmp_path, capsys):
    bad = tmp_path / "seed.toml"
    bad.write_text("seed = -1\n")
    assert main(["verify", "-c", str(bad)]) == 2
    err = capsys.readouterr().err.strip().splitlines()
    assert err[-1] == "error: code=config message=seed must be >= 0"


def test_example_config(tmp_path, capsys):
    assert main(["example-config"]) == 0
    assert "# T = 2.0" in capsys.readouterr().out
    target = tmp_path / "cfg" / "run.toml"
    assert main(["example-config", "--output", str(target)]) == 0
    assert target.read_text().startswith("# mild-descent run configuration")


@pytest.mark.parametrize("shell", ["bash", "zsh", "fish"])
def test_completions(shell, capsys):
    assert main(["completions", shell]) == 0
    out = capsys.readouterr().out
    assert "reproduce" in out
    assert "increment" in out
