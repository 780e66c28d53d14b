import csv
import json

import numpy as np
import pytest

from degenop import cli, profiles
from degenop.errors import InconclusiveError


def run(tmp_path, *argv, config=None):
    args = list(argv) + ["--out", str(tmp_path)]
    if config is not None:
        path = tmp_path / "config.json"
        path.write_text(json.dumps(config))
        args += ["--config", str(path)]
    return cli.main(args)


def read_csv(path):
    with open(path) as fh:
        return list(csv.reader(fh))


def test_spectrum(tmp_path, capsys):
    assert run(tmp_path, "spectrum", "--N", "12", config={"eigenfunctions": 2, "grid": 5}) == 0
    rows = read_csv(tmp_path / "spectrum.csv")
    assert rows[0] == ["k", "lambda"] and len(rows) == 13
    lam = [float(r[1]) for r in rows[1:]]
    assert lam == sorted(lam) and lam[0] > 0
    assert read_csv(tmp_path / "eigenfunctions.csv")[0] == ["x", "v1", "v2"]
    out = capsys.readouterr().out
    assert out.startswith("lambda_1=") and "pinned=false" in out


def test_spectrum_beam(tmp_path, capsys):
    assert run(tmp_path, "spectrum", config={"profile": {"kind": "constant"}, "N": 24}) == 0
    lam1 = float(read_csv(tmp_path / "spectrum.csv")[1][1])
    assert abs(lam1 - 4.730040744862704**4) < 1e-6


def test_auto_pin(tmp_path, capsys):
    assert run(tmp_path, "spectrum", "--alpha", "1.5", "--x0", "0.5", "--N", "10") == 0
    assert "pinned=true" in capsys.readouterr().out
    assert len(read_csv(tmp_path / "spectrum.csv")) == 10


def test_strong_unpinned_is_divergence(tmp_path, capsys):
    code = run(tmp_path, "solve", "--alpha", "1.5", "--x0", "0.5", "--pin", "false")
    assert code == cli.EXIT_CODES["divergence"] == 4
    assert "divergence" in capsys.readouterr().err


def test_solve(tmp_path, capsys):
    assert run(tmp_path, "solve", config={"f": "x*(1-x)", "grid": 21, "N": 12}) == 0
    rows = read_csv(tmp_path / "solution.csv")
    assert rows[0] == ["x", "u"] and len(rows) == 22
    assert abs(float(rows[1][1])) < 1e-15
    assert capsys.readouterr().out.startswith("residual=")


def test_evolve(tmp_path, capsys):
    assert run(tmp_path, "evolve", config={"N": 10, "steps": 20}) == 0
    rows = read_csv(tmp_path / "evolution.csv")
    header = rows[0]
    assert header[0] == "t" and header[-2:] == ["energy", "dissipation"]
    assert header[1:4] == ["u[0]", "u[0.1]", "u[0.2]"] and header[-3] == "u[1]"
    assert len(rows) == 22
    energy = np.array([float(r[-2]) for r in rows[1:]])
    assert np.all(np.diff(energy) <= 0)
    assert "energy nonincreasing: true" in capsys.readouterr().out


def test_evolve_forced(tmp_path, capsys):
    cfg = {"N": 10, "steps": 10, "f": "sin(t)*x", "u0": "zero", "profile": {"kind": "power", "alpha": 0.5, "x0": 0.0}}
    assert run(tmp_path, "evolve", config=cfg) == 0
    rows = read_csv(tmp_path / "evolution.csv")
    assert float(rows[1][-2]) == 0.0 and float(rows[-1][-2]) > 0


def test_density_demo(tmp_path, capsys):
    assert run(tmp_path, "density-demo", config={"profile": {"kind": "power", "alpha": 0.5, "x0": 0.0}}) == 0
    rows = read_csv(tmp_path / "density.csv")
    assert rows[0] == ["n", "weighted_error", "second_derivative_error"]
    assert [r[0] for r in rows[1:]] == ["8", "16", "32", "64"]
    # (5976/35) / n to leading order
    assert abs(float(rows[-1][2]) - 2.410210084715247) < 1e-9


def test_quadrature_selftest(tmp_path, capsys):
    assert run(tmp_path, "quadrature-selftest") == 0
    rows = read_csv(tmp_path / "quadrature.csv")
    assert rows[0] == ["level", "value"]
    # int_0^1 |x - 1/2|^(-1/2) dx = 2 sqrt 2
    assert abs(float(rows[-1][1]) - 2.8284271247461903) < 1e-6


def test_operator(tmp_path, capsys):
    assert run(tmp_path, "operator", "--N", "6") == 0
    for name, which in (("stiffness.csv", "stiffness"), ("mass.csv", "weighted_mass")):
        lines = (tmp_path / name).read_text().splitlines()
        assert lines[0].startswith(f"# matrix={which} N=6 n=2 profile=")
        assert lines[1] == "c0,c1,c2,c3,c4,c5" and len(lines) == 8


def test_classify(tmp_path, capsys):
    assert run(tmp_path, "classify", "--alpha", "2", "--x0", "0") == 0
    report = json.loads(capsys.readouterr().out)
    assert report["class"] == "strong"
    assert report["k_exponent"] == pytest.approx(2.0, abs=1e-6)


def test_inconclusive_exit(tmp_path, monkeypatch):
    def refuse(*args, **kw):
        raise InconclusiveError("neither converging nor diverging")

    monkeypatch.setattr(profiles, "classify", refuse)
    assert run(tmp_path, "classify") == cli.EXIT_CODES["inconclusive"] == 3


@pytest.mark.parametrize("config", [
    "{not json", json.dumps({"bogus": 1}), json.dumps({"n": 1}),
    json.dumps({"profile": {"kind": "power", "alpha": -1, "x0": 0.5}}),
])
def test_bad_config(tmp_path, capsys, config):
    path = tmp_path / "bad.json"
    path.write_text(config)
    assert cli.main(["spectrum", "--config", str(path), "--out", str(tmp_path)]) == 2


def test_bad_arguments(tmp_path, capsys):
    assert cli.main(["spectrum", "--pin", "maybe"]) == 2
    assert cli.main(["nonsense"]) == 2
    assert run(tmp_path, "solve", config={"f": "y + 1"}) == 2


def test_config_round_trip():
    cfg = cli.RunConfig(n=3, N=20, pin=True, T=0.5, f="x", seed=7)
    again = cli.RunConfig.from_json(json.loads(json.dumps(cfg.to_json())))
    assert again == cfg


def test_output_dir_from_environment(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("DEGENOP_OUT", str(tmp_path / "env"))
    assert cli.main(["spectrum", "--N", "6"]) == 0
    assert (tmp_path / "env" / "spectrum.csv").exists()


def test_verify_spaces(tmp_path, capsys):
    assert run(tmp_path, "verify", "spaces", "--seed", "1") == 0
    report = json.loads((tmp_path / "verify.json").read_text())
    assert report["overall"] == "pass"
    assert all(c["check_id"].startswith(("hardy:", "jensen:", "spaces:")) for c in report["checks"])
