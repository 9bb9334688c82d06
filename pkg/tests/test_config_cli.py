"""Configuration parsing and the command-line front end."""

import numpy as np
import pytest

import semilag as sl
from semilag.cli import main
from semilag.config import build_run_config, parse_config_text

BASE = """
model.name = schrodinger
lattice.k = 0.05
lattice.lo = -1
lattice.hi = 1
time.T = 0.2
time.h = 0.1
initial.u0 = quadratic
"""


def test_parse_rejects_unknown_key():
    with pytest.raises(sl.ConfigError, match="unknown key 'model.nmae'"):
        parse_config_text("model.nmae = schrodinger")


def test_parse_rejects_duplicates_and_garbage():
    with pytest.raises(sl.ConfigError, match="duplicate"):
        parse_config_text("seed = 1\nseed = 2")
    with pytest.raises(sl.ConfigError, match="key = value"):
        parse_config_text("just words")


def test_comments_and_blanks_ignored():
    raw = parse_config_text("# a comment\n\nseed = 4  # trailing\n")
    assert raw == {"seed": "4"}


def test_build_validates_fields():
    raw = parse_config_text(BASE)
    cfg = build_run_config(raw)
    assert cfg.N == 2
    assert cfg.epsilon() == pytest.approx(0.1 ** 0.5)
    for bad, msg in [
        ("model.name = nope", "model.name"),
        ("lattice.k = -1", "lattice.k"),
        ("mollify.alpha = 1.5", "mollify.alpha"),
        ("hj.xi_points = 10", "xi_points"),
        ("initial.measure = bogus", "initial.measure"),
        ("time.N = 3", "exactly one"),
    ]:
        text = BASE + bad + "\n"
        with pytest.raises(sl.ConfigError, match=msg):
            build_run_config(parse_config_text(text))


def test_measure_descriptions():
    cfg = build_run_config(parse_config_text(BASE + "initial.measure = uniform:-1,1\n"))
    from semilag.config import build_measure

    desc = build_measure(cfg)
    assert isinstance(desc, sl.PiecewiseConstant)
    cfg2 = build_run_config(parse_config_text(
        BASE + "initial.measure = atoms:0.5:1.0;-0.25:2\n"))
    atoms = build_measure(cfg2)
    assert isinstance(atoms, sl.Atoms) and len(atoms.atoms) == 2


def test_expression_u0():
    cfg = build_run_config(parse_config_text(BASE.replace(
        "initial.u0 = quadratic", "initial.u0 = expr:np.sin(x0)")))
    from semilag.config import build_u0

    f = build_u0(cfg)
    x = np.array([[0.3]])
    assert f(x)[0] == pytest.approx(np.sin(0.3))


def _write(tmp_path, text, name="run.cfg"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def test_cli_solve_hj_success(tmp_path):
    cfg = _write(tmp_path, BASE)
    out = tmp_path / "out"
    assert main(["solve-hj", "--config", cfg, "--out", str(out)]) == 0
    assert (out / "final_field.csv").exists()
    assert (out / "diagnostics.csv").exists()
    assert (out / "manifest.txt").exists()
    assert (out / "final_field.svg").exists()


def test_cli_n_zero_echoes_initial(tmp_path):
    text = BASE.replace("time.T = 0.2", "time.T = 0.0").replace("time.h = 0.1", "time.N = 0")
    cfg = _write(tmp_path, text)
    out = tmp_path / "out0"
    assert main(["solve-hj", "--config", cfg, "--out", str(out)]) == 0
    rows = (out / "final_field.csv").read_text().splitlines()[1:]
    for row in rows:
        _, x, v = row.split(",")
        assert float(v) == pytest.approx(0.5 * float(x) ** 2, abs=1e-12)


def test_cli_config_error_exit_2(tmp_path):
    cfg = _write(tmp_path, BASE + "bogus.key = 1\n")
    assert main(["solve-hj", "--config", cfg, "--out", str(tmp_path / "x")]) == 2
    assert main(["solve-hj", "--config", str(tmp_path / "missing.cfg"),
                 "--out", str(tmp_path / "x")]) == 2


def test_cli_epsilon_rule_exit_2(tmp_path, capsys):
    text = BASE + "initial.measure = uniform:-1,1\nmollify.epsilon = 0.02\n"
    cfg = _write(tmp_path, text)
    assert main(["solve-system", "--config", cfg, "--out", str(tmp_path / "x")]) == 2
    assert "mollifier resolution" in capsys.readouterr().err


def test_cli_guard_exit_3(tmp_path):
    # eps barely legal but far too small for the contraction guard
    text = (BASE.replace("lattice.k = 0.05", "lattice.k = 0.01")
            + "initial.measure = uniform:-1,1\nmollify.epsilon = 0.02\n")
    cfg = _write(tmp_path, text)
    assert main(["solve-system", "--config", cfg, "--out", str(tmp_path / "x")]) == 3


def test_cli_solve_system_success(tmp_path):
    text = (BASE.replace("initial.u0 = quadratic", "initial.u0 = neg-abs")
            + "initial.measure = uniform:-0.5,0.5\n")
    cfg = _write(tmp_path, text)
    out = tmp_path / "sys"
    assert main(["solve-system", "--config", cfg, "--out", str(out)]) == 0
    ledger = (out / "mass_ledger.csv").read_text().splitlines()
    assert ledger[0] == "t,mass,drift"
    assert abs(float(ledger[1].split(",")[2])) <= 1e-12
    assert (out / "concentration.csv").exists()
    assert (out / "trajectories.csv").exists()


def test_cli_identity_scenario_measure_unchanged(tmp_path):
    # constant u0: zero velocity everywhere, so the measure never moves
    text = (BASE.replace("initial.u0 = quadratic", "initial.u0 = expr:0.0*x0")
            + "initial.measure = atoms:0.25:1.0\n")
    cfg = _write(tmp_path, text)
    out = tmp_path / "ident"
    assert main(["solve-system", "--config", cfg, "--out", str(out)]) == 0
    rows = (out / "measure_n2.csv").read_text().splitlines()[1:]
    assert len(rows) == 1
    _, x, w = rows[0].split(",")
    assert float(x) == pytest.approx(0.25)
    assert float(w) == pytest.approx(1.0)


def test_cli_study_single_level_no_regression(tmp_path):
    cfg = _write(tmp_path, BASE)
    out = tmp_path / "study1"
    assert main(["study", "--config", cfg, "--out", str(out), "--levels", "1"]) == 0
    rows = (out / "rates.csv").read_text().splitlines()
    assert len(rows) == 2  # header + one level
    manifest = (out / "manifest.txt").read_text()
    assert "sup_error_slope" not in manifest


def test_cli_determinism_byte_identical(tmp_path):
    text = (BASE.replace("initial.u0 = quadratic", "initial.u0 = neg-abs")
            + "initial.measure = uniform:-0.5,0.5\nseed = 42\n")
    cfg = _write(tmp_path, text)
    outs = []
    for name in ("a", "b"):
        out = tmp_path / name
        assert main(["solve-system", "--config", cfg, "--out", str(out)]) == 0
        outs.append(out)
    for f in sorted(p.name for p in outs[0].iterdir()):
        assert (outs[0] / f).read_bytes() == (outs[1] / f).read_bytes()
