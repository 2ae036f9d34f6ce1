import os
import subprocess
import sys

import numpy as np
import pytest

from thermoport.cli import EXIT_FAIL, EXIT_INPUT, EXIT_OK, main
from thermoport.config import loads
from thermoport.dynamics import Trajectory
from thermoport.errors import ConfigError

CONFIGS = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "configs")


def _cfg(name):
    return os.path.join(CONFIGS, name)


def _run(tmp_path, *argv):
    out = tmp_path / "out"
    code = main(list(argv) + ["--out", str(out)])
    return code, out


def _report(out):
    return (out / "report.txt").read_text()


def test_simulate_heat_exchanger(tmp_path):
    code, out = _run(tmp_path, "simulate", "--config", _cfg("heat_exchanger.toml"))
    assert code == EXIT_OK
    rep = _report(out)
    for key in ("E drift min", "E drift max", "min sigma", "max residual_on", "equilibrium: PASS",
                "conservation: PASS", "laws: PASS", "clausius: PASS"):
        assert key in rep
    tr = Trajectory.from_tsv(str(out / "trajectory.tsv"))
    assert tr.times[-1] == pytest.approx(10.0)
    assert abs(np.exp(tr.z[-1, 1]) - np.exp(tr.z[-1, 2])) <= 1e-6
    assert np.min(tr.sigma) >= 0.0


def test_simulate_lossless_msd(tmp_path):
    code, out = _run(tmp_path, "simulate", "--config", _cfg("msd_lossless.toml"))
    assert code == EXIT_OK
    assert "cyclo-lossless: PASS" in _report(out)


@pytest.mark.parametrize("name", ["msd_driven.toml", "msd_composite.toml"])
def test_simulate_other_scenarios(tmp_path, name):
    code, out = _run(tmp_path, "simulate", "--config", _cfg(name))
    assert code == EXIT_OK, _report(out)
    assert (out / "trajectory.tsv").exists()


def test_overrides(tmp_path):
    code, out = _run(tmp_path, "simulate", "--config", _cfg("msd_driven.toml"), "--tend", "0.5", "--dt", "0.002")
    assert code == EXIT_OK
    rep = _report(out)
    assert "t_end: 0.5" in rep
    assert "samples: 251" in rep


def test_deterministic_outputs(tmp_path):
    a = main(["check", "--config", _cfg("msd_composite.toml"), "--out", str(tmp_path / "a")])
    b = main(["check", "--config", _cfg("msd_composite.toml"), "--out", str(tmp_path / "b")])
    assert a == b == EXIT_OK
    assert (tmp_path / "a" / "report.txt").read_bytes() == (tmp_path / "b" / "report.txt").read_bytes()
    main(["simulate", "--config", _cfg("msd_driven.toml"), "--out", str(tmp_path / "c")])
    main(["simulate", "--config", _cfg("msd_driven.toml"), "--out", str(tmp_path / "d")])
    for f in ("report.txt", "trajectory.tsv"):
        assert (tmp_path / "c" / f).read_bytes() == (tmp_path / "d" / f).read_bytes()


def test_check_default_suites(tmp_path):
    # without a [checks] table the check command runs all three static suites
    path = tmp_path / "gas.toml"
    path.write_text("[system]\ncatalog = \"gas_piston\"\n")
    code, out = _run(tmp_path, "check", "--config", str(path))
    assert code == EXIT_OK
    rep = _report(out)
    for key in ("feasibility: PASS", "homogeneity: PASS", "storage: PASS"):
        assert key in rep


def test_check_available_storage(tmp_path):
    code, out = _run(tmp_path, "check", "--config", _cfg("dp_linear.toml"))
    assert code == EXIT_OK
    rows = (out / "fa_grid.tsv").read_text().splitlines()
    assert rows[0] == "x\tF_a"
    assert len(rows) == 82
    assert "F_a(ground): 0" in _report(out)


def test_check_wrong_sign_fails(tmp_path):
    code, out = _run(tmp_path, "check", "--config", _cfg("wrong_lambda.toml"))
    assert code == EXIT_FAIL
    rep = _report(out)
    assert "feasibility: FAIL" in rep
    assert "min dK_a/dp_S on L" in rep


def test_bad_config_names_key(tmp_path, capsys):
    code, _ = _run(tmp_path, "simulate", "--config", _cfg("bad_config.toml"))
    assert code == EXIT_INPUT
    assert "integrator.dt" in capsys.readouterr().err


@pytest.mark.parametrize("text,key", [
    ("[system]\ncatalog = \"heat_exchanger\"\n[integrator]\ndt = \n", "line"),
    ("[system]\ncatalog = \"heat_exchanger\"\n[plotting]\nx = 1\n", "plotting"),
    ("[system]\ncatalog = \"nope\"\n", "system.catalog"),
    ("[system]\ncatalog = \"heat_exchanger\"\n[checks]\nmagic = true\n", "checks.magic"),
    ("[system]\ncatalog = \"heat_exchanger\"\n[integrator]\ntspan = [1.0, 0.0]\n", "integrator.tspan"),
    ("[system]\ncatalog = \"heat_exchanger\"\n[initial]\nstate = [1.0]\n", "initial.state"),
    ("[system]\ncatalog = \"mass_spring_damper\"\n[input]\nkind = \"constant\"\nvalues = [1.0, 2.0]\n",
     "input.values"),
    ("[system]\ncatalog = \"heat_exchanger\"\nparams = { C9 = 1.0 }\n", "system.params"),
])
def test_malformed_configs(tmp_path, capsys, text, key):
    path = tmp_path / "bad.toml"
    path.write_text(text)
    code, _ = _run(tmp_path, "simulate", "--config", str(path))
    assert code == EXIT_INPUT
    assert key in capsys.readouterr().err


def test_crn_bad_incidence_rejected_at_parse(tmp_path, capsys):
    path = tmp_path / "crn.toml"
    path.write_text("[system]\ncatalog = \"crn\"\n[crn]\nZ = [[1.0, 0.0], [0.0, 1.0]]\nB = [[1.0], [1.0]]\n"
                    "kappa = [1.0]\n")
    code, _ = _run(tmp_path, "crn", "--config", str(path))
    assert code == EXIT_INPUT
    assert "crn.B" in capsys.readouterr().err


def test_missing_file_and_arguments(tmp_path, capsys):
    assert main(["simulate", "--config", str(tmp_path / "absent.toml")]) == EXIT_INPUT
    assert main([]) == EXIT_INPUT
    assert main(["simulate"]) == EXIT_INPUT
    assert main(["simulate", "--config", _cfg("msd_driven.toml"), "--dt", "-1", "--out", str(tmp_path)]) \
        == EXIT_INPUT


def test_crn_report(tmp_path):
    code, out = _run(tmp_path, "crn", "--config", _cfg("crn.toml"))
    assert code == EXIT_OK
    rep = _report(out)
    assert "final concentrations: 1, 1" in rep
    assert "entropy nondecreasing: PASS" in rep
    assert (out / "trajectory.tsv").exists()


def test_compose_summary(tmp_path):
    code, out = _run(tmp_path, "compose", "--config", _cfg("msd_composite.toml"))
    assert code == EXIT_OK
    rep = _report(out)
    assert "coupling: power_conserving" in rep
    assert "force (power)" in rep


def test_carnot_command(tmp_path):
    code, out = _run(tmp_path, "carnot", "--dt", "1e-3")
    assert code == EXIT_OK
    rep = _report(out)
    assert "carnot: PASS" in rep
    assert "eta_carnot: 0.25" in rep
    legs = (out / "cycle_legs.tsv").read_text().splitlines()
    assert len(legs) == 9


def test_config_loads_carnot_table():
    sc = loads("[system]\ncatalog = \"ideal_gas\"\n[carnot]\nT_h = 500.0\n")
    assert sc.carnot["T_h"] == 500.0
    with pytest.raises(ConfigError):
        loads("seed = 1.5\n[system]\ncatalog = \"mass\"\n")


def test_module_entry_point(tmp_path):
    res = subprocess.run([sys.executable, "-m", "thermoport.cli", "check", "--config", _cfg("wrong_lambda.toml"),
                          "--out", str(tmp_path)], capture_output=True, text=True)
    assert res.returncode == EXIT_FAIL
    assert "feasibility: FAIL" in res.stdout
