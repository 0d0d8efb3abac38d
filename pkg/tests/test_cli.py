import numpy as np
import pytest

from crossing_histories.cli import EXIT_ACCEPTANCE, EXIT_OK, EXIT_REGIME, EXIT_VALIDATION, main
from crossing_histories.config import ConfigError, ScenarioConfig, load_config, parse_assignments
from crossing_histories.pipelines import run_scenario
from crossing_histories.results import read_csv, to_csv


def test_config_file_and_overrides(tmp_path):
    f = tmp_path / "s.cfg"
    f.write_text("# scenario\npipeline = unitary\nx0 = 2.0  # centre\nsigma=0.7\n")
    c = load_config(f, ["x0=3"], seed=5)
    assert (c.pipeline, c.x0, c.sigma, c.seed) == ("unitary", 3.0, 0.7, 5)


def test_unknown_keys_are_named():
    with pytest.raises(ConfigError) as err:
        parse_assignments(["bogus = 1", "x0 = 2", "other=3"])
    assert err.value.fields == ("bogus", "other")


def test_validation_names_fields():
    with pytest.raises(ConfigError) as err:
        ScenarioConfig(m=-1.0, fraction=2.0).validate()
    assert set(err.value.fields) == {"m", "fraction"}
    with pytest.raises(ConfigError) as err:
        ScenarioConfig(pipeline="classical", n_paths=5000).validate()
    assert err.value.fields == ("seed",)
    with pytest.raises(ConfigError):
        parse_assignments(["n_paths = 1.5"])


def test_time_sweep():
    c = ScenarioConfig(n_times=3, t_min=1e-4, t_max=1e-2)
    assert np.allclose(c.times, [1e-4, 1e-3, 1e-2])


def test_unitary_antisymmetric_scenario():
    t = run_scenario(load_config(overrides=["state=antisymmetric-gaussian", "x0=2", "sigma=0.7"]))
    assert t.columns["p_cross"][0] < 1e-12
    assert t.columns["p_nocross"][0] > 1 - 1e-12


def test_ensemble_alpha_one_epsilon_is_one():
    t = run_scenario(load_config(overrides=["pipeline=ensemble", "state=synthetic-one-particle", "alpha=1", "fraction=0.4", "N=30", "stride=3"]))
    assert np.max(np.abs(t.columns["epsilon"] - 1.0)) < 1e-12


def test_ensemble_from_unitary_data_and_binning():
    cfg = ["pipeline=ensemble", "state=gaussian", "x0=1.5", "sigma=0.7", "p0=-1", "N=12", "delta_n=2"]
    t = run_scenario(load_config(overrides=cfg))
    assert t.meta["bin_width"] == 4 and len(t) == 4 * 4
    assert t.meta["one_particle"]["p"] + t.meta["one_particle"]["pbar"] + 2 * t.meta["one_particle"]["d"][0] == pytest.approx(1.0)


def test_config_echo_complete():
    c = load_config(overrides=["pipeline=ensemble", "state=synthetic-one-particle", "alpha=5", "N=10"])
    t = run_scenario(c)
    assert set(t.meta["config"]) == set(c.echo())
    assert "seed" in t.meta and "units" in t.meta and "versions" in t.meta
    assert "runtime" not in t.meta


def test_determinism_byte_identical():
    cfg = ["pipeline=classical", "p0=-1", "x0=1", "n_paths=2000", "n_steps=200", "seed=11"]
    assert to_csv(run_scenario(load_config(overrides=cfg))) == to_csv(run_scenario(load_config(overrides=cfg)))
    other = to_csv(run_scenario(load_config(overrides=cfg[:-1] + ["seed=12"])))
    assert other != to_csv(run_scenario(load_config(overrides=cfg)))


def test_main_writes_csv_and_plot(tmp_path, capsys):
    code = main(["--pipeline", "ensemble", "--set", "state=synthetic-one-particle", "--set", "alpha=1e3",
                 "--set", "N=40", "--set", "ensemble_view=histogram", "--plot", "pn-histogram", "--out", str(tmp_path)])
    assert code == EXIT_OK
    t = read_csv(tmp_path / "ensemble.csv")
    assert len(t) == 41
    assert "ensemble.csv" in (tmp_path / "ensemble_pn-histogram.py").read_text()
    assert "runtime" in capsys.readouterr().err


def test_main_output_env_override(tmp_path, monkeypatch):
    monkeypatch.setenv("CROSSING_HISTORIES_OUT", str(tmp_path / "env"))
    assert main(["--set", "state=antisymmetric-gaussian"]) == EXIT_OK
    assert (tmp_path / "env" / "unitary.csv").exists()


def test_main_json(tmp_path):
    import json

    assert main(["--format", "json", "--out", str(tmp_path)]) == EXIT_OK
    assert set(json.loads((tmp_path / "unitary.json").read_text())) == {"meta", "columns"}


@pytest.mark.parametrize(
    "argv",
    [["--set", "nonsense=1"], ["--set", "m=-2"], ["--pipeline", "classical", "--set", "n_paths=2000"], ["--format", "json", "--plot", "pn-histogram"]],
)
def test_main_validation_exit(argv, tmp_path, capsys):
    assert main(argv + ["--out", str(tmp_path)]) == EXIT_VALIDATION
    assert "error" in capsys.readouterr().err


def test_main_strict_regime_exit(tmp_path):
    argv = ["--pipeline", "qbm", "--set", "m=4", "--set", "gamma=0.01", "--set", "x0=10", "--set", "sigma=1", "--set", "p0=20", "--strict", "--out", str(tmp_path)]
    assert main(argv) == EXIT_REGIME


def test_main_acceptance_sabotage_fails(tmp_path, capsys):
    code = main(["--acceptance", "--set", "criteria=1", "--set", "perturb_hbar=1e-3", "--out", str(tmp_path)])
    assert code == EXIT_ACCEPTANCE
    assert "[FAIL]  1" in capsys.readouterr().out
    assert main(["--acceptance", "--set", "criteria=1,2", "--out", str(tmp_path)]) == EXIT_OK
    t = read_csv(tmp_path / "acceptance.csv")
    assert t.columns["passed"].tolist() == [1.0, 1.0]
    assert np.all(t.columns["runtime"] >= 0)
