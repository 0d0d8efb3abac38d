import numpy as np
import pytest

from crossing_histories import DomainError
from crossing_histories.results import PLOT_KINDS, ResultTable, emit, emit_plot_script, read_csv, to_csv, to_json


def test_csv_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    t = ResultTable({"a": rng.normal(size=50), "z": rng.normal(size=50) + 1j * rng.normal(size=50), "k": np.arange(50)}, {"seed": 3})
    path = emit(t, "csv", tmp_path / "x.csv")
    back = read_csv(path)
    assert back.meta["seed"] == 3
    assert np.array_equal(back.columns["a"], t.columns["a"])
    assert np.array_equal(back.columns["z"], t.columns["z"])
    assert list(back.columns) == ["a", "z", "k"]


def test_header_only_for_empty_table(tmp_path):
    path = emit(ResultTable({"a": np.array([]), "b": np.array([])}), "csv", tmp_path / "e.csv")
    assert path.read_text().strip() == "a,b"


def test_quoting_and_strings(tmp_path):
    t = ResultTable({"name": np.array(["plain", "with,comma"]), "v": np.array([1.5, 2.5])})
    text = to_csv(t)
    assert '"with,comma"' in text
    back = read_csv(emit(t, "csv", tmp_path / "s.csv"))
    assert back.columns["name"].tolist() == ["plain", "with,comma"]


def test_json_layout():
    import json

    obj = json.loads(to_json(ResultTable({"z": np.array([1 + 2j])}, {"m": 1})))
    assert obj["meta"] == {"m": 1}
    assert obj["columns"] == {"z_re": [1.0], "z_im": [2.0]}


def test_unequal_columns_rejected():
    with pytest.raises(DomainError):
        ResultTable({"a": [1, 2], "b": [1]})


def test_large_table_round_trip(tmp_path):
    n = 10**6
    t = ResultTable({"i": np.arange(n), "x": np.linspace(0, 1, n)})
    back = read_csv(emit(t, "csv", tmp_path / "big.csv"))
    assert len(back) == n and back.columns["x"][-1] == 1.0


def test_plot_scripts(tmp_path):
    t = ResultTable({"t": [1.0, 2.0], "p_cross": [0.1, 0.14], "d_offdiag": [0.1j, 0.14j]}, {"slope_abs_d": 0.5, "slope_p_cross": 0.49})
    for kind in PLOT_KINDS:
        path = emit_plot_script(t, kind, tmp_path / f"{kind}.py", "run.csv")
        text = path.read_text()
        assert text.strip() and "'run.csv'" in text
        compile(text, str(path), "exec")
    assert "slope 0.5 guide" in (tmp_path / "smalltime-scaling.py").read_text()
    assert "0.500" in (tmp_path / "smalltime-scaling.py").read_text()
    with pytest.raises(DomainError):
        emit_plot_script(t, "nope", tmp_path / "n.py", "run.csv")
