import json

import numpy as np
import pytest

from dnlsq import __version__
from dnlsq.cli import main
from dnlsq.config import (
    DEFAULTS,
    apply_overrides,
    build_config,
    load_config,
    parse_override,
)
from dnlsq.errors import ConfigError
from dnlsq.io import read_csv


def _run(tmp_path, mode, *sets, config=None):
    argv = [mode, "--out", str(tmp_path)]
    if config is not None:
        argv += ["--config", str(config)]
    for s in sets:
        argv += ["--set", s]
    return main(argv)


def test_defaults_are_valid():
    cfg = build_config({})
    assert cfg.data == DEFAULTS
    p = cfg.system_params()
    assert p.n_sites == 23 and p.quantum_scale == 0.01


@pytest.mark.parametrize("doc", [
    {"lattice": {"n_sites": 23, "colour": 1}},
    {"extra": {}},
    {"lattice": {"boundary": "periodic"}},
    {"quantum": {"L": -1}},
    {"experiment": {"mode": "sweep", "sweep_grid": {"L": [], "gamma": [0.0]}}},
    {"experiment": {"mode": "sweep"}},
    {"experiment": {"pair": [0, 23]}},
    {"experiment": {"pair": [3, 3]}},
    {"soliton": {"kind": "dark"}},
    {"integration": {"step": 2.0, "z_max": 1.0}},
    {"output": {"formats": ["xml"]}},
])
def test_invalid_configs(doc):
    with pytest.raises(ConfigError):
        build_config(doc)


def test_overrides():
    assert parse_override("a.b=3") == (["a", "b"], 3)
    assert parse_override("soliton.kind=fundamental") == (["soliton", "kind"], "fundamental")
    assert parse_override("experiment.pair=[1,2]")[1] == [1, 2]
    with pytest.raises(ConfigError):
        parse_override("novalue")
    doc = apply_overrides({"quantum": {"L": 0.01}}, ["quantum.gamma=0.2"])
    assert doc == {"quantum": {"L": 0.01, "gamma": 0.2}}


def test_load_config_errors(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ConfigError):
        load_config(bad)
    bad.write_text("[1, 2]")
    with pytest.raises(ConfigError):
        load_config(bad)


def test_hash_ignores_output_and_workers():
    a = build_config({"output": {"directory": "x"}, "experiment": {"workers": 3}})
    b = build_config({"output": {"directory": "y"}})
    assert a.hash() == b.hash()
    assert a.hash() != build_config({"quantum": {"L": 0.02}}).hash()


def test_soliton_command(tmp_path):
    assert _run(tmp_path, "soliton", "soliton.kind=fundamental") == 0
    prof = json.loads((tmp_path / "profile.json").read_text())
    assert prof["residual"] <= 1e-12 and prof["stable"] is True
    assert prof["meta"]["code_version"] == __version__
    stab = json.loads((tmp_path / "stability.json").read_text())
    assert len(stab["eigenvalues_re"]) == 46
    text = (tmp_path / "profile.csv").read_bytes()
    assert text.startswith(b"# dnlsq ") and b"\r\nk,beta\r\n" in text
    cols, rows = read_csv(tmp_path / "profile.csv")
    assert cols == ["k", "beta"] and len(rows) == 23
    assert float(rows[11][1]) == prof["beta"][11]  # full precision


def test_twisted_profile_file_is_antisymmetric(tmp_path):
    assert _run(tmp_path, "soliton", "lattice.n_sites=20") == 0
    beta = np.array([float(r[1]) for r in read_csv(tmp_path / "profile.csv")[1]])
    np.testing.assert_allclose(beta, -beta[::-1], atol=1e-12)


def test_exit_codes(tmp_path, capsys):
    assert _run(tmp_path, "soliton", "soliton.omega=1.5") == 3
    err = json.loads(capsys.readouterr().err)
    assert err["error"] == "UnsupportedOmega" and err["exit_code"] == 3
    assert json.loads((tmp_path / "error.json").read_text())["error"] == "UnsupportedOmega"
    assert _run(tmp_path, "soliton", "lattice.bogus=1") == 2
    assert json.loads(capsys.readouterr().err)["error"] == "ConfigError"
    # 15 sites are too few at omega = 10
    assert _run(tmp_path, "soliton", "lattice.n_sites=15") == 3
    capsys.readouterr()
    assert _run(tmp_path, "propagate", "quantum.L=50", "integration.step=0.05") == 4
    assert json.loads(capsys.readouterr().err)["error"] == "NumericalBlowup"
    with pytest.raises(SystemExit) as info:
        main(["propagate", "--bogus"])
    assert info.value.code == 2


def test_config_file_and_mode(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"soliton": {"kind": "fundamental"},
                               "experiment": {"mode": "sweep"}}))
    # the subcommand sets the mode, so the missing sweep grid does not matter
    assert _run(tmp_path / "o", "soliton", config=cfg) == 0
    assert json.loads((tmp_path / "o" / "profile.json").read_text())["kind"] == "fundamental"


def test_propagate_outputs(tmp_path):
    code = _run(tmp_path, "propagate", "integration.z_max=0.3",
                'output.formats=["csv","json","sites","snapshot"]')
    assert code == 0
    cols, rows = read_csv(tmp_path / "entanglement.csv")
    assert cols == ["z", "E_N", "Err", "total_power"] and len(rows) == 31
    assert float(rows[0][1]) == 0.0 and float(rows[-1][1]) > 0
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["pair"] == [10, 11] and summary["z_valid"] is None
    cols, rows = read_csv(tmp_path / "sites.csv")
    assert cols == ["z", "k", "abs_alpha2", "delta_n_kk"] and len(rows) == 31 * 23
    snap = json.loads((tmp_path / "snapshot.json").read_text())
    assert snap["final"]["z"] == pytest.approx(0.3)
    first = (tmp_path / "entanglement.csv").read_text().splitlines()[0]
    assert first == f"# dnlsq {__version__} config_hash={summary['meta']['config_hash']}"


def test_classical_limit_propagate(tmp_path):
    assert _run(tmp_path, "propagate", "quantum.L=0", "integration.z_max=0.2") == 0
    cols, rows = read_csv(tmp_path / "entanglement.csv")
    assert all(float(r[2]) == 0.0 for r in rows)


def test_enmap_outputs(tmp_path):
    assert _run(tmp_path, "enmap", "integration.z_max=0.5", "quantum.L=0") == 0
    cols, rows = read_csv(tmp_path / "enmap.csv")
    m = np.array([[float(x) for x in r[1:]] for r in rows])
    assert m.shape == (23, 23)
    np.testing.assert_array_equal(m, m.T)
    summary = json.loads((tmp_path / "enmap.json").read_text())
    assert summary["support"] == [[10, 11]]


def test_sweep_records_failures_in_row(tmp_path):
    grid = '{"L": [0.01, 500], "gamma": [0.0]}'
    code = _run(tmp_path, "sweep", f"experiment.sweep_grid={grid}",
                "integration.step=0.02", "integration.z_max=0.3")
    assert code == 0
    cols, rows = read_csv(tmp_path / "sweep.csv")
    assert cols == ["index", "L", "gamma", "max_EN", "z_star", "z_valid", "intensity", "error"]
    assert rows[0][-1] == "" and float(rows[0][3]) > 0
    assert rows[1][-1].startswith("NumericalBlowup") and rows[1][3] == ""
    summary = json.loads((tmp_path / "sweep.json").read_text())
    assert summary["failures"] == 1


def test_empty_grid_rejected_before_compute(tmp_path):
    code = _run(tmp_path, "sweep", 'experiment.sweep_grid={"L": [], "gamma": [0]}')
    assert code == 2
    assert not (tmp_path / "sweep.csv").exists()


def test_example_configs_validate():
    from pathlib import Path

    paths = sorted((Path(__file__).parent.parent / "configs").glob("*.json"))
    assert len(paths) >= 5
    for p in paths:
        load_config(p)
