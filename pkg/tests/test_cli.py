import json

import pytest

from cutlab import cli, simulate
from cutlab.chains import constant_drift_chain
from cutlab.errors import ConfigInvalid, UnknownPreset


def test_unknown_preset_exit_2(tmp_path, capsys):
    assert cli.main(["--preset", "nope", "--out", str(tmp_path)]) == 2
    assert "unknown preset" in capsys.readouterr().err


def test_missing_preset_exit_2(capsys):
    assert cli.main([]) == 2


def test_invalid_config_exit_2(tmp_path, capsys):
    cfgfile = tmp_path / "c.json"
    cfgfile.write_text(json.dumps({"preset": "density", "seeds": 0}))
    assert cli.main(["--config", str(cfgfile), "--out", str(tmp_path / "o")]) == 2
    cfgfile.write_text(json.dumps({"preset": "density", "bogus_field": 1}))
    assert cli.main(["--config", str(cfgfile), "--out", str(tmp_path / "o")]) == 2


def test_list_profiles(capsys):
    assert cli.main(["--list-profiles"]) == 0
    out = capsys.readouterr().out
    for name in ("poly", "sqrt_log", "slowlog", "poly_shift"):
        assert name in out


def test_run_preset_validates():
    with pytest.raises(UnknownPreset):
        cli.run_preset("nope", cli.ExperimentConfig(preset="nope"))
    with pytest.raises(ConfigInvalid):
        cli.run_preset("density",
                       cli.ExperimentConfig(preset="density", seeds=-1))


def test_density_preset_files_and_determinism(tmp_path):
    base = dict(preset="density", seeds=10, master_seed=5,
                horizons=[2000, 20000])
    outs = []
    for workers, sub in ((1, "a"), (3, "b")):
        cfg = cli.ExperimentConfig(**base, workers=workers,
                                   out_dir=str(tmp_path / sub))
        status, summary = cli.run_preset("density", cfg)
        assert status == 0
        outs.append((tmp_path / sub / "summary.json").read_bytes())
        assert (tmp_path / sub / "config.json").exists()
        assert (tmp_path / sub / "per_seed.csv").read_text().splitlines()[0] \
            == simulate.CSV_HEADER
    assert outs[0] == outs[1]  # byte-identical across worker counts


def test_emitted_config_reproduces(tmp_path):
    cfg = cli.ExperimentConfig(preset="density", seeds=6, master_seed=9,
                               horizons=[1000, 5000], out_dir=str(tmp_path / "x"))
    cli.run_preset("density", cfg)
    emitted = json.loads((tmp_path / "x" / "config.json").read_text())
    emitted["out_dir"] = str(tmp_path / "y")
    status = cli.main(["--config", str(tmp_path / "x" / "config.json"),
                       "--out", str(tmp_path / "y")])
    assert status == 0
    assert ((tmp_path / "x" / "summary.json").read_bytes()
            == (tmp_path / "y" / "summary.json").read_bytes())


def test_cli_flag_overrides(tmp_path):
    status = cli.main(["--preset", "density", "--seeds", "5",
                       "--master-seed", "3", "--horizons", "1000,4000",
                       "--workers", "2", "--out", str(tmp_path / "z")])
    assert status == 0
    cfg = json.loads((tmp_path / "z" / "config.json").read_text())
    assert cfg["seeds"] == 5 and cfg["horizons"] == [1000, 4000]


def test_trajectory_binary_dump(tmp_path):
    traj = simulate.run_bd(constant_drift_chain(0.25), 500, seed=4, master_seed=2)
    path = tmp_path / "traj.bin"
    simulate.dump_trajectory(traj, path)
    raw = path.read_bytes()
    assert raw[:8] == b"CUTTRAJ1"
    back = simulate.load_trajectory_states(path)
    assert (back == traj.states).all()
