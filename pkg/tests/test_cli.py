import math

import pytest

from nfdelay import cli

PULSE_HOPF = """
analysis = "pulse-hopf"
theta = 0.3
[kernel]
w_e = 1.3
sigma_e = 4.0
w_i = 1.1
sigma_i = 2.0
[input]
type = "gaussian"
I_0 = 0.1
sigma = 1.5
"""

SIMULATE = """
analysis = "simulate"
name = "quick"
theta = 0.3
[kernel]
w_e = 1.3
sigma_e = 4.0
w_i = 1.1
sigma_i = 2.0
[input]
type = "gaussian"
I_0 = 0.4
sigma = 1.5
[delays]
tau_D = 1.0
[grid]
L = 32.0
n = 512
[integration]
T = 2.0
dt = 0.01
frame_every = 0.5
"""


@pytest.fixture
def cfg_file(tmp_path):
    def make(text, name="cfg.toml"):
        p = tmp_path / name
        p.write_text(text)
        return str(p)
    return make


def test_exit_codes(cfg_file, tmp_path, capsys):
    out = str(tmp_path / "out")
    assert cli.main(["run", cfg_file("analysis = [\n"), "-o", out]) == cli.EXIT_CONFIG
    assert cli.main(["run", str(tmp_path / "missing.toml"), "-o", out]) == cli.EXIT_CONFIG
    path = cfg_file(PULSE_HOPF)
    assert cli.main(["pulse-hopf", path, "-o", out]) == cli.EXIT_NO_SOLUTION
    assert cli.main(["pulse-hopf", path, "--set", "input.I_0=0.4", "-o", out]) == cli.EXIT_OK
    assert cli.main(["front-build", path, "-o", out]) == cli.EXIT_CONFIG     # analysis mismatch
    assert cli.main(["reproduce", "no_such_figure", "-o", out]) == cli.EXIT_CONFIG
    err = capsys.readouterr().err
    assert "config error" in err and "no solution" in err


def test_presets_are_listed(capsys):
    assert cli.main(["presets"]) == cli.EXIT_OK
    names = capsys.readouterr().out.split()
    assert names == cli.preset_names() and len(names) == 10
    for n in names:
        assert cli.preset_tasks(cli.load_preset(n))


def test_output_directory_resolution(cfg_file, tmp_path, monkeypatch):
    env_dir = tmp_path / "from_env"
    monkeypatch.setenv("NFDELAY_OUTPUT_DIR", str(env_dir))
    assert cli.main(["pulse-hopf", cfg_file(PULSE_HOPF), "--set", "input.I_0=0.4"]) == cli.EXIT_OK
    assert any(env_dir.iterdir())
    assert cli._resolve_output("flag", "cfg") == "flag"
    monkeypatch.delenv("NFDELAY_OUTPUT_DIR")
    assert cli._resolve_output(None, "cfg") == "cfg"


def test_outputs_are_byte_identical_across_runs(cfg_file, tmp_path):
    path = cfg_file(PULSE_HOPF)
    for sub in ("a", "b"):
        assert cli.main(["pulse-hopf", path, "--set", "input.I_0=0.4", "-o", str(tmp_path / sub)]) == 0
    files = sorted(p.name for p in (tmp_path / "a").iterdir() if p.suffix == ".csv")
    assert files
    for name in files:
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_simulate_writes_its_outputs(cfg_file, tmp_path):
    out = tmp_path / "sim"
    assert cli.main(["simulate", cfg_file(SIMULATE), "-o", str(out)]) == cli.EXIT_OK
    for suffix in ("_frames.bin", "_center.csv", "_contours.csv", "_field.ppm", "_summary.csv"):
        assert (out / ("quick" + suffix)).stat().st_size > 0
    summary = (out / "quick_summary.csv").read_text().splitlines()
    assert summary[0] == "classification,period"


def test_simulate_rejects_a_coarse_grid(cfg_file, tmp_path):
    path = cfg_file(SIMULATE)
    assert cli.main(["simulate", path, "--set", "grid.n=64", "-o", str(tmp_path)]) == cli.EXIT_CONFIG


def test_pick_pulse():
    assert cli._pick_pulse([]) is None


# -- bundled presets against the parameter values they document ---------------------------------------

_KERNEL = ("w_e", "w_i", "sigma_e", "sigma_i")


def _task_value(task, key):
    if key in _KERNEL:
        return task.get("kernel", {}).get(key)
    if key == "theta":
        return task.get("theta")
    if key in ("sigma", "I_0", "s"):
        return task.get("input", {}).get(key)
    if key == "tau_D":
        return task.get("delays", {}).get("tau_D")
    if key == "amplitude":
        return task.get("initial", {}).get("amplitude")
    return None      # derived quantities (limits, half-widths) are checked by the analysis tests


def _caption_blocks(preset):
    cap = preset["caption"]
    if all(isinstance(v, dict) for v in cap.values()):
        return list(cap.items())
    return [("", cap)]


def _matches(task, block):
    values = dict(block)
    for a, b in [tuple(block["swapped"])] if "swapped" in block else []:
        values[a], values[b] = block[b], block[a]
    for key, want in values.items():
        got = _task_value(task, key)
        if got is not None and not math.isclose(got, want, rel_tol=1e-12):
            return False
    return all(_task_value(task, k) is not None for k in _KERNEL if k in values)


@pytest.mark.parametrize("name", cli.preset_names())
def test_preset_matches_its_caption(name):
    preset = cli.load_preset(name)
    tasks = cli.preset_tasks(preset)
    for label, block in _caption_blocks(preset):
        assert any(_matches(t, block) for t in tasks), "%s caption %s has no matching task" % (name, label)


def test_swapped_weights_are_declared():
    cap = cli.load_preset("i0")["caption"]
    assert cap["A"]["swapped"] == ["w_e", "w_i"] and "B" in cap
    assert set(cli.load_preset("shapefronts")["caption"]) == {"monotonous", "three_crossing"}
