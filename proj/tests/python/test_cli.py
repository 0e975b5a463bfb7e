import json
import os
import subprocess


def run(sim, *args, env=None):
    e = dict(os.environ)
    e.update(env or {})
    return subprocess.run([sim, *map(str, args)], capture_output=True, text=True, env=e)


def outputs(d):
    return {p.name: p.read_bytes() for p in sorted(d.iterdir()) if p.name != "wallclock.txt"}


def test_bb84_run_writes_outputs(sim, root, tmp_path):
    r = run(sim, "bb84", "--scenario", root / "scenarios" / "bb84.json", "--seed", 5,
            "--out", tmp_path, "--n", 4000)
    assert r.returncode == 0, r.stderr
    lines = (tmp_path / "run.jsonl").read_text().splitlines()
    header, summary = json.loads(lines[0]), json.loads(lines[1])
    assert header["seed"] == 5
    assert summary["metrics"]["verdict"] == "clean"
    assert (tmp_path / "wallclock.txt").exists()


def test_reruns_are_byte_identical(sim, root, tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        r = run(sim, "combined", "--scenario", root / "scenarios" / "combined.json",
                "--seed", 11, "--out", d)
        assert r.returncode == 0, r.stderr
    assert outputs(a) == outputs(b)
    assert len(outputs(a)) >= 5


def test_module_flags(sim, tmp_path):
    r = run(sim, "entangle", "--out", tmp_path, "--seed", 2, "--pairs", 20000,
            "--state", "phi+", "--angles", "0,45,22.5,67.5", "--efficiency", 1.0,
            "--window", 1e-9)
    assert r.returncode == 0, r.stderr
    summary = json.loads((tmp_path / "run.jsonl").read_text().splitlines()[1])
    assert summary["metrics"]["chsh_s"] > 2.4


def test_loop_config_alias(sim, root, tmp_path):
    r = run(sim, "loop", "--config", root / "scenarios" / "loop_key.json", "--out", tmp_path)
    assert r.returncode == 0, r.stderr
    assert (tmp_path / "loop.csv").exists()


def test_perturb_prints_sweep(sim, tmp_path):
    r = run(sim, "perturb", "--out", tmp_path)
    assert r.returncode == 0, r.stderr
    rows = r.stdout.strip().splitlines()
    assert rows[0] == "lambda,max_error,max_norm_defect"
    assert len(rows) > 3
    assert all(len(row.split(",")) == 3 for row in rows[1:])


def test_trials(sim, tmp_path):
    r = run(sim, "bb84", "--out", tmp_path, "--seed", 3, "--n", 2000, "--trials", 3)
    assert r.returncode == 0, r.stderr
    dirs = sorted(p.name for p in tmp_path.iterdir() if p.is_dir())
    assert dirs == ["trial_0000", "trial_0001", "trial_0002"]


def test_exit_codes(sim, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"kind": "bb84", "bb84": {"foo": 1}}')
    assert run(sim, "bb84", "--scenario", bad, "--out", tmp_path / "o1").returncode == 2
    garbled = tmp_path / "garbled.json"
    garbled.write_text("{")
    assert run(sim, "bb84", "--scenario", garbled, "--out", tmp_path / "o2").returncode == 2
    assert run(sim, "bb84", "--bogus", "--out", tmp_path / "o3").returncode == 2
    missing = tmp_path / "missing.json"
    assert run(sim, "bb84", "--scenario", missing, "--out", tmp_path / "o4").returncode == 4
    degenerate = tmp_path / "degenerate.json"
    degenerate.write_text('{"kind": "perturb", "perturb": {"energies": [1.0, 1.0]}}')
    r = run(sim, "perturb", "--scenario", degenerate, "--out", tmp_path / "o5")
    assert r.returncode == 3
    assert "DegenerateSpectrum" in (tmp_path / "o5" / "run.jsonl").read_text()
    blocker = tmp_path / "blocker"
    blocker.write_text("x")
    assert run(sim, "formation", "--out", blocker / "sub").returncode == 4


def test_log_level(sim, tmp_path):
    quiet = run(sim, "formation", "--out", tmp_path / "q", env={"SIM_LOG_LEVEL": "error"})
    assert quiet.returncode == 0
    assert quiet.stderr == ""
    loud = run(sim, "formation", "--out", tmp_path / "d", env={"SIM_LOG_LEVEL": "debug"})
    assert "[debug]" in loud.stderr
    assert "[info]" in loud.stderr
