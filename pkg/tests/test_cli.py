import csv
import json

import pytest

from autolock.circuits import C17_BENCH
from autolock.cli import main
from autolock.netlist import parse_bench, write_bench

from conftest import TINY_BENCH


@pytest.fixture
def c17_file(tmp_path):
    path = tmp_path / "c17.bench"
    path.write_text(C17_BENCH)
    return path


def _lock(src, out, k=4, seed=7):
    return main(["lock", str(src), "--key-length", str(k), "--seed", str(seed), "--out", str(out)])


def test_lock_c17(c17_file, tmp_path):
    out = tmp_path / "o"
    assert _lock(c17_file, out) == 0
    locked = parse_bench((out / "c17_locked.bench").read_text())
    assert len(locked.gates) == 14 and len(locked.key_inputs) == 4
    assert len((out / "c17.key").read_text().splitlines()) == 4
    assert len(json.loads((out / "c17.genotype.json").read_text())["genes"]) == 4


def test_lock_is_byte_identical(c17_file, tmp_path):
    _lock(c17_file, tmp_path / "x")
    _lock(c17_file, tmp_path / "y")
    for name in ("c17_locked.bench", "c17.key", "c17.genotype.json"):
        assert (tmp_path / "x" / name).read_bytes() == (tmp_path / "y" / name).read_bytes()


def test_lock_usage_errors(c17_file, tmp_path, capsys):
    with pytest.raises(SystemExit) as info:
        _lock(c17_file, tmp_path, k=0)
    assert info.value.code == 2
    assert _lock(c17_file, tmp_path, k=8) == 2
    assert main(["lock", str(tmp_path / "missing.bench"), "--key-length", "2", "--seed", "0"]) == 2
    bad = tmp_path / "bad.bench"
    bad.write_text("INPUT(a)\nn1 = DFF(a)\n")
    assert main(["lock", str(bad), "--key-length", "1", "--seed", "0"]) == 2
    assert "error" in capsys.readouterr().err


def test_attack_tiny(tmp_path, capsys):
    src = tmp_path / "tiny.bench"
    src.write_text(TINY_BENCH)
    assert _lock(src, tmp_path, k=1, seed=0) == 0
    capsys.readouterr()
    args = ["attack", str(tmp_path / "tiny_locked.bench"), str(tmp_path / "tiny.key"), "--seed", "1"]
    assert main(args) == 0
    first = capsys.readouterr().out
    report = json.loads(first)
    assert len(report["bits"]) == 1
    assert 0.0 <= report["accuracy"] <= 1.0
    assert main(args) == 0
    assert capsys.readouterr().out == first


def test_attack_key_mismatch(c17_file, tmp_path):
    _lock(c17_file, tmp_path)
    short = tmp_path / "short.key"
    short.write_text("keyinput0=1\n")
    assert main(["attack", str(tmp_path / "c17_locked.bench"), str(short), "--seed", "0"]) == 2


def _evolve(src, out, *extra):
    return main(["evolve", str(src), "--key-length", "4", "--population", "10",
                 "--generations", "10", "--seed", "3", "--out", str(out), *extra])


def test_evolve_c17(c17_file, tmp_path):
    out = tmp_path / "e"
    assert _evolve(c17_file, out) == 0
    rows = list(csv.DictReader((out / "history.csv").open()))
    assert 1 <= len(rows) <= 10
    best = [float(r["best_fitness"]) for r in rows]
    assert best == sorted(best)
    run = json.loads((out / "run.json").read_text())
    assert run["termination"] in ("target-reached", "generations-exhausted")
    assert main(["verify", str(c17_file), str(out / "c17_locked.bench"), str(out / "c17.key"),
                 "--mode", "exhaustive"]) == 0


def test_evolve_target_zero_stops_at_once(c17_file, tmp_path):
    out = tmp_path / "z"
    assert _evolve(c17_file, out, "--target-fitness", "0") == 0
    assert len((out / "history.csv").read_text().splitlines()) == 2
    assert json.loads((out / "run.json").read_text())["termination"] == "target-reached"


def test_evolve_reruns_are_byte_identical(c17_file, tmp_path):
    for d in ("r1", "r2"):
        assert _evolve(c17_file, tmp_path / d) == 0
    for name in ("c17_locked.bench", "c17.key", "c17.genotype.json", "history.csv", "run.json"):
        assert (tmp_path / "r1" / name).read_bytes() == (tmp_path / "r2" / name).read_bytes()


def test_verify_exit_codes(c17_file, tmp_path, capsys):
    _lock(c17_file, tmp_path)
    locked, key = tmp_path / "c17_locked.bench", tmp_path / "c17.key"
    assert main(["verify", str(c17_file), str(locked), str(key)]) == 0
    bits = dict(line.split("=") for line in key.read_text().split())
    wrong = tmp_path / "wrong.key"
    wrong.write_text("".join(f"{k}={1 - int(v)}\n" for k, v in bits.items()))
    assert main(["verify", str(c17_file), str(locked), str(wrong)]) == 1
    other = tmp_path / "tiny.bench"
    other.write_text(TINY_BENCH)
    assert main(["verify", str(other), str(locked), str(key)]) == 2


def test_verify_corruption_report(c17_file, tmp_path, capsys):
    _lock(c17_file, tmp_path)
    capsys.readouterr()
    assert main(["verify", str(c17_file), str(tmp_path / "c17_locked.bench"),
                 str(tmp_path / "c17.key"), "--wrong-keys", "5"]) == 0
    report = json.loads(capsys.readouterr().out)
    assert len(report["corruption"]) == 5


def test_verify_accepts_non_mux_locking(tmp_path):
    orig = tmp_path / "t.bench"
    orig.write_text(TINY_BENCH)
    xor_locked = parse_bench(TINY_BENCH.replace("OUTPUT(n2)\n", "OUTPUT(n2)\nINPUT(keyinput0)\n")
                             .replace("n2 = OR(n1, c)", "m = XOR(n1, keyinput0)\nn2 = OR(m, c)"))
    lk = tmp_path / "t_locked.bench"
    lk.write_text(write_bench(xor_locked))
    key = tmp_path / "t.key"
    key.write_text("keyinput0=0\n")
    assert main(["verify", str(orig), str(lk), str(key)]) == 0
