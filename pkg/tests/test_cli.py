import json

from fedvs.cli import main


def records(path):
    return [json.loads(line) for line in path.read_text().splitlines()]


def run(tmp_path, name, *args):
    out = tmp_path / name
    assert main(["run", "--out", str(out), *args]) == 0
    return out


def test_zero_rounds(tmp_path):
    recs = records(run(tmp_path, "m.jsonl", "--rounds", "0"))
    assert [r["type"] for r in recs] == ["header", "summary"]
    assert recs[0]["config"]["rounds"] == 0


def test_byte_identical(tmp_path):
    a = run(tmp_path, "a.jsonl", "--rounds", "12", "--seed", "4")
    b = run(tmp_path, "b.jsonl", "--rounds", "12", "--seed", "4")
    assert a.read_bytes() == b.read_bytes()


def test_wait_never_faster_than_coded_rounds(tmp_path):
    fed = records(run(tmp_path, "f.jsonl", "--rounds", "30", "--strategy", "fedvs"))
    wait = records(run(tmp_path, "w.jsonl", "--rounds", "30", "--strategy", "wait"))
    fr = [r for r in fed if r["type"] == "round"]
    wr = [r for r in wait if r["type"] == "round"]
    assert all(w["round_time_s"] >= f["round_time_s"] for f, w in zip(fr, wr))
    assert wr[-1]["sim_time_s"] > fr[-1]["sim_time_s"]


def test_config_file_and_sweep(tmp_path):
    cfg = tmp_path / "exp.cfg"
    cfg.write_text("n_clients = 5\nsynthetic_features = 10\nrounds = 3\n")
    recs = records(run(tmp_path, "s.jsonl", "--config", str(cfg), "--sweep-seeds", "2", "--workers", "2"))
    assert [r["config"]["seed"] for r in recs if r["type"] == "header"] == [0, 1]
    assert sum(r["type"] == "round" for r in recs) == 6


def test_invalid_config_exit_code(tmp_path, capsys):
    assert main(["run", "--set", "n_clients=4", "--set", "synthetic_features=8", "--rounds", "1"]) == 1
    err = json.loads(capsys.readouterr().err)
    assert err["error"] == "ValidationError" and "threshold" in err["message"]


def test_malformed_override(capsys):
    assert main(["run", "--set", "K"]) == 2
