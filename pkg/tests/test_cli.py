import json

import pytest

from retake_move import cli


@pytest.fixture(autouse=True)
def one_worker(monkeypatch):
    monkeypatch.setenv("RETAKE_MOVE_THREADS", "1")


@pytest.fixture(scope="module")
def small_logs(tmp_path_factory):
    out = tmp_path_factory.mktemp("logs") / "g"
    assert cli.main(["gen-data", "--rounds", "4", "--seed", "3", "--out", str(out)]) == 0
    return out


def files(directory):
    return {p.relative_to(directory).as_posix(): p.read_bytes() for p in sorted(directory.rglob("*")) if p.is_file()}


def test_zero_rounds_writes_empty_manifest(tmp_path):
    assert cli.main(["gen-data", "--rounds", "0", "--out", str(tmp_path / "g")]) == 0
    assert json.loads((tmp_path / "g" / "manifest.json").read_text())["rounds"] == []


def test_gen_data_is_reproducible(small_logs, tmp_path):
    assert cli.main(["gen-data", "--rounds", "4", "--seed", "3", "--out", str(tmp_path / "g")]) == 0
    assert files(tmp_path / "g") == files(small_logs)
    cov = json.loads((small_logs / "coverage.json").read_text())
    assert cov["rounds"] == 4 and sum(cov["outcomes"].values()) == 4


def test_flag_beats_config_beats_default(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"gen-data": {"rounds": 2, "seed": 1}}))
    assert cli.main(["--config", str(cfg), "gen-data", "--out", str(tmp_path / "a")]) == 0
    assert cli.main(["--config", str(cfg), "gen-data", "--rounds", "1", "--out", str(tmp_path / "b")]) == 0
    assert len(list((tmp_path / "a").glob("*.jsonl"))) == 2
    assert len(list((tmp_path / "b").glob("*.jsonl"))) == 1
    assert json.loads((tmp_path / "a" / "manifest.json").read_text())["seed"] == 1


@pytest.mark.parametrize("content", ['{"gen-data": {"roundz": 1}}', "{not json", "[1, 2]"])
def test_bad_config_is_a_config_error(tmp_path, content):
    cfg = tmp_path / "c.json"
    cfg.write_text(content)
    assert cli.main(["--config", str(cfg), "gen-data", "--out", str(tmp_path / "g")]) == cli.EXIT_CONFIG


def test_exit_codes(tmp_path, small_logs):
    (tmp_path / "bad.mlmv").write_bytes(b"nope")
    assert cli.main(["gen-data", "--rounds", "-1", "--out", str(tmp_path / "g")]) == cli.EXIT_CONFIG
    assert cli.main(["bench", "--queries", "0"]) == cli.EXIT_CONFIG
    assert cli.main(["bench", "--checkpoint", str(tmp_path / "bad.mlmv")]) == cli.EXIT_DATA
    assert cli.main(["eval", "--reference", str(tmp_path / "empty"), "--logs", str(small_logs)]) == cli.EXIT_DATA
    assert cli.main(["selfplay", "--offense", "mlmove", "--defense", "rulemove", "--out", str(tmp_path / "s")]) == cli.EXIT_CONFIG
    assert cli.main(["train", "--out", str(tmp_path / "t")]) == cli.EXIT_CONFIG


def test_latency_arithmetic():
    rep = cli.latency_report([5.0, 1.0, 3.0, 2.0, 4.0])
    assert rep["median_ms"] == 3.0 and rep["iqr_ms"] == 2.0
    assert rep["amortized_ms_per_tick"] == 3.0 / 16
    assert rep["over_budget"] is False
    assert cli.latency_report([16.0])["over_budget"] is True


def test_bench_writes_report(tmp_path, capsys):
    out = tmp_path / "b.json"
    assert cli.main(["bench", "--preset", "desk", "--queries", "5", "--warmup", "1", "--out", str(out)]) == 0
    rep = json.loads(out.read_text())
    assert rep["queries"] == 5 and rep["amortized_ms_per_tick"] == rep["median_ms"] / 16
    assert "ms/tick" in capsys.readouterr().out


def test_selfplay_resumes_and_refuses_other_campaigns(tmp_path, capsys):
    args = ["selfplay", "--offense", "rulemove", "--defense", "random_walk", "--rounds", "2", "--iterations", "1", "--seed", "4", "--out", str(tmp_path / "s")]
    assert cli.main(args) == 0
    before = files(tmp_path / "s")
    capsys.readouterr()
    assert cli.main(args) == 0
    assert "played 0 rounds" in capsys.readouterr().out
    assert files(tmp_path / "s") == before
    other = list(args)
    other[other.index("--seed") + 1] = "5"
    assert cli.main(other) == cli.EXIT_CONFIG


def test_train_selfplay_eval_chain(tmp_path, small_logs):
    model = tmp_path / "m"
    assert cli.main(["train", "--logs", str(small_logs), "--out", str(model), "--epochs", "1"]) == 0
    assert (model / "model.mlmv").exists() and (model / "metrics.csv").read_text().startswith("epoch,train_loss,test_loss")
    sp = tmp_path / "sp"
    assert cli.main(["selfplay", "--offense", "mlmove", "--defense", "mlmove", "--checkpoint", str(model / "model.mlmv"), "--rounds", "2", "--iterations", "2", "--out", str(sp)]) == 0
    ev = tmp_path / "ev"
    assert cli.main(["eval", "--reference", str(small_logs), "--logs", str(sp), "--labels", "ml", "--out", str(ev)]) == 0
    rep = json.loads((ev / "report.json").read_text())
    assert rep[0]["label"] == "ml" and len(rep[0]["iterations"]) == 2
    assert (ev / "heatmaps" / "ml_occupancy_offense.pgm").exists()


def test_rank_reports_rejects(tmp_path, capsys):
    csv = tmp_path / "r.csv"
    csv.write_text("evaluator,round,rank1,rank2,rank3\na,1,x,y,z\nb,1,x,x,z\nc,2,y,x,z\n")
    out = tmp_path / "r.json"
    assert cli.main(["rank", str(csv), "--out", str(out)]) == 0
    assert "r.csv:3: rejected" in capsys.readouterr().err
    res = json.loads(out.read_text())
    assert res["rejected_lines"] == [3] and res["rankings"] == 2
    (tmp_path / "empty.csv").write_text("")
    assert cli.main(["rank", str(tmp_path / "empty.csv")]) == cli.EXIT_DATA
