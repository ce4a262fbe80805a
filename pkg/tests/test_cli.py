import numpy as np
import pytest

from cltq.cli import main
from cltq.evaluation import SampleRecord, read_results, write_results

SMALL_RUN = ["--pivots", "15", "--min-support", "5", "--k", "5", "--min-df", "1",
             "--samples-per-level", "2", "--sample-size", "20", "--folds-rates", "5",
             "--scl-iterations", "10"]


@pytest.fixture(scope="module")
def bench(tmp_path_factory):
    out = tmp_path_factory.mktemp("bench")
    assert main(["synth", "--seed", "3", "--out", str(out), "--n-labeled", "200",
                 "--n-unlabeled", "600", "--vocab-size", "150"]) == 0
    return out


def test_synth_writes_corpora_dictionary_and_config(bench):
    names = sorted(p.name for p in bench.iterdir())
    assert names == ["dictionary.tsv", "experiment.cfg", "source_labeled.txt",
                     "source_unlabeled.txt", "target_test.txt", "target_unlabeled.txt"]


def test_synth_is_byte_identical(bench, tmp_path):
    assert main(["synth", "--seed", "3", "--out", str(tmp_path), "--n-labeled", "200",
                 "--n-unlabeled", "600", "--vocab-size", "150"]) == 0
    for p in bench.iterdir():
        assert (tmp_path / p.name).read_bytes() == p.read_bytes()


def test_synth_requires_seed(tmp_path, capsys):
    assert main(["synth", "--out", str(tmp_path)]) == 2
    assert "--seed" in capsys.readouterr().err


def test_run_missing_dictionary(bench, tmp_path, capsys):
    missing = tmp_path / "nowhere.tsv"
    code = main(["run", "--config", str(bench / "experiment.cfg"), "--dictionary", str(missing),
                 "--out", str(tmp_path / "out")])
    assert code == 2
    assert str(missing) in capsys.readouterr().err


def test_run_bad_option(bench, tmp_path):
    assert main(["run", "--config", str(bench / "experiment.cfg"), "--methods", "cc,hdy",
                 "--out", str(tmp_path)]) == 2


def test_run_pipeline_failure_is_stage_tagged(bench, tmp_path, capsys):
    # more pivots than the tiny vocabulary can supply
    code = main(["run", "--config", str(bench / "experiment.cfg"), "--pivots", "500",
                 "--out", str(tmp_path), "--no-cache"])
    assert code == 1
    assert "pivots" in capsys.readouterr().err


def test_run_selected_methods_and_determinism(bench, tmp_path):
    args = ["run", "--config", str(bench / "experiment.cfg"), "--methods", "cc,acc", *SMALL_RUN]
    assert main([*args, "--out", str(tmp_path / "a")]) == 0
    summary = (tmp_path / "a" / "summary.tsv").read_text().splitlines()
    assert sorted(line.split("\t")[0] for line in summary[1:]) == ["DCI-ACC", "DCI-CC",
                                                                   "SCL-ACC", "SCL-CC"]
    records = read_results(tmp_path / "a" / "results.tsv")
    assert len(records) == 4 * 21 * 2
    assert main([*args, "--out", str(tmp_path / "b"), "--no-cache"]) == 0
    for name in ("results.tsv", "summary.tsv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def _write(path, method, errors):
    recs = [SampleRecord(method, i // 10, i % 10, 0.5, 0.5 + e, abs(e), 2 * abs(e), e * e)
            for i, e in enumerate(errors)]
    write_results(recs, path)


def test_report_single_method(tmp_path, capsys):
    _write(tmp_path / "r.tsv", "only", np.linspace(0, 0.1, 20))
    assert main(["report", str(tmp_path / "r.tsv")]) == 0
    out = capsys.readouterr().out
    assert "only" in out and "†" not in out.splitlines()[1]


def test_report_identical_files(tmp_path):
    errors = np.random.default_rng(1).normal(0, 0.05, 40)
    _write(tmp_path / "a.tsv", "M", errors)
    _write(tmp_path / "b.tsv", "M", errors)
    assert main(["report", str(tmp_path / "a.tsv"), str(tmp_path / "b.tsv"),
                 "--out", str(tmp_path / "s.tsv")]) == 0
    rows = [line.split("\t") for line in (tmp_path / "s.tsv").read_text().splitlines()[1:]]
    assert [r[0] for r in rows] == ["M", "b/M"]
    marks = {r[0]: r[4] for r in rows}
    p_values = {r[0]: float(r[5]) for r in rows}
    assert marks == {"M": "best", "b/M": "†"} and p_values["b/M"] == 1.0


def test_report_oracle_vs_noisy(tmp_path):
    _write(tmp_path / "o.tsv", "oracle", np.zeros(60))
    _write(tmp_path / "n.tsv", "noisy", np.random.default_rng(2).normal(0, 0.05, 60))
    assert main(["report", str(tmp_path / "o.tsv"), str(tmp_path / "n.tsv"),
                 "--out", str(tmp_path / "s.tsv")]) == 0
    rows = {r.split("\t")[0]: r.split("\t") for r in (tmp_path / "s.tsv").read_text().splitlines()[1:]}
    assert rows["oracle"][4] == "best" and rows["noisy"][4] == ""


def test_report_malformed(tmp_path, capsys):
    _write(tmp_path / "r.tsv", "m", [0.1, 0.2])
    with open(tmp_path / "r.tsv", "a") as fh:
        fh.write("m\t1\n")
    assert main(["report", str(tmp_path / "r.tsv")]) == 2
    assert "line 4" in capsys.readouterr().err


def test_report_missing_file(tmp_path):
    assert main(["report", str(tmp_path / "none.tsv")]) == 2
