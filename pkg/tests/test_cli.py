from __future__ import annotations

import csv
import io
import logging
import shutil

import pytest

from conftest import COHORT
from openasn.cli import build_parser, main, parse_ratios

UA = "openasn-tests/0.1 (mailto:tests@example.org)"


def read_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


@pytest.fixture
def workspace(tmp_path):
    """A copy of the cohort fixture with its citation index built."""
    root = tmp_path / "cohort"
    shutil.copytree(COHORT, root)
    assert main(["index", "build", "--csv", str(root / "coci_dump.csv"), "--out", str(root / "index")]) == 0
    return root


@pytest.fixture
def results(workspace):
    assert main(["run", "--roster", str(workspace / "roster.csv"), "--config", str(workspace / "config.ini"),
                 "--out", str(workspace / "out")]) == 0
    return workspace / "out" / "results.csv"


# -- extract -----------------------------------------------------------------------


def test_extract(tmp_path, capsys):
    cv = tmp_path / "cv.txt"
    cv.write_text("Papers: doi:10.1016/j.jdss.2015.02.006. Also https://doi.org/10.1145/3290605.3300233).\n")
    empty = tmp_path / "empty.txt"
    empty.write_text("")
    assert main(["extract", "--in", str(cv), str(empty), "--out", str(tmp_path / "out")]) == 0
    lines = (tmp_path / "out" / "cv.dois.txt").read_text().splitlines()
    assert lines == ["10.1016/j.jdss.2015.02.006", "10.1145/3290605.3300233"]
    assert (tmp_path / "out" / "empty.dois.txt").read_text() == ""
    err = capsys.readouterr().err
    assert "warning" in err and "empty.txt" in err


def test_extract_unreadable_path(tmp_path, capsys):
    missing = tmp_path / "nope.txt"
    assert main(["extract", "--in", str(missing), "--out", str(tmp_path)]) == 1
    assert str(missing) in capsys.readouterr().err


# -- index, run, stats ---------------------------------------------------------------


def test_index_build_report(workspace, capsys):
    import json

    report = json.loads((workspace / "index" / "build_report.json").read_text())
    assert report["rows_read"] == 64
    assert report["duplicates_dropped"] == 1
    assert report["self_loops_dropped"] == 1
    assert report["malformed_dropped"] == 1
    assert report["edges_kept"] == 61


def test_index_build_missing_column(tmp_path, capsys):
    dump = tmp_path / "d.csv"
    dump.write_text("a,b\n1,2\n")
    assert main(["index", "build", "--csv", str(dump), "--out", str(tmp_path / "i")]) == 1
    assert main(["index", "build", "--csv", str(dump), "--out", str(tmp_path / "i"),
                 "--citing-col", "a", "--cited-col", "b"]) == 0


def test_run_writes_nine_cells(results):
    rows = read_csv(results)
    assert len(rows) == 9
    assert [(r["candidate_id"], r["condition"]) for r in rows[:3]] == [("c1", "CCV"), ("c1", "CDBLP"), ("c1", "CU")]
    assert (results.parent / "results.json").exists()
    assert (results.parent / "run_report.json").exists()


def test_run_is_deterministic(workspace, results):
    first = {name: (results.parent / name).read_bytes() for name in ("results.csv", "results.json")}
    assert main(["run", "--roster", str(workspace / "roster.csv"), "--config", str(workspace / "config.ini"),
                 "--out", str(workspace / "again")]) == 0
    for name, data in first.items():
        assert (workspace / "again" / name).read_bytes() == data


def test_run_missing_thresholds_is_config_error(workspace, capsys):
    cfg = workspace / "partial.ini"
    cfg.write_text("[thresholds]\npreset = none\n[thresholds.full]\na = 8\nb = 216\nc = 8\n"
                   "[citations]\nindex = index\n")
    code = main(["run", "--roster", str(workspace / "roster.csv"), "--config", str(cfg),
                 "--out", str(workspace / "x")])
    assert code == 2
    assert "associate" in capsys.readouterr().err


def test_run_without_index_is_config_error(workspace):
    cfg = workspace / "noindex.ini"
    cfg.write_text("[thresholds]\npreset = reconciled\n")
    assert main(["run", "--roster", str(workspace / "roster.csv"), "--config", str(cfg),
                 "--out", str(workspace / "x")]) == 2


def test_run_bad_roster_is_data_error(workspace):
    bad = workspace / "bad.csv"
    bad.write_text("id,role\nc1,professor\n")
    assert main(["run", "--roster", str(bad), "--config", str(workspace / "config.ini"),
                 "--out", str(workspace / "x")]) == 1


def test_stats(workspace, capsys, tmp_path):
    assert main(["stats", "--roster", str(workspace / "roster.csv"), "--out", str(tmp_path / "s.csv")]) == 0
    out = capsys.readouterr().out
    assert "DOI UNION" in out
    rows = read_csv(tmp_path / "s.csv")
    full = next(r for r in rows if r["level"] == "full")
    assert (full["cvs"], full["dois_union"], full["avg_union"]) == ("2", "7", "3.5")


# -- agree, flips, sweep -------------------------------------------------------------


def test_agree_and_flips(workspace, results, tmp_path, capsys):
    official = str(workspace / "official.csv")
    assert main(["agree", "--open", str(results), "--official", official,
                 "--config", str(workspace / "config.ini"), "--out", str(tmp_path / "agree.csv")]) == 0
    rows = read_csv(tmp_path / "agree.csv")
    full_overall = next(r for r in rows if r["role"] == "full" and r["row"] == "Overall")
    # c1 officially passes, c3 fails; every open outcome fails.
    assert full_overall["CU"] == "50.00"
    assoc = next(r for r in rows if r["role"] == "associate" and r["row"] == "Overall")
    assert assoc["CCV"] == "100.00"

    assert main(["flips", "--open", str(results), "--official", official,
                 "--out", str(tmp_path / "flips.csv")]) == 0
    flips = read_csv(tmp_path / "flips.csv")
    full_overall = next(r for r in flips if r["role"] == "full" and r["row"] == "overall")
    assert (full_overall["CU +"], full_overall["CU -"]) == ("0.00", "50.00")
    assert "Full Professor (n=2)" in capsys.readouterr().out


def test_agree_unmatched(workspace, results, tmp_path):
    official = tmp_path / "official.csv"
    official.write_text("candidate_id,role,pass_a,pass_b,pass_c\nc1,full,1,1,1\nc2,associate,0,0,0\n")
    assert main(["agree", "--open", str(results), "--official", str(official)]) == 1
    assert main(["agree", "--open", str(results), "--official", str(official), "--drop-unmatched"]) == 0


def test_sweep(workspace, results, tmp_path, caplog):
    caplog.set_level(logging.INFO, logger="openasn")
    out = tmp_path / "sweep"
    assert main(["sweep", "--open", str(results), "--official", str(workspace / "official.csv"),
                 "--config", str(workspace / "config.ini"), "--ratios", "0.5:1.0:0.05",
                 "--out", str(out), "--svg"]) == 0
    rows = read_csv(out / "sweep.csv")
    series = [r for r in rows if r["role"] == "full" and r["condition"] == "CU" and r["indicator"] == "journals"]
    assert [r["ratio"] for r in series] == [f"{0.5 + 0.05 * i:.2f}" for i in range(11)]
    assert (out / "sweep_full_CU.svg").exists()
    assert "associate ratio 0.60: thresholds (3, 71, 4)" in caplog.text

    # The identity ratio reproduces the agree command.
    agree_csv = tmp_path / "agree.csv"
    main(["agree", "--open", str(results), "--official", str(workspace / "official.csv"),
          "--config", str(workspace / "config.ini"), "--out", str(agree_csv)])
    labels = {"Overall": "overall", "Journals": "journals", "Citations": "citations", "h-index": "h-index"}
    for arow in read_csv(agree_csv):
        for cond in ("CCV", "CDBLP", "CU"):
            srow = next(r for r in rows if r["role"] == arow["role"] and r["condition"] == cond
                        and r["indicator"] == labels[arow["row"]] and r["ratio"] == "1.00")
            assert srow["agreement_pct"] == arow[cond]


def test_sweep_bad_ratios(workspace, results, tmp_path):
    base = ["sweep", "--open", str(results), "--official", str(workspace / "official.csv"), "--out", str(tmp_path)]
    assert main([*base, "--ratios", "0:1:0.1"]) == 2
    assert main([*base, "--ratios", "abc"]) == 2


@pytest.mark.parametrize(
    "text, expected",
    [("0.5:1.0:0.05", [round(0.5 + 0.05 * i, 2) for i in range(11)]), ("1.0", [1.0]), ("0.6, 0.8", [0.6, 0.8])],
)
def test_parse_ratios(text, expected):
    assert parse_ratios(text) == expected


# -- parser contract ---------------------------------------------------------------


COMMANDS = {
    ("extract",): ["--in", "--out"],
    ("harvest",): ["--roster", "--cache", "--confirm-low-score", "--config", "--out", "--no-validate"],
    ("index", "build"): ["--csv", "--out", "--citing-col", "--cited-col"],
    ("run",): ["--roster", "--config", "--out"],
    ("agree",): ["--open", "--official", "--drop-unmatched"],
    ("flips",): ["--open", "--official", "--drop-unmatched"],
    ("sweep",): ["--open", "--official", "--ratios", "--svg", "--drop-unmatched"],
    ("stats",): ["--roster"],
}


@pytest.mark.parametrize("command", list(COMMANDS))
def test_help_lists_flags(command, capsys):
    with pytest.raises(SystemExit) as exit_:
        main([*command, "--help"])
    assert exit_.value.code == 0
    text = capsys.readouterr().out
    for flag in COMMANDS[command]:
        assert flag in text


def test_unknown_flag_exits_2(capsys):
    with pytest.raises(SystemExit) as exit_:
        main(["run", "--bogus"])
    assert exit_.value.code == 2
    assert "usage" in capsys.readouterr().err


def test_parser_requires_a_command():
    with pytest.raises(SystemExit) as exit_:
        build_parser().parse_args([])
    assert exit_.value.code == 2


# -- harvest against the stub server ------------------------------------------------------


def test_harvest_against_stub(recorded_server, tmp_path, monkeypatch):
    for name in ("DBLP", "CROSSREF", "DOI", "COCI"):
        monkeypatch.setenv(f"OPENASN_{name}_URL", recorded_server.url)
    monkeypatch.setenv("OPENASN_USER_AGENT", UA)
    monkeypatch.setenv("OPENASN_RATE_LIMIT", "1000")
    cv = tmp_path / "mm.cv.txt"
    cv.write_text("10.5281/zenodo.7654321\n10.9999/does-not-exist-xyz\n")
    roster = tmp_path / "roster.csv"
    roster.write_text("id,role,name,cv_dois_path\nmm,full,Giulia Verdi,mm.cv.txt\n")
    out = tmp_path / "h"
    assert main(["harvest", "--roster", str(roster), "--cache", str(tmp_path / "cache"), "--out", str(out)]) == 0

    dblp = (out / "dois" / "mm.dblp.txt").read_text().split()
    assert dblp == ["10.1016/j.jdss.2015.02.006", "10.1016/j.jdss.2016.01.009", "10.1109/pdp.2011.00"]
    assert (out / "dois" / "mm.cv.txt").read_text().split() == ["10.5281/zenodo.7654321"]
    meta = {r["doi"]: r for r in read_csv(out / "metadata.csv")}
    assert meta["10.1016/j.jdss.2015.02.006"]["crossref_type"] == "journal-article"
    assert meta["10.1016/j.jdss.2015.02.006"]["dblp_kind"] == "article"
    assert meta["10.1109/pdp.2011.00"]["crossref_type"] == "proceedings-article"

    # The harvested roster feeds straight back into the loader.
    main(["stats", "--roster", str(out / "roster.csv")])

    # A second harvest is served entirely from the cache.
    before = len(recorded_server.requests)
    assert main(["harvest", "--roster", str(roster), "--cache", str(tmp_path / "cache"),
                 "--out", str(tmp_path / "h2")]) == 0
    assert len(recorded_server.requests) == before
    assert (tmp_path / "h2" / "metadata.csv").read_bytes() == (out / "metadata.csv").read_bytes()


def test_harvest_requires_user_agent(recorded_server, tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("OPENASN_DBLP_URL", recorded_server.url)
    monkeypatch.delenv("OPENASN_USER_AGENT", raising=False)
    roster = tmp_path / "roster.csv"
    roster.write_text("id,role,name\nmm,full,Giulia Verdi\n")
    assert main(["harvest", "--roster", str(roster), "--cache", str(tmp_path / "c"), "--out", str(tmp_path)]) == 2
    assert "user agent" in capsys.readouterr().err
