import json

import jsonschema
import pytest

from noael import datasets
from noael.cli import main
from noael.datamodel import to_csv
from noael.plotting import plot_dataset
from noael.report import ReportDocument, load_schema


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_analyze_wes(capsys):
    code, out, _ = run(capsys, "analyze", "--dataset", "wes", "--method", "ctp-pairwise",
                       "--direction", "less")
    assert code == 0
    doc = json.loads(out)
    assert doc["decision"]["noael"] == "200"
    jsonschema.validate(doc, load_schema())


def test_analyze_epi_csv(tmp_path, capsys):
    path = tmp_path / "epi.csv"
    path.write_text(to_csv(datasets.load("epi")))
    code, out, _ = run(capsys, "analyze", "--input", str(path), "--endpoint", "score",
                       "--method", "ctp-nonparametric", "--direction", "greater")
    assert code == 0
    assert json.loads(out)["decision"]["noael"] == "2"


def test_missing_input(capsys):
    code, _, err = run(capsys, "analyze", "--input", "missing.csv", "--endpoint", "continuous")
    assert code == 3
    assert "missing.csv" in err


def test_usage_errors(capsys):
    assert run(capsys, "analyze", "--method", "nope")[0] == 2
    assert run(capsys, "analyze")[0] == 2
    assert run(capsys, "analyze", "--dataset", "wes", "--alpha", "2")[0] == 2


def test_method_endpoint_mismatch(capsys):
    code, _, err = run(capsys, "analyze", "--dataset", "epi", "--method", "ctp-pairwise")
    assert code == 3 and "score" in err


def test_parse_error_exit(tmp_path, capsys):
    path = tmp_path / "bad.csv"
    path.write_text("dose,response\n0,1\n0,x\n")
    assert run(capsys, "analyze", "--input", str(path), "--endpoint", "continuous")[0] == 3


def test_numeric_failure_exit(tmp_path, capsys):
    path = tmp_path / "flat.csv"
    path.write_text("dose,response\n0,1\n0,1\n5,1\n5,1\n")
    code, _, _ = run(capsys, "analyze", "--input", str(path), "--endpoint", "continuous",
                     "--method", "ctp-ratio")
    assert code == 4


@pytest.mark.parametrize("method", ["dunnett", "ctp-pairwise"])
def test_tsv_json_same_numbers(capsys, method):
    args = ["analyze", "--dataset", "wes", "--method", method, "--direction", "less"]
    _, js, _ = run(capsys, *args)
    _, tsv, _ = run(capsys, *args, "--output", "tsv")
    doc = json.loads(js)
    lines = [line.split("\t") for line in tsv.splitlines() if not line.startswith("#")][1:]
    for row, line in zip(doc["rows"], lines):
        assert float(line[2]) == row["raw_p"] and float(line[3]) == row["adjusted_p"]


def test_report_bit_stable_and_roundtrip(capsys):
    args = ["analyze", "--dataset", "wes", "--method", "dunnett", "--direction", "less",
            "--full-precision", "--seed", "7"]
    _, a, _ = run(capsys, *args)
    _, b, _ = run(capsys, *args)
    assert a == b
    doc = ReportDocument.from_json(a)
    assert json.loads(doc.to_json(full_precision=True)) == json.loads(a)


def test_rounding_six_digits(capsys):
    _, out, _ = run(capsys, "analyze", "--dataset", "wes", "--direction", "less")
    row = json.loads(out)["rows"][3]
    assert row["raw_p"] == float(f"{row['raw_p']:.6g}")
    _, full, _ = run(capsys, "analyze", "--dataset", "wes", "--direction", "less", "--full-precision")
    assert json.loads(full)["rows"][1]["raw_p"] != json.loads(out)["rows"][1]["raw_p"]


def test_figures_written(tmp_path, capsys):
    code, _, _ = run(capsys, "analyze", "--dataset", "tamh", "--output", "tsv",
                     "--figure-dir", str(tmp_path))
    assert code == 0
    assert (tmp_path / "tamh_raw.svg").exists()
    assert (tmp_path / "tamh_ctp-ratio_pvalues.svg").read_text().startswith("<?xml")


def test_plot_counts_and_determinism(tmp_path, capsys):
    assert plot_dataset(datasets.load("wes"), tmp_path / "a.svg") == 5
    assert plot_dataset(datasets.load("tamh"), tmp_path / "t.svg") == 4
    code, _, _ = run(capsys, "plot", "--dataset", "wes", "--out", str(tmp_path / "b.svg"))
    assert code == 0
    plot_dataset(datasets.load("wes"), tmp_path / "c.svg", title="wes")
    assert (tmp_path / "b.svg").read_bytes() == (tmp_path / "c.svg").read_bytes()


def test_plot_incidence(tmp_path):
    from noael.datamodel import parse_csv

    ds = parse_csv("dose,time,status\n0,104,0\n0,90,1\n25,104,1\n25,60,0\n", "incidence")
    assert plot_dataset(ds, tmp_path / "m.svg") == 2


def test_plot_rejects_empty_group(tmp_path, capsys):
    path = tmp_path / "one.csv"
    path.write_text("dose,response\n0,1\n0,2\n5,3\n")
    assert run(capsys, "plot", "--input", str(path), "--endpoint", "continuous")[0] == 3


def test_datasets_listing(capsys, monkeypatch):
    monkeypatch.delenv(datasets.BRONCH_ENV, raising=False)
    code, out, _ = run(capsys, "datasets", "--json")
    items = {d["name"]: d["n"] for d in json.loads(out)}
    assert items == {"wes": 50, "tamh": 75, "epi": 86}
    code, out, _ = run(capsys, "datasets")
    assert code == 0 and "wes" in out


def test_bronch_from_env(tmp_path, capsys, monkeypatch):
    import hashlib

    path = tmp_path / "bronch.csv"
    text = "dose,time,status\n" + "".join(
        f"{d},{t},{s}\n" for d in (0, 25, 50, 100) for t, s in ((104, 0), (90, 1), (70, 0)))
    path.write_text(text)
    monkeypatch.setenv(datasets.BRONCH_ENV, str(path))
    _, out, _ = run(capsys, "datasets", "--json")
    assert len(json.loads(out)) == 4
    code, out, _ = run(capsys, "analyze", "--dataset", "bronch")
    assert code == 0 and json.loads(out)["metadata"]["method"] == "ctp-poly3"
    monkeypatch.setenv(datasets.BRONCH_SHA256_ENV, hashlib.sha256(b"other").hexdigest())
    assert run(capsys, "analyze", "--dataset", "bronch")[0] == 3


def test_mvt_check(capsys):
    code, out, _ = run(capsys, "mvt-check", "--upper", "0,0", "--corr", "0")
    assert code == 0
    assert json.loads(out)["value"] == pytest.approx(0.25, abs=1e-5)
    code, out, _ = run(capsys, "mvt-check", "--upper", "1,1", "--corr", "1,0.9;0.9,1", "--df", "5")
    assert code == 0
    code, _, _ = run(capsys, "mvt-check", "--upper", "1,1,1", "--corr", "1,0.9,-0.9;0.9,1,0.9;-0.9,0.9,1")
    assert code == 4
