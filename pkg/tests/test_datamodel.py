import io

import pytest
from hypothesis import given, settings, strategies as st

from noael import datasets
from noael.datamodel import (
    AnalysisConfig, ContinuousDataset, DataError, Direction, EndpointKind, IncidenceDataset,
    ScoreDataset, parse_csv, summarize, to_csv,
)


def test_wes_parses_to_five_groups(wes):
    assert isinstance(wes, ContinuousDataset)
    assert wes.labels == ["0", "100", "200", "500", "750"]
    assert wes.group_sizes.tolist() == [10, 10, 10, 10, 10]


def test_epi_group_sizes(epi):
    assert isinstance(epi, ScoreDataset)
    assert epi.labels == ["0", "2", "6", "15"]
    assert epi.group_sizes.tolist() == [29, 25, 27, 5]


def test_tamh_group_sizes(tamh):
    assert tamh.group_sizes.tolist() == [19, 20, 18, 18]
    assert tamh.n_total == 75


def test_empty_stream():
    with pytest.raises(DataError, match="no data rows"):
        parse_csv(b"", "continuous")
    with pytest.raises(DataError, match="no data rows"):
        parse_csv(b"dose,response\n", "continuous")


@pytest.mark.parametrize("text, msg", [
    ("dose,value\n0,1\n0,2\n1,3\n1,4\n", "missing column"),
    ("dose,response\n0,1\n0,x\n1,3\n1,4\n", "non-numeric"),
    ("dose,response\n0,1\n0,2\n1,3\n", "at least 2"),
    ("dose,response,dose\n0,1,0\n", "duplicate header"),
    ("dose,response\n0,1\n0,\n1,3\n1,4\n", "missing value"),
    ("dose,response\n0,1\n0,2\n1,3\n1.0,4\n1,5\n", "tied dose"),
])
def test_parse_errors(text, msg):
    with pytest.raises(DataError, match=msg):
        parse_csv(text, "continuous")


def test_incidence_status_must_be_binary():
    text = "dose,time,status\n0,10,0\n0,10,1\n1,10,2\n1,5,0\n"
    with pytest.raises(DataError, match="status"):
        parse_csv(text, "incidence")


def test_score_must_be_integer():
    with pytest.raises(DataError, match="score"):
        parse_csv("dose,response\n0,1\n0,2\n1,1.5\n1,0\n", "score")


def test_rows_in_any_order_sort_by_dose():
    text = "dose,response\n100,3\n0,1\n20,7\n0,2\n100,4\n20,8\n"
    ds = parse_csv(text, "continuous")
    assert ds.labels == ["0", "20", "100"]
    assert [g.dose_value for g in ds.groups] == [0.0, 20.0, 100.0]
    assert ds.observations[1] == (7.0, 8.0)


def test_control_label_override():
    text = "dose,response\nvehicle,1\nvehicle,2\n5,3\n5,4\n"
    ds = parse_csv(text, "continuous", control_label="vehicle")
    assert ds.labels == ["vehicle", "5"]
    assert ds.groups[0].dose_value == 0.0
    with pytest.raises(DataError):
        parse_csv(text, "continuous")


def test_incidence_parse():
    text = "dose,time,status\n0,104,0\n0,80,1\n25,104,1\n25,52,0\n"
    ds = parse_csv(io.BytesIO(text.encode()), EndpointKind.INCIDENCE)
    assert isinstance(ds, IncidenceDataset)
    assert ds.study_max_time == 104.0
    assert ds.animals[1][1].status == 0


@pytest.mark.parametrize("name", ["wes", "tamh", "epi"])
def test_roundtrip_bundled(name):
    ds = datasets.load(name)
    again = parse_csv(to_csv(ds), ds.kind)
    assert again == ds


@settings(max_examples=50, deadline=None)
@given(st.lists(st.tuples(st.sampled_from([0, 5, 50, 500]), st.floats(-1e6, 1e6, allow_nan=False)),
                min_size=8, max_size=40))
def test_roundtrip_random(rows):
    from collections import Counter
    counts = Counter(d for d, _ in rows)
    if len(counts) < 2 or min(counts.values()) < 2:
        return
    text = "dose,response\n" + "".join(f"{d},{y!r}\n" for d, y in rows)
    ds = parse_csv(text, "continuous")
    assert parse_csv(to_csv(ds), "continuous") == ds
    assert [g.dose_value for g in ds.groups] == sorted(g.dose_value for g in ds.groups)


def test_summarize_constant_group():
    ds = parse_csv("dose,response\n0,1.0\n0,1.0\n0,1.0\n1,2\n1,3\n", "continuous")
    s = summarize(ds)
    assert s[0].mean == 1.0 and s[0].sd == 0.0


def test_summarize_wes_control_mean(wes):
    # 5.7+10.2+13.9+10.3+1.3+12+14+15.1+8.8+12.7 = 104.0
    assert summarize(wes)[0].mean == pytest.approx(10.4, abs=1e-12)


def test_summarize_epi_top_group(epi):
    assert summarize(epi)[3].n == 5


@pytest.mark.parametrize("name", ["wes", "tamh", "epi"])
def test_summary_counts_match(name):
    ds = datasets.load(name)
    assert [r.n for r in summarize(ds)] == ds.group_sizes.tolist()


def test_incidence_summary():
    ds = parse_csv("dose,time,status\n0,10,0\n0,10,1\n1,10,1\n1,5,1\n", "incidence")
    s = summarize(ds)
    assert s[0].tumor_proportion == 0.5 and s[1].tumor_proportion == 1.0


def test_config_validation():
    assert AnalysisConfig(direction="decrease-is-adverse").direction is Direction.LESS
    for bad in ({"alpha": 0.0}, {"alpha": 1.0}, {"qmc_error_target": 0}, {"hc_kind": "hc9"}):
        with pytest.raises(ValueError):
            AnalysisConfig(**bad)
