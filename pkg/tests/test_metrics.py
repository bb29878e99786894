import json
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from leanfed.metrics import (
    DepletionRecord,
    RoundRecord,
    RunSummary,
    aggregate_seeds,
    depletion_rounds_or_horizon,
    dumps_json,
    read_depletion_csv,
    read_round_csv,
    summarize_run,
    write_depletion_csv,
    write_round_csv,
    write_summary_json,
)


def _records(accs):
    return [RoundRecord(i + 1, a, 5, 5, 5, 0.5, 1.0) for i, a in enumerate(accs)]


def test_summarize_examples():
    s = summarize_run(_records([0.1, 0.5, 0.3]))
    assert (s.peak_accuracy, s.peak_round, s.final_accuracy) == (0.5, 2, 0.3)
    s = summarize_run(_records([0.1, 0.2, 0.4]))
    assert s.peak_accuracy == s.final_accuracy == 0.4
    assert summarize_run(_records([0.3, 0.3, 0.3])).peak_round == 1


def test_summarize_empty():
    with pytest.raises(ValueError):
        summarize_run([])


def test_aggregate_seeds_examples():
    mean, std = aggregate_seeds([RunSummary(0.6, 3, 0.5), RunSummary(0.6, 3, 0.5)])
    assert mean["peak_accuracy"] == pytest.approx(0.6) and std["peak_accuracy"] == 0.0
    mean, std = aggregate_seeds([RunSummary(0.5, 1, 0.5), RunSummary(0.7, 3, 0.7)])
    assert mean["peak_accuracy"] == pytest.approx(0.6)
    # sqrt((0.1^2 + 0.1^2) / 1)
    assert std["peak_accuracy"] == pytest.approx(0.1414213562373095, rel=1e-12)
    assert std["peak_round"] == pytest.approx(math.sqrt(2))
    _, std = aggregate_seeds([RunSummary(0.42, 7, 0.4)] * 5)
    assert std == {"peak_accuracy": 0.0, "peak_round": 0.0, "final_accuracy": 0.0}


def test_aggregate_seeds_needs_two():
    with pytest.raises(ValueError):
        aggregate_seeds([RunSummary(0.5, 1, 0.5)])


def test_empty_csvs_are_header_only(tmp_path):
    write_round_csv([], tmp_path / "r.csv")
    write_depletion_csv([], tmp_path / "d.csv")
    assert (tmp_path / "r.csv").read_text() == (
        "round,test_accuracy,num_active_start,num_participating,num_completed,mean_eta,"
        "total_energy_remaining\n")
    assert (tmp_path / "d.csv").read_text() == "client_id,depletion_round\n"


finite = st.floats(allow_nan=False, allow_infinity=False)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.tuples(st.floats(0, 1), st.integers(0, 100), finite, finite), max_size=30))
def test_round_csv_round_trip(tmp_path_factory, rows):
    recs = [RoundRecord(i + 1, acc, n, n, n, eta, energy) for i, (acc, n, eta, energy) in enumerate(rows)]
    path = tmp_path_factory.mktemp("csv") / "rounds.csv"
    write_round_csv(recs, path)
    assert read_round_csv(path) == recs


def test_depletion_csv_round_trip(tmp_path):
    recs = [DepletionRecord(0, 3), DepletionRecord(1, None), DepletionRecord(2, 200)]
    write_depletion_csv(recs, tmp_path / "d.csv")
    assert (tmp_path / "d.csv").read_text().splitlines()[2] == "1,"
    assert read_depletion_csv(tmp_path / "d.csv") == recs
    assert depletion_rounds_or_horizon(recs, 200) == [3, 200, 200]


def test_summary_json_layout_and_stability(tmp_path):
    sums = [RunSummary(0.5, 4, 0.45, seed=0), RunSummary(0.7, 9, 0.6, seed=1)]
    write_summary_json(sums, tmp_path / "s.json", {"federation": {"lambda": 0.2}})
    text = (tmp_path / "s.json").read_text()
    doc = json.loads(text)
    assert set(doc) >= {"config", "seeds", "mean", "std"}
    assert doc["seeds"][1] == {"seed": 1, "peak_accuracy": 0.7, "peak_round": 9, "final_accuracy": 0.6}
    assert dumps_json(doc) == text
    write_summary_json(sums, tmp_path / "s2.json", {"federation": {"lambda": 0.2}})
    assert (tmp_path / "s2.json").read_bytes() == (tmp_path / "s.json").read_bytes()


def test_write_failure_names_path(tmp_path):
    target = tmp_path / "missing" / "r.csv"
    with pytest.raises(OSError, match="missing"):
        write_round_csv([], target)
