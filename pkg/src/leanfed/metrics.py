"""Per-round and per-device records, multi-seed statistics, CSV/JSON output."""

from __future__ import annotations

import csv
import json
import statistics
from dataclasses import dataclass, field, fields
from pathlib import Path

ROUND_FIELDS = ("round", "test_accuracy", "num_active_start", "num_participating",
                "num_completed", "mean_eta", "total_energy_remaining")
DEPLETION_FIELDS = ("client_id", "depletion_round")
SUMMARY_FIELDS = ("peak_accuracy", "peak_round", "final_accuracy")


@dataclass(frozen=True)
class RoundRecord:
    round: int
    test_accuracy: float
    num_active_start: int
    num_participating: int
    num_completed: int
    mean_eta: float
    total_energy_remaining: float


@dataclass(frozen=True)
class DepletionRecord:
    client_id: int
    depletion_round: int | None  # None: survived every round


@dataclass
class MetricsLog:
    num_clients: int
    total_rounds: int
    rounds: list = field(default_factory=list)
    depletions: list = field(default_factory=list)
    # sum of aggregation weights per round, None on stalled rounds
    weight_sums: list = field(default_factory=list)
    outcomes: list = field(default_factory=list)
    final_params: object = None


@dataclass(frozen=True)
class RunSummary:
    peak_accuracy: float
    peak_round: int
    final_accuracy: float
    seed: int = 0
    fingerprint: str = ""


def summarize_run(records, seed: int = 0, fingerprint: str = "") -> RunSummary:
    """Peak accuracy (earliest round on ties) and last-round accuracy."""
    if not records:
        raise ValueError("no round records")
    best = records[0]
    for rec in records[1:]:
        if rec.test_accuracy > best.test_accuracy:
            best = rec
    return RunSummary(best.test_accuracy, best.round, records[-1].test_accuracy, seed, fingerprint)


def aggregate_seeds(summaries) -> tuple[dict, dict]:
    """Mean and sample standard deviation (n - 1) of each summary field."""
    if len(summaries) < 2:
        raise ValueError(f"need at least 2 runs to aggregate, got {len(summaries)}")
    mean, std = {}, {}
    for name in SUMMARY_FIELDS:
        values = [float(getattr(s, name)) for s in summaries]
        mean[name] = statistics.fmean(values)
        std[name] = statistics.stdev(values)
    return mean, std


def depletion_rounds_or_horizon(depletions, total_rounds: int) -> list[int]:
    """Depletion rounds with survivors counted as ``total_rounds``."""
    return [total_rounds if d.depletion_round is None else d.depletion_round for d in depletions]


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _write_csv(path, header, rows):
    path = Path(path)
    try:
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(header)
            for row in rows:
                writer.writerow([_fmt(v) for v in row])
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc


def write_round_csv(records, path) -> None:
    _write_csv(path, ROUND_FIELDS, ([getattr(r, f) for f in ROUND_FIELDS] for r in records))


def write_depletion_csv(records, path) -> None:
    _write_csv(path, DEPLETION_FIELDS, ((r.client_id, r.depletion_round) for r in records))


def read_round_csv(path) -> list[RoundRecord]:
    types = {f.name: f.type for f in fields(RoundRecord)}
    out = []
    with Path(path).open(newline="") as fh:
        for row in csv.DictReader(fh):
            out.append(RoundRecord(**{
                k: (int(v) if types[k] in (int, "int") else float(v)) for k, v in row.items()
            }))
    return out


def read_depletion_csv(path) -> list[DepletionRecord]:
    with Path(path).open(newline="") as fh:
        return [
            DepletionRecord(int(row["client_id"]),
                            int(row["depletion_round"]) if row["depletion_round"] else None)
            for row in csv.DictReader(fh)
        ]


def summary_document(summaries, config: dict) -> dict:
    seeds = [{"seed": s.seed, **{k: getattr(s, k) for k in SUMMARY_FIELDS}} for s in summaries]
    if len(summaries) >= 2:
        mean, std = aggregate_seeds(summaries)
    else:
        mean = {k: float(getattr(summaries[0], k)) for k in SUMMARY_FIELDS} if summaries else {}
        std = {k: None for k in SUMMARY_FIELDS}
    return {"config": config, "seeds": seeds, "mean": mean, "std": std,
            "std_kind": "sample standard deviation (n-1)"}


def dumps_json(doc) -> str:
    # allow_nan=False: NaN has no portable JSON form
    return json.dumps(doc, indent=2, sort_keys=True, allow_nan=False) + "\n"


def write_summary_json(summaries, path, config: dict | None = None) -> None:
    path = Path(path)
    try:
        path.write_text(dumps_json(summary_document(summaries, config or {})))
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc

