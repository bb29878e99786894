"""Command-line front end.

    leanfed run    --config exp.toml [--set federation.lambda=0.2] [--seeds 0,1] [--out DIR]
    leanfed sweep  --config exp.toml --axis gamma=0.5,1.0,1000 --axis policy=fedavg,leanfed_adaptive
    leanfed report DIR

Exit codes: 0 ok, 2 usage or configuration error, 3 I/O error.
"""

from __future__ import annotations

import argparse
import copy
import itertools
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import config as C
from .errors import ConfigError, ParseError
from .experiment import run_seed
from .metrics import (
    depletion_rounds_or_horizon,
    dumps_json,
    read_depletion_csv,
    summarize_run,
    write_depletion_csv,
    write_round_csv,
    write_summary_json,
)

log = logging.getLogger("leanfed")

EXIT_OK, EXIT_USAGE, EXIT_IO = 0, 2, 3
SUMMARY_NAME = "summary.json"
MANIFEST_NAME = "manifest.json"


def _parse_seeds(text: str) -> list[int]:
    try:
        seeds = [int(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise ConfigError(f"--seeds: expected comma-separated integers, got {text!r}") from None
    if not seeds or any(s < 0 for s in seeds):
        raise ConfigError("--seeds: expected non-negative integers")
    return seeds


def resolve_config(config_path, overrides, seeds=None, out=None) -> dict:
    items = list(overrides or [])
    if seeds:
        items.append(f"seeds=[{','.join(str(s) for s in _parse_seeds(seeds))}]")
    cfg = C.load(config_path, items)
    if out is not None:
        cfg["output_dir"] = str(out)
    if not cfg["output_dir"]:
        raise ConfigError("output_dir: required (set it in the config or pass --out)")
    return cfg


def execute(cfg: dict) -> Path:
    """Run every seed of ``cfg`` and write its outputs. Returns the output dir."""
    out = Path(cfg["output_dir"])
    out.mkdir(parents=True, exist_ok=True)
    fp = C.fingerprint(cfg)
    summaries = []
    for seed in cfg["seeds"]:
        log.info("run seed=%d policy=%s lambda=%s", seed, cfg["federation"]["policy"],
                 cfg["federation"]["lambda"])
        result = run_seed(cfg, seed)
        write_round_csv(result.rounds, out / f"rounds_seed{seed}.csv")
        write_depletion_csv(result.depletions, out / f"depletion_seed{seed}.csv")
        summaries.append(summarize_run(result.rounds, seed, fp))
    described = {k: v for k, v in cfg.items() if k != "output_dir"}
    described["fingerprint"] = fp
    described["dataset_fingerprint"] = C.dataset_fingerprint(cfg)
    write_summary_json(summaries, out / SUMMARY_NAME, described)
    return out


def cmd_run(args) -> int:
    cfg = resolve_config(args.config, args.set, args.seeds, args.out)
    out = execute(cfg)
    print(f"wrote {out}")
    return EXIT_OK


def parse_axis(spec: str) -> tuple[list[str], list[tuple]]:
    """``key=v1,v2`` or zipped ``k1+k2=a:x,b:y`` -> (keys, list of value tuples)."""
    lhs, sep, rhs = spec.partition("=")
    if not sep or not lhs or not rhs:
        raise ConfigError(f"--axis {spec!r}: expected KEY=V1,V2,...")
    keys = [k.strip() for k in lhs.split("+")]
    for key in keys:
        C.resolve_key(key)
    values = []
    for item in rhs.split(","):
        parts = item.split(":") if len(keys) > 1 else [item]
        if len(parts) != len(keys):
            raise ConfigError(f"--axis {spec!r}: value {item!r} needs {len(keys)} ':'-separated parts")
        values.append(tuple(C.parse_value(p.strip()) for p in parts))
    return keys, values


def _cell_name(pairs) -> str:
    return "__".join(f"{k.split('.')[-1]}={v}" for k, v in pairs) or "base"


def cmd_sweep(args) -> int:
    base = resolve_config(args.config, args.set, args.seeds, args.out)
    axes = [parse_axis(a) for a in (args.axis or [])]
    if not axes:
        execute(base)
        print(f"wrote {base['output_dir']}")
        return EXIT_OK

    root = Path(base["output_dir"])
    root.mkdir(parents=True, exist_ok=True)
    cells = []
    for combo in itertools.product(*[[(keys, vals) for vals in values] for keys, values in axes]):
        pairs = [(k, v) for keys, vals in combo for k, v in zip(keys, vals)]
        name = _cell_name(pairs)
        entry = {"dir": name, "overrides": {k: v for k, v in pairs}}
        try:
            cfg = copy.deepcopy(base)
            for k, v in pairs:
                C.set_value(cfg, k, v)
            C.validate(cfg)
            cfg["output_dir"] = str(root / name)
            execute(cfg)
            entry.update(status="ok", exit_code=EXIT_OK, fingerprint=C.fingerprint(cfg))
        except ConfigError as exc:
            entry.update(status="failed", exit_code=EXIT_USAGE, error=str(exc))
        except OSError as exc:
            entry.update(status="failed", exit_code=EXIT_IO, error=str(exc))
        except Exception as exc:  # noqa: BLE001 - a broken cell must not abort the sweep
            entry.update(status="failed", exit_code=1, error=f"{type(exc).__name__}: {exc}")
        if entry["status"] != "ok":
            log.error("cell %s failed: %s", name, entry["error"])
        cells.append(entry)

    (root / MANIFEST_NAME).write_text(dumps_json({"cells": cells}))
    failed = sum(c["status"] != "ok" for c in cells)
    print(f"wrote {len(cells)} cells to {root} ({failed} failed)")
    return EXIT_OK


def _method_label(fed: dict) -> str:
    if fed["policy"] == "fedavg":
        lam = fed["lambda"]
        return "fedavg" if lam == 1.0 else f"fedavg ({lam * 100:g}%)"
    return fed["policy"] if fed["lambda"] == 1.0 else f"{fed['policy']} ({fed['lambda'] * 100:g}%)"


def _column_label(cfg: dict) -> str:
    return f"gamma={cfg['partition']['gamma']:g} R={cfg['federation']['total_rounds']}"


def load_cells(results_dir: Path) -> list[dict]:
    cells = []
    for path in sorted(results_dir.rglob(SUMMARY_NAME)):
        doc = json.loads(path.read_text())
        cfg = doc["config"]
        total_rounds = cfg["federation"]["total_rounds"]
        depletion = []
        for csv_path in sorted(path.parent.glob("depletion_seed*.csv")):
            depletion.extend(depletion_rounds_or_horizon(read_depletion_csv(csv_path), total_rounds))
        cells.append({"path": path.parent, "doc": doc, "cfg": cfg, "depletion": depletion})
    return cells


def render_report(cells) -> str:
    rows = sorted({_method_label(c["cfg"]["federation"]) for c in cells})
    cols = sorted({_column_label(c["cfg"]) for c in cells})
    table = {}
    for c in cells:
        key = (_method_label(c["cfg"]["federation"]), _column_label(c["cfg"]))
        if key in table:
            raise ConfigError(f"two results for {key[0]} / {key[1]}: {table[key]['path']} and {c['path']}")
        table[key] = c

    best = {}
    for col in cols:
        means = [table[(r, col)]["doc"]["mean"]["peak_accuracy"] for r in rows if (r, col) in table]
        best[col] = max(means)

    def cell_text(r, col):
        c = table.get((r, col))
        if c is None:
            return "-"
        mean = c["doc"]["mean"]["peak_accuracy"] * 100
        std = c["doc"]["std"]["peak_accuracy"]
        text = f"{mean:.2f} ± {std * 100:.2f}" if std is not None else f"{mean:.2f} ± n/a"
        return text + (" *" if c["doc"]["mean"]["peak_accuracy"] == best[col] else "  ")

    lines = ["Peak test accuracy (%), mean ± sample std over seeds; * marks the column maximum", ""]
    width = max(len(r) for r in rows + ["method"])
    cw = [max(len(col), *(len(cell_text(r, col)) for r in rows)) for col in cols]
    lines.append("  ".join(["method".ljust(width)] + [col.rjust(w) for col, w in zip(cols, cw)]))
    for r in rows:
        lines.append("  ".join([r.ljust(width)] + [cell_text(r, col).rjust(w) for col, w in zip(cols, cw)]))

    lines += ["", "Depletion round quartiles, pooled over seeds (survivors counted as R)", ""]
    head = ("cell", "min", "q1", "median", "q3", "max")
    qrows = []
    for c in sorted(cells, key=lambda c: (_column_label(c["cfg"]), _method_label(c["cfg"]["federation"]))):
        label = f"{_method_label(c['cfg']['federation'])} / {_column_label(c['cfg'])}"
        if c["depletion"]:
            qs = np.percentile(c["depletion"], [0, 25, 50, 75, 100])
            qrows.append((label, *(f"{q:g}" for q in qs)))
        else:
            qrows.append((label, *("-",) * 5))
    widths = [max(len(str(row[i])) for row in qrows + [head]) for i in range(len(head))]
    lines.append("  ".join(h.ljust(w) if i == 0 else h.rjust(w) for i, (h, w) in enumerate(zip(head, widths))))
    for row in qrows:
        lines.append("  ".join(v.ljust(w) if i == 0 else v.rjust(w) for i, (v, w) in enumerate(zip(row, widths))))
    return "\n".join(lines) + "\n"


def cmd_report(args) -> int:
    results_dir = Path(args.results_dir)
    if not results_dir.is_dir():
        raise ConfigError(f"{results_dir}: not a directory")
    cells = load_cells(results_dir)
    if not cells:
        raise ConfigError(f"no {SUMMARY_NAME} files under {results_dir}")
    dataset_fps = {c["cfg"].get("dataset_fingerprint") for c in cells}
    if len(dataset_fps) > 1:
        raise ConfigError(f"refusing to merge cells built on different datasets: {sorted(map(str, dataset_fps))}")
    sys.stdout.write(render_report(cells))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="leanfed", description=__doc__.split("\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", type=Path, help="TOML experiment config")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override a config value (repeatable)")
        p.add_argument("--out", type=Path, help="output directory (overrides output_dir)")
        p.add_argument("--seeds", help="comma-separated seeds, e.g. 0,1,2")

    p_run = sub.add_parser("run", help="simulate one configuration for each seed")
    common(p_run)
    p_run.set_defaults(func=cmd_run)

    p_sweep = sub.add_parser("sweep", help="run the Cartesian product of axes")
    common(p_sweep)
    p_sweep.add_argument("--axis", action="append", metavar="KEY=V1,V2",
                         help="sweep axis; zip keys with K1+K2=a:x,b:y (repeatable)")
    p_sweep.set_defaults(func=cmd_sweep)

    p_report = sub.add_parser("report", help="tabulate summaries under a results directory")
    p_report.add_argument("results_dir")
    p_report.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (ConfigError, ParseError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
