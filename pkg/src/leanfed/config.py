"""Declarative experiment configuration (TOML) with dotted-key overrides.

A config file holds the sections ``[dataset]``, ``[partition]``, ``[energy]``
and ``[federation]`` plus top-level ``seeds`` and ``output_dir``. Anything
omitted takes the default below; unknown keys are rejected.
"""

from __future__ import annotations

import copy
import hashlib
import json
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .errors import ConfigError
from .federation import POLICIES

DEFAULTS = {
    "dataset": {
        "source": "synthetic",
        "num_classes": 10,
        "dim": 32,
        "n_train": 10000,
        "n_test": 2000,
        "class_separation": 2.5,
        "seed": 0,
        "train_csv": "",
        "test_csv": "",
    },
    "partition": {
        "num_clients": 50,
        "gamma": 0.5,
        "min_shard_size": 1,
    },
    "energy": {
        "alpha_mean": 0.5,
        "alpha_var": 0.5,
        "beta_mean": 0.5,
        "beta_var": 0.5,
        "clip_lo": 0.1,
        "clip_hi": 1.0,
    },
    "federation": {
        "total_rounds": 200,
        "lambda": 1.0,
        "policy": "leanfed_adaptive",
        "learning_rate": 0.05,
        "batch_size": 64,
        "local_epochs": 5,
        "weight_decay": 1e-4,
        "workers": 1,
    },
    "seeds": [0, 1, 2, 3, 4],
    "output_dir": None,
}

# settings that never change results and so stay out of the fingerprint
_NOT_FINGERPRINTED = {("output_dir",), ("federation", "workers")}


def _walk(tree, prefix=()):
    for key, value in tree.items():
        if isinstance(value, dict):
            yield from _walk(value, prefix + (key,))
        else:
            yield prefix + (key,), value


def resolve_key(key: str) -> tuple[str, ...]:
    """Map ``federation.lambda`` or a unique leaf name like ``lambda`` to a path."""
    parts = tuple(key.split("."))
    if _lookup(DEFAULTS, parts) is not _MISSING:
        return parts
    if len(parts) == 1:
        hits = [path for path, _ in _walk(DEFAULTS) if path[-1] == key]
        if len(hits) == 1:
            return hits[0]
    raise ConfigError(f"unknown config key {key!r}")


_MISSING = object()


def _lookup(tree, path):
    node = tree
    for part in path:
        if not isinstance(node, dict) or part not in node:
            return _MISSING
        node = node[part]
    return node


def parse_value(text: str):
    """Parse an override value as a TOML literal, falling back to a bare string."""
    try:
        return tomllib.loads(f"v = {text}")["v"]
    except tomllib.TOMLDecodeError:
        return text


def _coerce(path, value, default):
    name = ".".join(path)
    if path == ("seeds",):
        if isinstance(value, int) and not isinstance(value, bool):
            value = [value]
        if (not isinstance(value, list) or not value
                or not all(isinstance(v, int) and not isinstance(v, bool) and v >= 0 for v in value)):
            raise ConfigError(f"{name}: expected a non-empty list of non-negative integers")
        return list(value)
    if path == ("output_dir",):
        if value is not None and not isinstance(value, str):
            raise ConfigError(f"{name}: expected a path string")
        return value
    if isinstance(value, bool):
        raise ConfigError(f"{name}: booleans are not accepted")
    if isinstance(default, float):
        if not isinstance(value, (int, float)):
            raise ConfigError(f"{name}: expected a number, got {value!r}")
        return float(value)
    if isinstance(default, int):
        if isinstance(value, float) and value.is_integer():
            value = int(value)
        if not isinstance(value, int):
            raise ConfigError(f"{name}: expected an integer, got {value!r}")
        return value
    if isinstance(default, str):
        if not isinstance(value, (str, int, float)):
            raise ConfigError(f"{name}: expected a string, got {value!r}")
        return str(value)
    raise ConfigError(f"{name}: unsupported value {value!r}")


def set_value(cfg: dict, key: str, value) -> None:
    path = resolve_key(key)
    node = cfg
    for part in path[:-1]:
        node = node[part]
    node[path[-1]] = _coerce(path, value, _lookup(DEFAULTS, path))


def merge(raw: dict) -> dict:
    cfg = copy.deepcopy(DEFAULTS)
    for path, value in _walk(raw):
        if _lookup(DEFAULTS, path) is _MISSING or isinstance(_lookup(DEFAULTS, path), dict):
            raise ConfigError(f"unknown config key {'.'.join(path)!r}")
        set_value(cfg, ".".join(path), value)
    for section, value in raw.items():
        if isinstance(DEFAULTS.get(section), dict) and not isinstance(value, dict):
            raise ConfigError(f"{section}: expected a table")
    return cfg


def validate(cfg: dict) -> dict:
    ds, part, en, fed = cfg["dataset"], cfg["partition"], cfg["energy"], cfg["federation"]

    def need(cond, msg):
        if not cond:
            raise ConfigError(msg)

    need(ds["source"] in ("synthetic", "csv"), "dataset.source: expected 'synthetic' or 'csv'")
    if ds["source"] == "csv":
        need(ds["train_csv"] and ds["test_csv"], "dataset.train_csv and dataset.test_csv are required for csv source")
    else:
        need(ds["num_classes"] >= 2, "dataset.num_classes: must be >= 2")
        need(ds["dim"] >= 2, "dataset.dim: must be >= 2")
        need(ds["n_train"] >= 1 and ds["n_test"] >= 1, "dataset.n_train/n_test: must be positive")
        need(ds["class_separation"] > 0, "dataset.class_separation: must be > 0")
    need(part["num_clients"] >= 1, "partition.num_clients: must be >= 1")
    need(part["gamma"] > 0, "partition.gamma: must be > 0")
    need(part["min_shard_size"] >= 1, "partition.min_shard_size: must be >= 1")
    need(0 < en["clip_lo"] <= en["clip_hi"], "energy.clip_lo/clip_hi: need 0 < clip_lo <= clip_hi")
    need(en["alpha_var"] >= 0 and en["beta_var"] >= 0, "energy.*_var: must be >= 0")
    need(fed["total_rounds"] >= 1, "federation.total_rounds: must be >= 1")
    need(0 < fed["lambda"] <= 1, "federation.lambda: must lie in (0, 1]")
    need(fed["policy"] in POLICIES, f"federation.policy: expected one of {', '.join(POLICIES)}")
    need(fed["learning_rate"] >= 0, "federation.learning_rate: must be >= 0")
    need(fed["batch_size"] >= 1, "federation.batch_size: must be >= 1")
    need(fed["local_epochs"] >= 1, "federation.local_epochs: must be >= 1")
    need(fed["weight_decay"] >= 0, "federation.weight_decay: must be >= 0")
    need(fed["workers"] >= 1, "federation.workers: must be >= 1")
    return cfg


def load(path=None, overrides=()) -> dict:
    """Read ``path`` (optional), apply ``KEY=VALUE`` overrides and validate."""
    raw = {}
    if path is not None:
        try:
            raw = tomllib.loads(Path(path).read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc.strerror or exc}") from exc
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from exc
    cfg = merge(raw)
    for item in overrides:
        key, sep, text = item.partition("=")
        if not sep:
            raise ConfigError(f"override {item!r} is not KEY=VALUE")
        set_value(cfg, key.strip(), parse_value(text.strip()))
    return validate(cfg)


def _digest(obj) -> str:
    blob = json.dumps(obj, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def fingerprint(cfg: dict) -> str:
    trimmed = copy.deepcopy(cfg)
    for path in _NOT_FINGERPRINTED:
        node = trimmed
        for part in path[:-1]:
            node = node[part]
        node.pop(path[-1], None)
    return _digest(trimmed)


def dataset_fingerprint(cfg: dict) -> str:
    return _digest(cfg["dataset"])
