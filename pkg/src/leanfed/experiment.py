"""Glue from a resolved config dict to one simulated federation per seed."""

from __future__ import annotations

from functools import lru_cache

from .data import PartitionConfig, generate_synthetic, load_csv, partition_dirichlet
from .energy import EnergyConfig, sample_fleet
from .federation import FederationConfig, run_federation
from .model import TrainConfig
from .rng import derive_int


@lru_cache(maxsize=4)
def _synthetic(num_classes, dim, n_train, n_test, class_separation, seed):
    return generate_synthetic(num_classes, dim, n_train, n_test, class_separation, seed)


def build_datasets(cfg: dict):
    ds = cfg["dataset"]
    if ds["source"] == "csv":
        train = load_csv(ds["train_csv"], "train")
        test = load_csv(ds["test_csv"], "test")
        return train, test
    return _synthetic(ds["num_classes"], ds["dim"], ds["n_train"], ds["n_test"],
                      ds["class_separation"], ds["seed"])


def federation_config(cfg: dict, seed: int) -> FederationConfig:
    fed = cfg["federation"]
    return FederationConfig(
        total_rounds=fed["total_rounds"],
        participation_rate=fed["lambda"],
        policy=fed["policy"],
        num_clients=cfg["partition"]["num_clients"],
        train_config=TrainConfig(fed["learning_rate"], fed["batch_size"],
                                 fed["local_epochs"], fed["weight_decay"]),
        master_seed=seed,
    )


def setup_seed(cfg: dict, seed: int):
    """Datasets, shards and a fresh fleet for one seed.

    The partition and the batteries are redrawn for every seed; the dataset
    itself is fixed by ``dataset.seed``.
    """
    train, test = build_datasets(cfg)
    part = cfg["partition"]
    shards = partition_dirichlet(train, PartitionConfig(
        part["num_clients"], part["gamma"], part["min_shard_size"], derive_int(seed, "partition")))
    en = cfg["energy"]
    energy_cfg = EnergyConfig(en["alpha_mean"], en["alpha_var"], en["beta_mean"], en["beta_var"],
                              en["clip_lo"], en["clip_hi"], derive_int(seed, "energy"))
    fleet = sample_fleet([len(s) for s in shards], train.n,
                         cfg["federation"]["total_rounds"], energy_cfg)
    return train, test, shards, fleet


def run_seed(cfg: dict, seed: int, workers: int | None = None, backend=None, **kwargs):
    train, test, shards, fleet = setup_seed(cfg, seed)
    workers = cfg["federation"]["workers"] if workers is None else workers
    return run_federation(train, test, shards, fleet, federation_config(cfg, seed),
                          workers=workers, backend=backend, **kwargs)
