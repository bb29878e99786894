"""Round-based federation: participant sampling, data-fraction policies,
the per-device local round with its energy guards, and weighted averaging.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import model as M
from .data import ClientShard, Dataset
from .energy import DeviceEnergy, charge_epoch, is_active
from .errors import ConfigError, StalledRound
from .metrics import DepletionRecord, MetricsLog, RoundRecord
from .rng import derive_rng

POLICIES = ("fedavg", "leanfed_static", "leanfed_adaptive")


@dataclass(frozen=True)
class FederationConfig:
    total_rounds: int
    participation_rate: float = 1.0
    policy: str = "leanfed_adaptive"
    num_clients: int = 50
    train_config: M.TrainConfig = field(default_factory=M.TrainConfig)
    master_seed: int = 0

    def __post_init__(self):
        if self.total_rounds < 1:
            raise ConfigError(f"total_rounds must be >= 1, got {self.total_rounds}")
        if not 0 < self.participation_rate <= 1:
            raise ConfigError(f"participation_rate must lie in (0, 1], got {self.participation_rate}")
        if self.policy not in POLICIES:
            raise ConfigError(f"unknown policy {self.policy!r}; expected one of {POLICIES}")
        if self.num_clients < 1:
            raise ConfigError(f"num_clients must be >= 1, got {self.num_clients}")


@dataclass
class LocalUpdate:
    client_id: int
    params: M.ModelParams
    shard_size: int
    epochs_completed: int
    fraction_used: float


@dataclass
class RoundOutcome:
    round_index: int
    participants: set
    completed: list
    depleted_this_round: set
    global_params_after: M.ModelParams


def _clamp01(x: float) -> float:
    return min(1.0, max(0.0, x))


def data_fraction_static(budget_initial, per_epoch_cost, local_epochs, lam, total_rounds) -> float:
    """Share of local data per round so the initial budget lasts ``lam * R`` rounds."""
    return _clamp01(budget_initial / (lam * total_rounds * per_epoch_cost * local_epochs))


def data_fraction_adaptive(budget_remaining, per_epoch_cost, local_epochs, lam,
                           rounds_remaining) -> float:
    """Spread what is left over the participations still expected."""
    expected = max(1.0, lam * rounds_remaining)
    return _clamp01(budget_remaining / (expected * per_epoch_cost * local_epochs))


def participant_target(num_clients: int, lam: float) -> int:
    # round half up
    return int(math.floor(lam * num_clients + 0.5))


def sample_participants(active, lam: float, num_clients: int, rng: np.random.Generator) -> set:
    pool = sorted(active)
    target = participant_target(num_clients, lam)
    if lam >= 1.0 or len(pool) <= target:
        return set(pool)
    picked = rng.choice(len(pool), size=target, replace=False)
    return {pool[i] for i in picked}


def subsample_shard(shard: ClientShard, eta: float, rng: np.random.Generator) -> np.ndarray:
    if not 0.0 <= eta <= 1.0:
        raise ValueError(f"eta must lie in [0, 1], got {eta}")
    size = len(shard)
    if eta == 0.0:
        return shard.indices[:0]
    if eta == 1.0:
        return shard.indices
    k = max(1, int(math.floor(eta * size)))
    return shard.indices[np.sort(rng.choice(size, size=k, replace=False))]


def local_round(shard: ClientShard, device: DeviceEnergy, global_params: M.ModelParams,
                eta: float, train_config: M.TrainConfig, rng: np.random.Generator,
                train: Dataset, backend=None) -> LocalUpdate | None:
    """Train one device for up to ``L`` epochs, charging energy after each.

    Every epoch is gated on the device still having budget; the model is only
    returned if budget remains once the loop ends. Otherwise the partial work
    is dropped.
    """
    params = global_params.copy()
    idx = subsample_shard(shard, eta, rng)
    X, y = train.features[idx], train.labels[idx]
    epochs = 0
    for _ in range(train_config.local_epochs):
        if not is_active(device):
            continue
        if len(idx):
            params = M.sgd_epoch(params, X, y, train_config, rng, backend)
        charge_epoch(device, eta)
        epochs += 1
    if not is_active(device):
        return None
    return LocalUpdate(shard.client_id, params, len(shard), epochs, eta)


def aggregation_weights(updates) -> list[float]:
    total = sum(u.shard_size for u in updates)
    return [u.shard_size / total for u in updates]


def aggregate(updates) -> M.ModelParams:
    """Dataset-size weighted mean over this round's senders.

    Summed in ascending client id order so the result does not depend on
    the order updates arrived in.
    """
    if not updates:
        raise StalledRound("no completed updates to aggregate")
    ordered = sorted(updates, key=lambda u: u.client_id)
    acc = np.zeros_like(ordered[0].params.weights)
    for u, w in zip(ordered, aggregation_weights(ordered)):
        acc += w * u.params.weights
    return M.ModelParams(acc)


def exact_weight_sum(updates) -> Fraction:
    total = sum(u.shard_size for u in updates)
    return sum((Fraction(u.shard_size, total) for u in updates), Fraction(0))


def _check_consistent(train, shards, fleet, config):
    if len(shards) != config.num_clients or len(fleet) != config.num_clients:
        raise ConfigError(
            f"num_clients={config.num_clients} but got {len(shards)} shards and {len(fleet)} devices"
        )
    for i, (shard, device) in enumerate(zip(shards, fleet)):
        if shard.client_id != i or device.client_id != i:
            raise ConfigError(f"shard/device at position {i} has mismatched client id")
        if len(shard) == 0:
            raise ConfigError(f"client {i} has an empty shard")
        if shard.indices.max() >= train.n:
            raise ConfigError(f"client {i} shard indexes past the training set")


def run_federation(train: Dataset, test: Dataset, shards, fleet, config: FederationConfig,
                   workers: int = 1, backend=None, keep_outcomes: bool = False) -> MetricsLog:
    """Run ``R`` rounds. ``fleet`` is mutated in place as energy is spent."""
    _check_consistent(train, shards, fleet, config)
    tc = config.train_config
    R, lam, E = config.total_rounds, config.participation_rate, config.num_clients
    global_params = M.init_params(train.num_classes, train.dim)
    static_eta = [
        data_fraction_static(d.budget_initial, d.per_epoch_cost, tc.local_epochs, lam, R)
        if d.budget_initial > 0 else 0.0
        for d in fleet
    ]
    depletion_round: dict[int, int] = {}
    log = MetricsLog(num_clients=E, total_rounds=R)
    pool = ThreadPoolExecutor(max_workers=workers) if workers > 1 else None

    def eta_for(client: int, r: int) -> float:
        device = fleet[client]
        if config.policy == "fedavg":
            return 1.0
        if config.policy == "leanfed_static":
            return static_eta[client]
        return data_fraction_adaptive(device.budget_remaining, device.per_epoch_cost,
                                      tc.local_epochs, lam, R - r + 1)

    try:
        for r in range(1, R + 1):
            active = {d.client_id for d in fleet if is_active(d)}
            participants = sample_participants(active, lam, E,
                                               derive_rng(config.master_seed, "participants", r))
            order = sorted(participants)
            etas = {c: eta_for(c, r) for c in order}

            def work(c, r=r):
                rng = derive_rng(config.master_seed, "client", c, r)
                return local_round(shards[c], fleet[c], global_params, etas[c], tc, rng,
                                   train, backend)

            if pool is None:
                results = [work(c) for c in order]
            else:
                results = list(pool.map(work, order))
            completed = [u for u in results if u is not None]

            try:
                global_params = aggregate(completed)
                log.weight_sums.append(math.fsum(aggregation_weights(completed)))
            except StalledRound:
                log.weight_sums.append(None)

            depleted = set()
            for c in order:
                if c not in depletion_round and not is_active(fleet[c]):
                    depletion_round[c] = r
                    depleted.add(c)

            log.rounds.append(RoundRecord(
                round=r,
                test_accuracy=M.evaluate(global_params, test, backend),
                num_active_start=len(active),
                num_participating=len(order),
                num_completed=len(completed),
                mean_eta=math.fsum(etas.values()) / len(order) if order else 0.0,
                total_energy_remaining=math.fsum(max(0.0, d.budget_remaining) for d in fleet),
            ))
            if keep_outcomes:
                log.outcomes.append(RoundOutcome(r, participants, completed, depleted,
                                                 global_params))
    finally:
        if pool is not None:
            pool.shutdown()

    # devices with no budget at all are inactive from the start
    for d in fleet:
        if d.client_id not in depletion_round and not is_active(d):
            depletion_round[d.client_id] = 1
    log.depletions = [DepletionRecord(c, depletion_round.get(c)) for c in range(E)]
    log.final_params = global_params
    return log
