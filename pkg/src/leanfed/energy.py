"""Battery budgets, per-epoch costs and energy bookkeeping.

Energy units are abstract: a device's per-epoch cost is its share of the
global dataset, ``|D_e| / |D|``, and its budget is that share scaled by two
clipped Gaussian factors and the planned number of rounds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .rng import derive_rng


@dataclass(frozen=True)
class EnergyConfig:
    alpha_mean: float = 0.5
    alpha_var: float = 0.5
    beta_mean: float = 0.5
    beta_var: float = 0.5
    clip_lo: float = 0.1
    clip_hi: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.clip_lo <= self.clip_hi:
            raise ConfigError(f"need 0 < clip_lo <= clip_hi, got [{self.clip_lo}, {self.clip_hi}]")
        if self.alpha_var < 0 or self.beta_var < 0:
            raise ConfigError("variances must be non-negative")


@dataclass
class DeviceEnergy:
    client_id: int
    budget_initial: float
    budget_remaining: float
    per_epoch_cost: float

    def __post_init__(self):
        if not self.per_epoch_cost > 0:
            raise ConfigError(f"device {self.client_id}: per_epoch_cost must be > 0")
        if self.budget_remaining > self.budget_initial:
            raise ConfigError(f"device {self.client_id}: remaining budget exceeds initial budget")


def clipped_gaussian(rng: np.random.Generator, mean: float, var: float, size: int,
                     lo: float, hi: float) -> np.ndarray:
    return np.clip(rng.normal(mean, math.sqrt(var), size), lo, hi)


def sample_fleet(shard_sizes, total_samples: int, total_rounds: int,
                 config: EnergyConfig) -> list[DeviceEnergy]:
    """Draw one battery per client.

    ``budget = alpha * (|D_e|/|D|) * beta * R`` and ``cost = |D_e|/|D|`` with
    ``alpha`` and ``beta`` drawn from ``N(mean, var)`` and clipped to
    ``[clip_lo, clip_hi]``.
    """
    sizes = [int(s) for s in shard_sizes]
    if any(s <= 0 for s in sizes):
        raise ConfigError("shard sizes must be positive")
    if sum(sizes) > total_samples:
        raise ConfigError(f"shard sizes sum to {sum(sizes)} > total_samples={total_samples}")
    if total_rounds < 1:
        raise ConfigError(f"total_rounds must be >= 1, got {total_rounds}")

    rng = derive_rng(config.seed, "energy")
    alphas = clipped_gaussian(rng, config.alpha_mean, config.alpha_var, len(sizes),
                              config.clip_lo, config.clip_hi)
    betas = clipped_gaussian(rng, config.beta_mean, config.beta_var, len(sizes),
                             config.clip_lo, config.clip_hi)
    fleet = []
    for client, (size, alpha, beta) in enumerate(zip(sizes, alphas, betas)):
        share = size / total_samples
        budget = float(alpha) * share * float(beta) * total_rounds
        fleet.append(DeviceEnergy(client, budget, budget, share))
    return fleet


def max_rounds(device: DeviceEnergy, local_epochs: int) -> float:
    """Rounds of full-data training the remaining budget can pay for."""
    if local_epochs < 1:
        raise ConfigError(f"local_epochs must be >= 1, got {local_epochs}")
    return device.budget_remaining / (device.per_epoch_cost * local_epochs)


def charge_epoch(device: DeviceEnergy, data_fraction: float) -> None:
    # the caller checks is_active before each epoch, so one epoch may overdraw
    if not 0.0 <= data_fraction <= 1.0:
        raise ValueError(f"data_fraction must lie in [0, 1], got {data_fraction}")
    device.budget_remaining -= device.per_epoch_cost * data_fraction


def is_active(device: DeviceEnergy) -> bool:
    return device.budget_remaining > 0
