"""Simulator for federated learning on battery-limited devices.

Implements FedAvg and the LeanFed data-fraction scheduler, in which each
device trains on only part of its local data each round so that its battery
lasts for the whole federation.
"""

from .data import (
    ClientShard,
    Dataset,
    PartitionConfig,
    generate_synthetic,
    label_histogram,
    load_csv,
    partition_dirichlet,
)
from .energy import DeviceEnergy, EnergyConfig, charge_epoch, is_active, max_rounds, sample_fleet
from .errors import ConfigError, NumericError, ParseError, StalledRound
from .federation import (
    FederationConfig,
    LocalUpdate,
    aggregate,
    data_fraction_adaptive,
    data_fraction_static,
    local_round,
    run_federation,
    sample_participants,
    subsample_shard,
)
from .metrics import DepletionRecord, MetricsLog, RoundRecord, RunSummary, aggregate_seeds, summarize_run
from .model import BACKEND, ModelParams, TrainConfig, evaluate, init_params, loss_and_grad, sgd_epoch

__version__ = "0.1.0"
