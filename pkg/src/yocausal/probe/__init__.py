from .adapters import (
    AdapterContractError,
    AdapterError,
    DenoiserAdapter,
    EpsilonPredictionAdapter,
    RemoteAdapter,
    serve_adapter,
)
from .records import (
    LossRecord,
    PairOutcome,
    ProbeConfig,
    append_loss_record,
    load_loss_records,
    make_outcome,
    outcomes_from_loss_file,
)
from .runner import ProbeError, ProbeResult, probe_pair, probe_records, sample_timesteps
from .synthetic import CAPTIONS, KINDS, build_toy_catalog, toy_generate, write_toy_subset
from .toynet import ToyDiffusionAdapter, ToyTrainConfig, ToyTrainError, toy_model_spec, toy_train

__all__ = [
    "AdapterContractError",
    "AdapterError",
    "DenoiserAdapter",
    "EpsilonPredictionAdapter",
    "RemoteAdapter",
    "serve_adapter",
    "LossRecord",
    "PairOutcome",
    "ProbeConfig",
    "append_loss_record",
    "load_loss_records",
    "make_outcome",
    "outcomes_from_loss_file",
    "ProbeError",
    "ProbeResult",
    "probe_pair",
    "probe_records",
    "sample_timesteps",
    "CAPTIONS",
    "KINDS",
    "build_toy_catalog",
    "toy_generate",
    "write_toy_subset",
    "ToyDiffusionAdapter",
    "ToyTrainConfig",
    "ToyTrainError",
    "toy_model_spec",
    "toy_train",
]
