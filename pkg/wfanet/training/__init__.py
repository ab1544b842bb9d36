from .ablation import ABLATIONS, AblationResult, ablation_config, run_ablation_sweep
from .trainer import TrainReport, evaluate, lr_at, train, validation_l1

__all__ = [
    "ABLATIONS",
    "AblationResult",
    "TrainReport",
    "ablation_config",
    "evaluate",
    "lr_at",
    "run_ablation_sweep",
    "train",
    "validation_l1",
]
