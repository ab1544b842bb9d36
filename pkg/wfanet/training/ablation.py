"""Named architecture variants trained on an equal schedule and compared on held-out l1."""
from typing import Any, Callable, Dict, List, Optional, Sequence

from pydantic import BaseModel

from ..core.config import NetworkConfig, TrainConfig, parse_config
from ..core.errors import ConfigError
from ..core.log import get_logger
from ..data.raster import SamplePair
from ..model.network import init_params
from ..model.params import NetworkParams
from .trainer import TrainReport, train, validation_l1

logger = get_logger('ablation')

ABLATIONS: Dict[str, Dict[str, Any]] = {
    "ours": {},
    "v1": {"triplet_permutation": "v1"},
    "v2": {"triplet_permutation": "v2"},
    "v3": {"triplet_permutation": "v3"},
    "v4": {"triplet_permutation": "v4"},
    "v5": {"triplet_permutation": "v5"},
    "cb": {"fab_or_cb": "cb"},
    "no_sdem": {"use_sdem": False},
    "single_scale": {"multi_scale": False},
    "no_attention": {"use_mffa_attention": False},
    "query_ablation": {"query_ablation": True},
    "key_ablation": {"key_ablation": True},
    "value_ablation": {"value_ablation": True},
}


class AblationResult(BaseModel):
    name: str
    overrides: Dict[str, Any]
    param_count: int
    validation_l1: float
    train_report: TrainReport


def ablation_config(base: NetworkConfig, name: str) -> NetworkConfig:
    if name not in ABLATIONS:
        raise ConfigError(f"unknown ablation {name!r}; expected one of {', '.join(ABLATIONS)}")
    return parse_config(NetworkConfig, base.model_dump(), **ABLATIONS[name])


def ablation_param_names(base: NetworkConfig, name: str) -> List[str]:
    return list(init_params(ablation_config(base, name)))


def run_ablation_sweep(base: NetworkConfig, train_config: TrainConfig,
                       train_set: Sequence[SamplePair], validation_set: Sequence[SamplePair],
                       names: Optional[Sequence[str]] = None,
                       on_result: Optional[Callable[[AblationResult, NetworkConfig, NetworkParams], None]] = None,
                       ) -> List[AblationResult]:
    results = []
    for name in names or list(ABLATIONS):
        config = ablation_config(base, name)
        params, report = train(config, train_config, train_set, run=name)
        result = AblationResult(
            name=name,
            overrides=ABLATIONS[name],
            param_count=params.count(),
            validation_l1=validation_l1(params, validation_set),
            train_report=report,
        )
        logger.info(f"Ablation {name}: validation l1 {result.validation_l1:.6f}, {result.param_count} params")
        if on_result is not None:
            on_result(result, config, params)
        results.append(result)
    return results
