import json
from enum import Enum
from pathlib import Path
from typing import Any, Dict, Optional, Tuple, Type, TypeVar

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from .errors import ConfigError


class Settings(BaseSettings):
    model_config = SettingsConfigDict(env_file='.env', extra='ignore')

    DATABASE_URL: str = "sqlite:///./wfanet_runs.db"
    LOG_DIR: str = "."
    REQUEST_LOG_FILE: str = "info.log"
    TRAINING_LOG_FILE: str = "training.log"
    CHECKED_MODE: bool = False
    FRONTEND_ORIGINS: str = (
        "http://localhost,http://127.0.0.1,http://localhost:5173,http://127.0.0.1:5173"
    )
    BACKEND_HOST: str = "0.0.0.0"
    BACKEND_PORT: int = 8000


settings = Settings()


class TripletPermutation(str, Enum):
    OURS = "ours"
    V1 = "v1"
    V2 = "v2"
    V3 = "v3"
    V4 = "v4"
    V5 = "v5"


class DetailBlock(str, Enum):
    FAB = "fab"
    CB = "cb"


class EvalMode(str, Enum):
    REDUCED = "reduced"
    FULL = "full"


class NetworkConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra='forbid')

    scales: int = Field(2, ge=1)
    channels: int = Field(32, ge=1)
    ms_bands: int = Field(8, ge=1)
    ratio: int = Field(4, ge=2)
    fab_count: int = Field(3, ge=1)
    cb_count: int = Field(3, ge=1)
    mlp_hidden_factor: int = Field(2, ge=1)
    ln_eps: float = Field(1e-5, gt=0)
    use_sdem: bool = True
    use_mffa_attention: bool = True
    multi_scale: bool = True
    fab_or_cb: DetailBlock = DetailBlock.FAB
    triplet_permutation: TripletPermutation = TripletPermutation.OURS
    query_ablation: bool = False
    key_ablation: bool = False
    value_ablation: bool = False
    seed: int = 0

    @model_validator(mode='after')
    def _ratio_matches_scales(self):
        if self.ratio != 2 ** self.scales:
            raise ValueError(
                f"ratio {self.ratio} must equal 2**scales = {2 ** self.scales}"
            )
        return self

    @property
    def hidden(self) -> int:
        return self.channels * self.mlp_hidden_factor


class TrainConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra='forbid')

    epochs: int = Field(50, ge=1)
    batch_size: int = Field(8, ge=1)
    lr: float = Field(9e-4, gt=0)
    lr_halving_period: int = Field(90, ge=1)
    seed: int = 0
    clip_norm: Optional[float] = Field(None, gt=0)
    checked: bool = False

    @classmethod
    def full_schedule(cls, seed: int = 0) -> "TrainConfig":
        return cls(epochs=360, batch_size=32, lr=9e-4, lr_halving_period=90, seed=seed)


class MetricFlags(BaseModel):
    model_config = ConfigDict(frozen=True, extra='forbid')

    mode: EvalMode = EvalMode.REDUCED
    ratio: int = Field(4, ge=1)
    peak: float = Field(1.0, gt=0)
    block: int = Field(32, ge=2)
    blur_sigma: Optional[float] = Field(None, gt=0)


ModelT = TypeVar("ModelT", bound=BaseModel)


def parse_config(model_cls: Type[ModelT], data: Optional[Dict[str, Any]] = None, **overrides) -> ModelT:
    payload = dict(data or {})
    payload.update({key: value for key, value in overrides.items() if value is not None})
    try:
        return model_cls.model_validate(payload)
    except ValidationError as exc:
        problems = "; ".join(
            f"{'.'.join(str(p) for p in err['loc']) or model_cls.__name__}: {err['msg']}"
            for err in exc.errors()
        )
        raise ConfigError(f"invalid {model_cls.__name__}: {problems}") from exc


def network_config(**overrides) -> NetworkConfig:
    return parse_config(NetworkConfig, **overrides)


def train_config(**overrides) -> TrainConfig:
    return parse_config(TrainConfig, **overrides)


def load_run_config(path: Path) -> Tuple[Dict[str, Any], Dict[str, Any]]:
    """Split a flat JSON config file into NetworkConfig and TrainConfig fields.

    `seed` is shared by both models when present.
    """
    try:
        raw = json.loads(Path(path).read_text(encoding='utf-8'))
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config file must hold a flat JSON object")

    net_fields = set(NetworkConfig.model_fields)
    train_fields = set(TrainConfig.model_fields)
    unknown = sorted(set(raw) - net_fields - train_fields)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")

    net = {k: v for k, v in raw.items() if k in net_fields}
    train = {k: v for k, v in raw.items() if k in train_fields}
    return net, train
