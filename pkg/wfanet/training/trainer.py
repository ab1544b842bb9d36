"""Minibatch Adam on the mean l1 loss, with step-wise learning-rate halving.

Each batch item runs its own forward/backward on a private tape with the
item loss scaled by 1/k; item gradients are summed in batch order, so a
batch update equals the gradient of the batch-mean loss and stays
deterministic. The epoch loss is the mean of batch means (the last,
possibly smaller, batch is kept).
"""
import math
import time
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, Field, model_validator

from ..core.config import EvalMode, MetricFlags, NetworkConfig, TrainConfig
from ..core.errors import ConfigError, DimensionError, NumericError
from ..core.log import format_epoch_line, training_logger
from ..data.raster import Raster, SamplePair
from ..engine import ops
from ..engine.optim import AdamState, adam_step, clip_grad_norm
from ..engine.tensor import Tape, backward, checked_mode, no_grad
from ..metrics.quality import evaluate_pair
from ..metrics.report import MetricsReport
from ..model.network import fuse_rasters, init_params, wfanet_forward
from ..model.params import NetworkParams

Predictor = Callable[[SamplePair], Raster]


class TrainReport(BaseModel):
    run: str
    seed: int
    epochs: int
    steps: int
    loss_history: List[float]
    lr_history: List[float]
    checksum: str
    param_count: int
    wall_clock: float = Field(ge=0)

    @model_validator(mode='after')
    def _history_is_complete(self):
        if len(self.loss_history) != self.epochs:
            raise ValueError(f"loss history has {len(self.loss_history)} entries for {self.epochs} epochs")
        if not all(math.isfinite(loss) for loss in self.loss_history):
            raise ValueError("loss history holds non-finite values")
        return self

    @property
    def final_loss(self) -> float:
        return self.loss_history[-1]


def lr_at(config: TrainConfig, epoch: int) -> float:
    return config.lr * 0.5 ** (epoch // config.lr_halving_period)


def check_dataset(dataset: Sequence[SamplePair], net_config: NetworkConfig, need_gt: bool = True):
    if not dataset:
        raise ConfigError("dataset is empty")
    for index, pair in enumerate(dataset):
        if need_gt and pair.gt is None:
            raise ConfigError(f"sample {index} has no gt raster")
        if pair.lrms.bands != net_config.ms_bands:
            raise DimensionError(
                f"sample {index} has {pair.lrms.bands} bands, network expects {net_config.ms_bands}"
            )
        if pair.ratio != net_config.ratio:
            raise DimensionError(f"sample {index} has ratio {pair.ratio}, network expects {net_config.ratio}")


def _item_gradients(params: NetworkParams, pair: SamplePair, weight: float) -> Tuple[Dict[str, np.ndarray], float]:
    with Tape():
        pred = wfanet_forward(pair.pan.to_tensor(), pair.lrms.to_tensor(), params)
        loss = ops.l1_loss(pred, pair.gt.to_tensor())
        value = loss.item()
        if not math.isfinite(value):
            return {}, value
        backward(ops.scale(loss, weight))
    grads = {}
    for name, tensor in params.items():
        if tensor.grad is not None:
            grads[name] = tensor.grad
            tensor.grad = None
    return grads, value


def batch_gradients(params: NetworkParams, batch: Sequence[SamplePair]) -> Tuple[Dict[str, np.ndarray], float]:
    """Summed per-item gradients of the batch-mean loss, and that mean."""
    weight = 1.0 / len(batch)
    total: Dict[str, np.ndarray] = {}
    losses = []
    for pair in batch:
        grads, value = _item_gradients(params, pair, weight)
        losses.append(value)
        if not math.isfinite(value):
            break
        for name in sorted(grads):
            total[name] = total[name] + grads[name] if name in total else grads[name]
    return total, float(np.mean(losses))


def train(net_config: NetworkConfig, train_config: TrainConfig, dataset: Sequence[SamplePair],
          run: str = "train") -> Tuple[NetworkParams, TrainReport]:
    check_dataset(dataset, net_config)
    logger = training_logger()
    started = time.perf_counter()
    params = init_params(net_config)
    state = AdamState.zeros_like(params)
    rng = np.random.default_rng(train_config.seed)
    history: List[float] = []
    lrs: List[float] = []
    step = 0

    with checked_mode(train_config.checked):
        for epoch in range(train_config.epochs):
            lr = lr_at(train_config, epoch)
            order = rng.permutation(len(dataset))
            batch_losses = []
            for start in range(0, len(order), train_config.batch_size):
                batch = [dataset[i] for i in order[start:start + train_config.batch_size]]
                step += 1
                try:
                    grads, loss = batch_gradients(params, batch)
                except NumericError as exc:
                    raise NumericError(f"epoch {epoch}, step {step}: {exc.detail}") from exc
                if not math.isfinite(loss):
                    logger.error(f"Non-finite loss at epoch {epoch}, step {step}")
                    raise NumericError(f"non-finite loss {loss} at epoch {epoch}, step {step}")
                if train_config.clip_norm is not None:
                    grads, _ = clip_grad_norm(grads, train_config.clip_norm)
                updated, state = adam_step(params, grads, state, lr)
                params = params.replace(updated)
                batch_losses.append(loss)

            epoch_loss = float(np.mean(batch_losses))
            history.append(epoch_loss)
            lrs.append(lr)
            logger.info(format_epoch_line(run, epoch, lr, epoch_loss, step, ""))

    report = TrainReport(
        run=run,
        seed=train_config.seed,
        epochs=train_config.epochs,
        steps=step,
        loss_history=history,
        lr_history=lrs,
        checksum=params.checksum(),
        param_count=params.count(),
        wall_clock=time.perf_counter() - started,
    )
    logger.info(format_epoch_line(run, train_config.epochs, lrs[-1], history[-1], step, f"done {report.checksum[:12]}"))
    return params, report


def validation_l1(params: NetworkParams, dataset: Sequence[SamplePair]) -> float:
    """Mean l1 of the unclamped prediction over samples with a gt."""
    check_dataset(dataset, params.config)
    losses = []
    with no_grad():
        for pair in dataset:
            pred = wfanet_forward(pair.pan.to_tensor(), pair.lrms.to_tensor(), params)
            losses.append(ops.l1_loss(pred, pair.gt.to_tensor()).item())
    return float(np.mean(losses))


def evaluate(params: NetworkParams, net_config: NetworkConfig, dataset: Sequence[SamplePair],
             flags: MetricFlags, predict: Optional[Predictor] = None) -> List[MetricsReport]:
    """Per-sample metrics; `predict` replaces the network (e.g. an oracle in tests)."""
    if params is not None and params.config != net_config:
        raise ConfigError("parameters were built for a different network config")
    check_dataset(dataset, net_config, need_gt=False)
    reports = []
    for index, pair in enumerate(dataset):
        if flags.mode == EvalMode.REDUCED and pair.gt is None:
            raise ConfigError(f"sample {index} has no gt; reduced-resolution evaluation needs one")
        fused = predict(pair) if predict is not None else fuse_rasters(pair.pan, pair.lrms, params)
        reports.append(evaluate_pair(fused, flags, ref=pair.gt, ms=pair.lrms, pan=pair.pan))
    return reports
