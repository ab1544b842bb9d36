"""Persists training runs and evaluation reports."""
from typing import List, Optional, Sequence

from sqlalchemy.orm import Session

from ..core.config import NetworkConfig, TrainConfig
from ..core.errors import ConfigError
from ..metrics.report import METRIC_NAMES, MetricsReport
from ..training.trainer import TrainReport
from .db_structure import EpochRecord, EvaluationRecord, TrainingRun


def record_training(db: Session, name: str, net_config: NetworkConfig, train_config: TrainConfig,
                    report: TrainReport, validation_l1: Optional[float] = None) -> int:
    run = TrainingRun(
        name=name,
        seed=report.seed,
        network_config=net_config.model_dump(mode='json'),
        train_config=train_config.model_dump(mode='json'),
        params_checksum=report.checksum,
        param_count=report.param_count,
        final_loss=report.final_loss,
        validation_l1=validation_l1,
        wall_clock=report.wall_clock,
    )
    for epoch, (lr, loss) in enumerate(zip(report.lr_history, report.loss_history)):
        run.epochs.append(EpochRecord(epoch=epoch, lr=lr, mean_loss=loss))
    db.add(run)
    db.commit()
    db.refresh(run)
    return run.id


def record_evaluation(db: Session, run_id: Optional[int], mode: str,
                      reports: Sequence[MetricsReport]) -> List[int]:
    if run_id is not None and db.get(TrainingRun, run_id) is None:
        raise ConfigError(f"training run {run_id} is not in the registry")
    rows = [
        EvaluationRecord(
            run_id=run_id,
            sample_index=index,
            mode=mode,
            **{name: getattr(report, name) for name in METRIC_NAMES},
        )
        for index, report in enumerate(reports)
    ]
    db.add_all(rows)
    db.commit()
    return [row.id for row in rows]
