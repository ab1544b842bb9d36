from datetime import datetime

from sqlalchemy import JSON, Column, DateTime, Float, ForeignKey, Integer, String
from sqlalchemy.orm import relationship

from .database import Base


class TrainingRun(Base):
    __tablename__ = "training_run"

    id = Column(Integer, primary_key=True, index=True)
    name = Column(String(100), index=True, nullable=False)
    seed = Column(Integer, nullable=False)
    network_config = Column(JSON, nullable=False)
    train_config = Column(JSON, nullable=False)
    params_checksum = Column(String(64), nullable=False)
    param_count = Column(Integer, nullable=False)
    final_loss = Column(Float, nullable=False)
    validation_l1 = Column(Float, nullable=True)
    wall_clock = Column(Float, nullable=False)
    created_at = Column(DateTime, default=datetime.utcnow)

    epochs = relationship(
        "EpochRecord", back_populates="run", cascade="all, delete-orphan", order_by="EpochRecord.epoch"
    )
    evaluations = relationship("EvaluationRecord", back_populates="run", cascade="all, delete-orphan")

    @property
    def epoch_count(self) -> int:
        return len(self.epochs)


class EpochRecord(Base):
    __tablename__ = "epoch_record"

    id = Column(Integer, primary_key=True, index=True)
    run_id = Column(Integer, ForeignKey("training_run.id", ondelete="CASCADE"), nullable=False, index=True)
    epoch = Column(Integer, nullable=False)
    lr = Column(Float, nullable=False)
    mean_loss = Column(Float, nullable=False)

    run = relationship("TrainingRun", back_populates="epochs")


class EvaluationRecord(Base):
    __tablename__ = "evaluation_record"

    id = Column(Integer, primary_key=True, index=True)
    run_id = Column(Integer, ForeignKey("training_run.id", ondelete="CASCADE"), nullable=True, index=True)
    sample_index = Column(Integer, nullable=False)
    mode = Column(String(20), nullable=False)
    psnr = Column(Float, nullable=True)
    sam = Column(Float, nullable=True)
    ergas = Column(Float, nullable=True)
    q2n = Column(Float, nullable=True)
    d_lambda = Column(Float, nullable=True)
    d_s = Column(Float, nullable=True)
    hqnr = Column(Float, nullable=True)
    created_at = Column(DateTime, default=datetime.utcnow)

    run = relationship("TrainingRun", back_populates="evaluations")
