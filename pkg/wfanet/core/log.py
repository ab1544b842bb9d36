import logging
from pathlib import Path
from typing import Optional

from .config import settings


EPOCH_HEADER = "| RUN             | EPOCH  | LR          | MEAN L1      | STEPS  | NOTES"
FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'


def _ensure_table_header(path: Path, header: str):
    if not path.exists() or path.stat().st_size == 0:
        path.write_text(header + '\n', encoding='utf-8')


def _configure_logger(name: str, file_name: str, header: Optional[str] = None) -> logging.Logger:
    logger = logging.getLogger(name)
    if not logger.handlers:
        path = Path(settings.LOG_DIR) / file_name
        path.parent.mkdir(parents=True, exist_ok=True)
        if header:
            _ensure_table_header(path, header)
        handler = logging.FileHandler(path)
        handler.setLevel(logging.INFO)
        handler.setFormatter(logging.Formatter(FORMAT))
        logger.addHandler(handler)
    logger.setLevel(logging.INFO)
    logger.propagate = False
    return logger


def get_logger(module: str) -> logging.Logger:
    """Module logger under `wfanet.`; warnings land in the request log file."""
    return _configure_logger(f"wfanet.{module}", settings.REQUEST_LOG_FILE)


def request_logger() -> logging.Logger:
    return _configure_logger('wfanet.request', settings.REQUEST_LOG_FILE)


def training_logger() -> logging.Logger:
    return _configure_logger('wfanet.training', settings.TRAINING_LOG_FILE, header=EPOCH_HEADER)


def format_epoch_line(run: str, epoch: int, lr: float, loss: float, steps: int, notes: str) -> str:
    return (
        f"| {run[:15]:<15} | {epoch:<6d} | {lr:<11.4e} | {loss:<12.6f} | "
        f"{steps:<6d} | {notes}"
    )
