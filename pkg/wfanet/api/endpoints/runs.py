from typing import List, Optional

from fastapi import APIRouter, Depends, HTTPException, Query
from sqlalchemy.orm import Session, selectinload

from ..models.run import RunDetail, RunSummary
from ...db.database import get_db
from ...db.db_structure import TrainingRun

router = APIRouter(prefix="/runs")


def _run_query(db: Session):
    return db.query(TrainingRun).options(
        selectinload(TrainingRun.epochs),
        selectinload(TrainingRun.evaluations),
    )


@router.get("/", response_model=List[RunSummary])
def list_runs(
    name: Optional[str] = Query(None, description="Only runs with this name"),
    db: Session = Depends(get_db),
):
    query = _run_query(db)
    if name:
        query = query.filter(TrainingRun.name == name)
    return query.order_by(TrainingRun.id).all()


@router.get("/{run_id}", response_model=RunDetail)
def read_run(run_id: int, db: Session = Depends(get_db)):
    run = _run_query(db).filter(TrainingRun.id == run_id).first()
    if not run:
        raise HTTPException(status_code=404, detail="Run not found")
    return run
