from functools import lru_cache

from sqlalchemy import create_engine
from sqlalchemy.orm import declarative_base, sessionmaker

from ..core.config import settings


def make_engine(url: str):
    connect_args = {"check_same_thread": False} if url.startswith("sqlite") else {}
    return create_engine(url, connect_args=connect_args, pool_pre_ping=True)


DATABASE_URL = settings.DATABASE_URL
engine = make_engine(DATABASE_URL)

SessionLocal = sessionmaker(autocommit=False, autoflush=False, bind=engine)

Base = declarative_base()

# Import models so that Base.metadata is aware of all tables before usage
from . import db_structure  # noqa: E402,F401


@lru_cache(maxsize=None)
def session_factory(url: str) -> sessionmaker:
    """Sessions against another registry URL (CLI `--registry`); tables are created on first use."""
    if url == DATABASE_URL:
        Base.metadata.create_all(bind=engine)
        return SessionLocal
    other = make_engine(url)
    Base.metadata.create_all(bind=other)
    return sessionmaker(autocommit=False, autoflush=False, bind=other)


def get_db():
    db = SessionLocal()
    try:
        yield db
    finally:
        db.close()
