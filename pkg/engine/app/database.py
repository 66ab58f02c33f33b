from sqlalchemy import create_engine, Column, Integer, String, Text, DateTime, ForeignKey, CheckConstraint
from sqlalchemy.orm import declarative_base, sessionmaker, relationship, Session
from datetime import datetime
from pathlib import Path
from typing import Optional
import json
import os

from dotenv import load_dotenv

load_dotenv(Path(__file__).parent.parent / ".env")

# Data directory for the ledger and default outputs
DATA_DIR = Path(os.environ.get("OUNEUMANN_DATA_DIR", Path(__file__).parent.parent.parent / "data"))

Base = declarative_base()

engine = None
SessionLocal = None


class Run(Base):
    __tablename__ = "runs"

    id = Column(Integer, primary_key=True, index=True)
    command = Column(String, nullable=False)
    status = Column(
        String,
        CheckConstraint("status IN ('running', 'passed', 'failed', 'error')"),
        default='running'
    )
    started_at = Column(DateTime, default=datetime.utcnow)
    finished_at = Column(DateTime, nullable=True)
    config_hash = Column(String, nullable=False)
    config_snapshot = Column(Text)
    out_dir = Column(String, nullable=False)
    exit_status = Column(Integer, nullable=True)

    # Bundle metadata
    bundle_path = Column(String, nullable=True)
    bundle_sha256 = Column(String, nullable=True)

    artifacts = relationship("Artifact", back_populates="run", cascade="all, delete-orphan")


class Artifact(Base):
    __tablename__ = "artifacts"

    id = Column(Integer, primary_key=True, index=True)
    run_id = Column(Integer, ForeignKey("runs.id"), index=True)
    name = Column(String, nullable=False)
    path = Column(String, nullable=False)
    sha256 = Column(String, nullable=False)
    size_bytes = Column(Integer, nullable=False)

    run = relationship("Run", back_populates="artifacts")


def init_db(url: Optional[str] = None):
    """Initialize database and create tables"""
    global engine, SessionLocal
    if url is None:
        DATA_DIR.mkdir(parents=True, exist_ok=True)
        url = f"sqlite:///{DATA_DIR}/ledger.db"
    engine = create_engine(url, echo=False)
    SessionLocal = sessionmaker(engine, expire_on_commit=False)
    Base.metadata.create_all(engine)
    return SessionLocal


def start_run(db: Session, command: str, config_hash: str, snapshot: dict, out_dir: Path) -> Run:
    run = Run(
        command=command,
        status='running',
        config_hash=config_hash,
        config_snapshot=json.dumps(snapshot, sort_keys=True),
        out_dir=str(out_dir),
    )
    db.add(run)
    db.commit()
    return run


def finish_run(db: Session, run: Run, status: str, exit_status: int, artifacts: list[dict],
               bundle: Optional[tuple[Path, str]] = None) -> Run:
    """Record outcome and per-file hashes; artifacts are dicts with name, path, sha256, size_bytes."""
    run.status = status
    run.exit_status = exit_status
    run.finished_at = datetime.utcnow()
    for item in artifacts:
        run.artifacts.append(Artifact(**item))
    if bundle:
        run.bundle_path = str(bundle[0])
        run.bundle_sha256 = bundle[1]
    db.commit()
    return run
