"""Database models and utilities for keeping Monte-Carlo runs"""

import json
import logging
from datetime import datetime
from typing import Dict, Iterable, List

from sqlalchemy import (
    Boolean,
    Column,
    DateTime,
    Float,
    ForeignKey,
    Integer,
    String,
    Text,
    create_engine,
)
from sqlalchemy.orm import declarative_base, relationship, sessionmaker

logger = logging.getLogger(__name__)

Base = declarative_base()


class BenchmarkRun(Base):
    """One harness call for one method"""
    __tablename__ = "benchmark_runs"

    id = Column(Integer, primary_key=True, autoincrement=True)
    method = Column(String(20), nullable=False)
    seed = Column(Integer, nullable=False)
    known_k = Column(Boolean, default=False)
    replications = Column(Integer, nullable=False)
    scenario = Column(Text, nullable=True)
    created_at = Column(DateTime, default=datetime.utcnow)

    results = relationship("ReplicateResult", back_populates="run", cascade="all, delete-orphan")

    def __repr__(self):
        return f"<BenchmarkRun(id={self.id}, method={self.method}, seed={self.seed})>"


class ReplicateResult(Base):
    """Scores of one replicate at one SNR and tolerance"""
    __tablename__ = "replicate_results"

    id = Column(Integer, primary_key=True, autoincrement=True)
    run_id = Column(Integer, ForeignKey("benchmark_runs.id"), nullable=False, index=True)
    snr_db = Column(Float, nullable=False)
    outlier_rate = Column(Float, default=0.0)
    replicate = Column(Integer, nullable=False)
    tolerance = Column(Integer, nullable=False)

    precision = Column(Float, nullable=False)
    recall = Column(Float, nullable=False)
    n_detected = Column(Integer, nullable=False)
    k_hat = Column(Integer, nullable=True)

    run = relationship("BenchmarkRun", back_populates="results")

    def __repr__(self):
        return f"<ReplicateResult(run={self.run_id}, snr={self.snr_db}, rep={self.replicate})>"


class ResultStore:
    def __init__(self, url: str):
        self.url = url
        self.engine = create_engine(url)
        Base.metadata.create_all(self.engine)
        self.Session = sessionmaker(bind=self.engine, expire_on_commit=False)

    def record_run(
        self,
        method: str,
        seed: int,
        known_k: bool,
        replications: int,
        scenario: Dict[str, object],
        rows: Iterable[Dict[str, object]],
    ) -> int:
        """Store a run with its per-replicate rows and return its id."""
        with self.Session() as session:
            run = BenchmarkRun(
                method=method,
                seed=seed,
                known_k=known_k,
                replications=replications,
                scenario=json.dumps(scenario, sort_keys=True, default=str),
            )
            run.results = [ReplicateResult(**row) for row in rows]
            session.add(run)
            session.commit()
            logger.debug("Stored run %d (%s, %d rows)", run.id, method, len(run.results))
            return run.id

    def runs(self) -> List[BenchmarkRun]:
        with self.Session() as session:
            return session.query(BenchmarkRun).order_by(BenchmarkRun.id).all()

    def results(self, run_id: int) -> List[ReplicateResult]:
        with self.Session() as session:
            return (
                session.query(ReplicateResult)
                .filter_by(run_id=run_id)
                .order_by(ReplicateResult.id)
                .all()
            )
