"""
Database models for stored experiment runs
"""

from datetime import datetime

from sqlalchemy import JSON, Column, DateTime, Float, ForeignKey, Index, Integer, String
from sqlalchemy.orm import declarative_base, relationship

Base = declarative_base()


class ExperimentRun(Base):
    """One CLI invocation (sweep or weight optimization)"""
    __tablename__ = 'experiment_runs'

    id = Column(Integer, primary_key=True)
    command = Column(String(50), nullable=False)  # simulate, optimize-weights
    config = Column(JSON, nullable=False)  # resolved config echo
    master_seed = Column(Integer, nullable=False)
    n_trials = Column(Integer)
    output_path = Column(String(500))

    started_at = Column(DateTime, default=datetime.utcnow)
    finished_at = Column(DateTime)

    results = relationship("ResultRecord", back_populates="run", cascade="all, delete-orphan", order_by="ResultRecord.id")

    __table_args__ = (
        Index('idx_run_command', 'command'),
        Index('idx_run_started', 'started_at'),
    )


class ResultRecord(Base):
    """One (detector, SNR) row of a sweep; NULL for missing rates"""
    __tablename__ = 'result_records'

    id = Column(Integer, primary_key=True)
    run_id = Column(Integer, ForeignKey('experiment_runs.id'), nullable=False)

    detector = Column(String(100), nullable=False)
    snr_db = Column(Float, nullable=False)
    pfa_target = Column(Float)
    pfa_emp = Column(Float)
    pfa_lo = Column(Float)
    pfa_hi = Column(Float)
    pd_emp = Column(Float)
    pd_lo = Column(Float)
    pd_hi = Column(Float)
    sigma_w2_mean = Column(Float)
    rho_ca_mean = Column(Float)
    n_trials = Column(Integer, nullable=False)
    n_infeasible = Column(Integer, default=0)

    run = relationship("ExperimentRun", back_populates="results")

    __table_args__ = (
        Index('idx_result_run_detector', 'run_id', 'detector'),
    )
