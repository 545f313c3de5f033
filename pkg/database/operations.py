"""
Database operations and queries
"""

import logging
import math
from datetime import datetime
from typing import Any, Dict, List, Optional

from sqlalchemy import desc

from database.connection import DatabaseManager, get_db_manager
from database.models import ExperimentRun, ResultRecord
from tools.experiment_runner import CSV_COLUMNS

logger = logging.getLogger(__name__)


def _nullable(value):
    if isinstance(value, float) and math.isnan(value):
        return None
    return value


class DatabaseOperations:
    """High-level database operations"""

    def __init__(self, manager: Optional[DatabaseManager] = None):
        self.manager = manager or get_db_manager()

    # ==================== Runs ====================

    def save_run(
        self,
        command: str,
        config: Dict[str, Any],
        master_seed: int,
        rows: List[Any] = (),
        output_path: Optional[str] = None,
        started_at: Optional[datetime] = None,
    ) -> int:
        """Store a run and its result rows; returns the run id"""
        with self.manager.get_session() as session:
            run = ExperimentRun(
                command=command,
                config=config,
                master_seed=int(master_seed),
                n_trials=config.get("n_trials"),
                output_path=str(output_path) if output_path else None,
                started_at=started_at or datetime.utcnow(),
                finished_at=datetime.utcnow(),
            )
            for row in rows:
                record = row.as_record() if hasattr(row, "as_record") else dict(row)
                run.results.append(ResultRecord(**{k: _nullable(record[k]) for k in CSV_COLUMNS}))
            session.add(run)
            session.flush()
            logger.info(f"Saved run {run.id} ({command}, {len(rows)} rows)")
            return run.id

    def list_runs(self, command: Optional[str] = None, limit: int = 20) -> List[Dict[str, Any]]:
        with self.manager.get_session() as session:
            q = session.query(ExperimentRun)
            if command:
                q = q.filter(ExperimentRun.command == command)
            runs = q.order_by(desc(ExperimentRun.started_at), desc(ExperimentRun.id)).limit(limit).all()
            return [
                {
                    "id": r.id,
                    "command": r.command,
                    "master_seed": r.master_seed,
                    "n_trials": r.n_trials,
                    "output_path": r.output_path,
                    "started_at": r.started_at,
                    "finished_at": r.finished_at,
                }
                for r in runs
            ]

    def get_results(self, run_id: int) -> List[Dict[str, Any]]:
        with self.manager.get_session() as session:
            records = (
                session.query(ResultRecord)
                .filter(ResultRecord.run_id == run_id)
                .order_by(ResultRecord.id)
                .all()
            )
            return [{col: getattr(rec, col) for col in CSV_COLUMNS} for rec in records]

    def delete_run(self, run_id: int) -> bool:
        with self.manager.get_session() as session:
            run = session.get(ExperimentRun, run_id)
            if run is None:
                return False
            session.delete(run)
            logger.info(f"Deleted run {run_id}")
            return True


def persist_run(database_url: Optional[str], command: str, config: Dict[str, Any], master_seed: int, rows=(), output_path=None, started_at=None) -> Optional[int]:
    """Best-effort save used by the CLI; failures are logged, never raised"""
    try:
        manager = get_db_manager(database_url)
        manager.create_tables()
        return DatabaseOperations(manager).save_run(command, config, master_seed, rows, output_path, started_at)
    except Exception as e:
        logger.error(f"Could not persist run to database: {e}")
        return None
