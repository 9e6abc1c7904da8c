"""
Database Handler
SQLite ledger of Monte Carlo results
"""
from datetime import datetime
from typing import List

import aiosqlite

from models.report import ErrorReport, RunRecord


class RunDB:
    """
    Run ledger: one row per (setting, leaf, damping profile) of every
    Monte Carlo invocation
    """

    def __init__(self, db_path: str = "supplynet.db"):
        """
        Args:
            db_path: SQLite database file path
        """
        self.db_path = db_path
        self.connection = None

    async def init_db(self):
        """
        Open the database and create tables
        """
        self.connection = await aiosqlite.connect(self.db_path)

        await self.connection.execute("""
            CREATE TABLE IF NOT EXISTS runs (
                id INTEGER PRIMARY KEY AUTOINCREMENT,
                scenario TEXT NOT NULL,
                setting TEXT NOT NULL,
                leaf INTEGER NOT NULL,
                damping_profile TEXT NOT NULL,
                norm_rmse REAL NOT NULL,
                n_runs INTEGER NOT NULL,
                seed INTEGER NOT NULL,
                created_at TIMESTAMP NOT NULL
            )
        """)
        await self.connection.commit()

    async def save_report(self, report: ErrorReport, created_at: datetime = None) -> int:
        """
        Store every row of a report

        Args:
            report: aggregated Monte Carlo result
            created_at: timestamp (default now)

        Returns:
            number of rows written
        """
        if self.connection is None:
            await self.init_db()

        created_at = created_at or datetime.now()
        rows = [
            (report.scenario, row.setting.value, row.leaf, row.damping_profile, row.norm_rmse, report.n_runs, report.seed, created_at.isoformat())
            for row in report.rows
        ]
        await self.connection.executemany(
            "INSERT INTO runs (scenario, setting, leaf, damping_profile, norm_rmse, n_runs, seed, created_at) "
            "VALUES (?, ?, ?, ?, ?, ?, ?, ?)",
            rows,
        )
        await self.connection.commit()
        return len(rows)

    async def get_run_counts(self, scenario: str) -> int:
        """
        Number of Monte Carlo invocations recorded for a scenario

        Args:
            scenario: scenario name

        Returns:
            invocation count
        """
        if self.connection is None:
            await self.init_db()

        cursor = await self.connection.execute(
            "SELECT COUNT(DISTINCT created_at) FROM runs WHERE scenario = ?",
            (scenario,)
        )
        result = await cursor.fetchone()
        return result[0] if result else 0

    async def get_records(self, scenario: str) -> List[RunRecord]:
        """All ledger rows of a scenario, oldest first"""
        if self.connection is None:
            await self.init_db()

        cursor = await self.connection.execute(
            "SELECT scenario, setting, leaf, damping_profile, norm_rmse, n_runs, seed, created_at "
            "FROM runs WHERE scenario = ? ORDER BY id",
            (scenario,)
        )
        rows = await cursor.fetchall()
        return [
            RunRecord(
                scenario=r[0], setting=r[1], leaf=r[2], damping_profile=r[3],
                norm_rmse=r[4], n_runs=r[5], seed=r[6], created_at=r[7],
            )
            for r in rows
        ]

    async def close(self):
        """Close database connection"""
        if self.connection:
            await self.connection.close()
            self.connection = None
