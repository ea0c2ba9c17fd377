"""仿真结果 SQLite 数据库层。

按配置指纹保存每个 (方案, SNR) 点的 BerRecord。仿真是确定性的，
指纹相同的点可以直接复用而无需重算。
"""

from __future__ import annotations

import datetime
import logging
import pathlib
from typing import Optional

import aiosqlite

from src.sim.engine import BerRecord

DB_PATH = pathlib.Path("data") / "results.db"

_logger: Optional[logging.Logger] = None

_CREATE_TABLES_SQL = """
CREATE TABLE IF NOT EXISTS ber_records (
    fingerprint TEXT    NOT NULL,
    snr_db      REAL    NOT NULL,
    precoder    TEXT    NOT NULL,
    refined     INTEGER NOT NULL,
    passes      INTEGER NOT NULL,
    nt          INTEGER NOT NULL,
    k           INTEGER NOT NULL,
    mod_order   INTEGER NOT NULL,
    trials      INTEGER NOT NULL,
    bit_errors  INTEGER NOT NULL,
    ber         REAL    NOT NULL,
    seed        TEXT    NOT NULL,
    created_at  TEXT    NOT NULL,
    PRIMARY KEY (fingerprint, snr_db)
);

CREATE INDEX IF NOT EXISTS idx_records_scheme
    ON ber_records(precoder, refined, nt, k, mod_order);
"""

_COLUMNS = "snr_db, precoder, refined, passes, nt, k, mod_order, trials, bit_errors, ber, seed"


def set_logger(logger: Optional[logging.Logger]) -> None:
    global _logger
    _logger = logger


def _log(msg: str, level: str = "info") -> None:
    if _logger:
        getattr(_logger, level)(f"[DB] {msg}")


def _row_to_record(row: aiosqlite.Row) -> BerRecord:
    return BerRecord(
        snr_db=row["snr_db"],
        precoder=row["precoder"],
        refined=bool(row["refined"]),
        passes=row["passes"],
        nt=row["nt"],
        k=row["k"],
        mod_order=row["mod_order"],
        trials=row["trials"],
        bit_errors=row["bit_errors"],
        ber=row["ber"],
        # 64 位无符号种子超出 SQLite INTEGER 范围，按文本存储
        seed=int(row["seed"]),
    )


class ResultsDatabase:
    def __init__(self, db_path: pathlib.Path = DB_PATH):
        self.db_path = pathlib.Path(db_path)
        self._db: Optional[aiosqlite.Connection] = None

    async def init(self) -> None:
        """打开连接并建表，幂等"""
        if self._db is not None:
            return
        self.db_path.parent.mkdir(parents=True, exist_ok=True)
        self._db = await aiosqlite.connect(str(self.db_path))
        self._db.row_factory = aiosqlite.Row
        await self._db.execute("PRAGMA journal_mode=WAL")
        await self._db.execute("PRAGMA synchronous=NORMAL")
        await self._db.executescript(_CREATE_TABLES_SQL)
        await self._db.commit()
        _log(f"结果数据库已就绪: {self.db_path}")

    async def close(self) -> None:
        if self._db:
            await self._db.close()
            self._db = None

    def _conn(self) -> aiosqlite.Connection:
        if self._db is None:
            raise RuntimeError("结果数据库未初始化，请先调用 init()")
        return self._db

    # ── 写入 ────────────────────────────────────────────────

    async def save_record(self, fingerprint: str, record: BerRecord) -> None:
        """保存一个点，同指纹同 SNR 的旧记录被覆盖"""
        db = self._conn()
        await db.execute(
            f"INSERT OR REPLACE INTO ber_records (fingerprint, {_COLUMNS}, created_at) "
            "VALUES (?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?)",
            (
                fingerprint,
                record.snr_db,
                record.precoder,
                int(record.refined),
                record.passes,
                record.nt,
                record.k,
                record.mod_order,
                record.trials,
                record.bit_errors,
                record.ber,
                str(record.seed),
                datetime.datetime.now(datetime.timezone.utc).isoformat(),
            ),
        )
        await db.commit()

    async def delete_fingerprint(self, fingerprint: str) -> int:
        db = self._conn()
        cursor = await db.execute("DELETE FROM ber_records WHERE fingerprint = ?", (fingerprint,))
        await db.commit()
        deleted = cursor.rowcount
        _log(f"已删除指纹 {fingerprint[:12]} 的 {deleted} 条记录")
        return deleted

    # ── 查询 ────────────────────────────────────────────────

    async def get_record(self, fingerprint: str, snr_db: float) -> Optional[BerRecord]:
        db = self._conn()
        async with db.execute(
            f"SELECT {_COLUMNS} FROM ber_records WHERE fingerprint = ? AND snr_db = ?",
            (fingerprint, float(snr_db)),
        ) as cursor:
            row = await cursor.fetchone()
        return _row_to_record(row) if row else None

    async def get_records(self, fingerprint: str) -> list[BerRecord]:
        """某个指纹下的全部记录，按 SNR 升序"""
        db = self._conn()
        async with db.execute(
            f"SELECT {_COLUMNS} FROM ber_records WHERE fingerprint = ? ORDER BY snr_db",
            (fingerprint,),
        ) as cursor:
            rows = await cursor.fetchall()
        return [_row_to_record(row) for row in rows]

    async def count_records(self) -> int:
        db = self._conn()
        async with db.execute("SELECT COUNT(*) FROM ber_records") as cursor:
            row = await cursor.fetchone()
        return int(row[0])
