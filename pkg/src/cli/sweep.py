"""
SNR 扫描命令行：解析扫描配置，按方案和 SNR 网格运行仿真并输出 CSV

配置优先级：命令行参数 > 预设（--preset）> 配置文件 simulation 段 > 内置默认值
"""

from __future__ import annotations

import argparse
import asyncio
import csv
import logging
import math
import os
import pathlib
import tempfile
from dataclasses import dataclass, replace
from typing import Optional, Sequence

from src.constellation.psk import make_constellation
from src.precoder.registry import PrecoderKind, parse_scheme, scheme_label
from src.refine.flip import MAX_ORACLE_NT
from src.sim.database import ResultsDatabase
from src.sim.engine import BerRecord, OracleAudit, SimulationConfig, simulate_point
from src.utils.config_helper import get_config_for_preset

logger = logging.getLogger("onebit.cli")

CSV_FIELDS = ("snr_db", "scheme", "refined", "passes", "nt", "k", "mod_order", "trials", "bit_errors", "ber", "seed")

DEFAULT_SIMULATION_CONFIG: dict = {
    "nt": 8,
    "k": 2,
    "mod": 4,
    "snr": "0:2:30",
    "schemes": ["zf", "zf+r"],
    "trials": 10000,
    "target_errors": 0,
    "passes": 1,
    "seed": 0,
    "out": "ber.csv",
    "workers": 1,
    "batch_size": 1000,
    "max_trials": None,
    "converge": False,
    "oracle_check": False,
    "oracle_audit_trials": 50,
    "db": None,
}


class SweepSpecError(ValueError):
    """扫描配置无效"""


@dataclass(frozen=True)
class SchemeSpec:
    kind: PrecoderKind
    refine: bool
    passes: int = 1

    @property
    def label(self) -> str:
        return scheme_label(self.kind, self.refine)


@dataclass(frozen=True)
class SweepSpec:
    """一次扫描：方案列表 × SNR 网格"""
    schemes: tuple[SchemeSpec, ...]
    grid: SimulationConfig
    snr_start: float
    snr_step: float
    snr_stop: float
    output_path: pathlib.Path
    db_path: Optional[pathlib.Path] = None

    def __post_init__(self):
        if self.snr_step <= 0:
            raise SweepSpecError(f"SNR 步长必须为正，收到 {self.snr_step}")
        if self.snr_start > self.snr_stop:
            raise SweepSpecError(f"SNR 起点 {self.snr_start} 大于终点 {self.snr_stop}")
        if not self.schemes:
            raise SweepSpecError("至少需要一个预编码方案")

    def configs(self) -> list[SimulationConfig]:
        return [
            replace(self.grid, precoder=s.kind, refine_enabled=s.refine, passes=s.passes)
            for s in self.schemes
        ]


def parse_snr_grid(text: str) -> tuple[float, float, float, tuple[float, ...]]:
    """解析 "start:step:stop"（单位 dB），返回 (start, step, stop, 网格)"""
    parts = str(text).split(":")
    if len(parts) != 3:
        raise SweepSpecError(f"SNR 网格格式无效 '{text}'，请使用 start:step:stop，例如 0:2:30")
    try:
        start, step, stop = (float(part) for part in parts)
    except ValueError:
        raise SweepSpecError(f"SNR 网格包含非数字 '{text}'") from None
    if not all(math.isfinite(v) for v in (start, step, stop)):
        raise SweepSpecError(f"SNR 网格包含非有限值 '{text}'")
    if step <= 0:
        raise SweepSpecError(f"SNR 步长必须为正，收到 {step:g}")
    if start > stop:
        raise SweepSpecError(f"SNR 起点 {start:g} 大于终点 {stop:g}")
    count = int(math.floor((stop - start) / step + 1e-9)) + 1
    grid = tuple(round(start + i * step, 10) for i in range(count))
    return start, step, stop, grid


def _build_parser() -> argparse.ArgumentParser:
    d = DEFAULT_SIMULATION_CONFIG
    parser = argparse.ArgumentParser(
        prog="main.py",
        description="1-bit 量化多用户 MISO 下行预编码 BER 仿真（PSK，基于建设性干扰的逐坐标细化）",
        epilog="方案标签: zf-unq, zf, mf, rand；后缀 +r 表示细化，例如 zf+r。"
               "未给出的参数取自配置文件（--config / ONEBIT_CONFIG）或括号中的默认值。"
               "SNR 起点为负时写成 --snr=-10:2:10。",
    )
    parser.add_argument("--config", type=pathlib.Path, default=None, help="JSON 配置文件（默认 config.json）")
    parser.add_argument("--preset", default=None, help="配置文件 presets 段中的预设名，例如 fig3")
    parser.add_argument("--check-config", action="store_true", help="只校验配置文件后退出")
    parser.add_argument("--nt", type=int, default=None, help=f"发射天线数 Nt（默认 {d['nt']}）")
    parser.add_argument("--k", type=int, default=None, help=f"用户数 K（默认 {d['k']}）")
    parser.add_argument("--mod", type=int, default=None, help=f"PSK 阶数 4|8|16（默认 {d['mod']}）")
    parser.add_argument("--snr", default=None, help=f"SNR 网格 start:step:stop，单位 dB（默认 {d['snr']}）")
    parser.add_argument("--scheme", action="append", default=None,
                        help=f"预编码方案，可重复（默认 {' '.join(d['schemes'])}）")
    parser.add_argument("--trials", type=int, default=None, help=f"每个点的最少时隙数（默认 {d['trials']}）")
    parser.add_argument("--target-errors", type=int, default=None,
                        help=f"每个点的最少比特错误数，0 表示不限（默认 {d['target_errors']}）")
    parser.add_argument("--passes", type=int, default=None, help=f"细化遍历轮数（默认 {d['passes']}）")
    parser.add_argument("--converge", action="store_true", default=None,
                        help="扩展：反复细化直到一轮无翻转（最多 2Nt 轮），非原始单轮算法")
    parser.add_argument("--seed", type=int, default=None, help=f"64 位无符号随机种子（默认 {d['seed']}）")
    parser.add_argument("--out", type=pathlib.Path, default=None, help=f"输出 CSV 路径（默认 {d['out']}）")
    parser.add_argument("--oracle-check", action="store_true", default=None,
                        help="Nt ≤ 8 时用穷举搜索校验细化结果")
    parser.add_argument("--workers", type=int, default=None, help=f"并行进程数（默认 {d['workers']}）")
    parser.add_argument("--batch-size", type=int, default=None, help=f"每批试验数（默认 {d['batch_size']}）")
    parser.add_argument("--max-trials", type=int, default=None, help="每个点的试验上限（默认 100×trials）")
    parser.add_argument("--db", type=pathlib.Path, default=None, help="结果数据库路径，已算过的点直接复用")
    return parser


def _as_int(name: str, value, minimum: int = 0, maximum: Optional[int] = None) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        try:
            value = int(str(value), 10)
        except ValueError:
            raise SweepSpecError(f"参数 {name} 必须为整数，收到 {value!r}") from None
    if value < minimum:
        raise SweepSpecError(f"参数 {name} 必须 ≥ {minimum}，收到 {value}")
    if maximum is not None and value > maximum:
        raise SweepSpecError(f"参数 {name} 必须 ≤ {maximum}，收到 {value}")
    return value


def build_spec(values: dict) -> SweepSpec:
    """由合并后的配置字典构造并校验 SweepSpec"""
    nt = _as_int("nt", values["nt"], minimum=1)
    k = _as_int("k", values["k"], minimum=1)
    if k > nt:
        raise SweepSpecError(f"用户数 K={k} 超过发射天线数 Nt={nt}")
    mod = _as_int("mod", values["mod"], minimum=0)
    try:
        make_constellation(mod)
    except ValueError as e:
        raise SweepSpecError(str(e)) from None

    start, step, stop, grid = parse_snr_grid(values["snr"])
    passes = _as_int("passes", values["passes"], minimum=1)

    labels = values["schemes"]
    if isinstance(labels, str):
        labels = [labels]
    schemes = []
    for label in labels:
        try:
            kind, refined = parse_scheme(label)
        except ValueError as e:
            raise SweepSpecError(str(e)) from None
        schemes.append(SchemeSpec(kind=kind, refine=refined, passes=passes))
    if not schemes:
        raise SweepSpecError("至少需要一个预编码方案")

    max_trials = values.get("max_trials")
    trials = _as_int("trials", values["trials"], minimum=1)
    grid_cfg = SimulationConfig(
        nt=nt,
        k=k,
        mod_order=mod,
        snr_db_list=grid,
        precoder=schemes[0].kind,
        refine_enabled=schemes[0].refine,
        passes=passes,
        min_trials=trials,
        target_bit_errors=_as_int("target_errors", values["target_errors"]),
        seed=_as_int("seed", values["seed"], maximum=2**64 - 1),
        until_converged=bool(values.get("converge")),
        max_trials=None if max_trials is None else _as_int("max_trials", max_trials, minimum=trials),
        batch_size=_as_int("batch_size", values["batch_size"], minimum=1),
        workers=_as_int("workers", values["workers"], minimum=1),
        oracle_check=bool(values.get("oracle_check")),
        oracle_audit_trials=_as_int("oracle_audit_trials", values["oracle_audit_trials"]),
    )
    db = values.get("db")
    return SweepSpec(
        schemes=tuple(schemes),
        grid=grid_cfg,
        snr_start=start,
        snr_step=step,
        snr_stop=stop,
        output_path=pathlib.Path(values["out"]),
        db_path=pathlib.Path(db) if db else None,
    )


def parse_args(argv: Optional[Sequence[str]] = None) -> SweepSpec:
    """
    解析命令行参数。

    参数无效时打印用法与错误信息，并以退出码 2 终止（SystemExit）。
    """
    parser = _build_parser()
    args = parser.parse_args(argv)

    try:
        file_values = get_config_for_preset(args.preset, path=args.config)
    except KeyError:
        parser.error(f"配置文件中不存在预设 '{args.preset}'")

    cli_values = {
        "nt": args.nt,
        "k": args.k,
        "mod": args.mod,
        "snr": args.snr,
        "schemes": args.scheme,
        "trials": args.trials,
        "target_errors": args.target_errors,
        "passes": args.passes,
        "seed": args.seed,
        "out": args.out,
        "workers": args.workers,
        "batch_size": args.batch_size,
        "max_trials": args.max_trials,
        "converge": args.converge,
        "oracle_check": args.oracle_check,
        "db": args.db,
    }
    values = dict(DEFAULT_SIMULATION_CONFIG)
    values.update({key: value for key, value in file_values.items() if key in DEFAULT_SIMULATION_CONFIG})
    values.update({key: value for key, value in cli_values.items() if value is not None})

    try:
        return build_spec(values)
    except SweepSpecError as e:
        parser.error(str(e))


# ── CSV ─────────────────────────────────────────────────────

def _format_float(value: float) -> str:
    return format(float(value), ".17g")


def record_to_row(record: BerRecord) -> list[str]:
    return [
        _format_float(record.snr_db),
        record.scheme,
        "1" if record.refined else "0",
        str(record.passes),
        str(record.nt),
        str(record.k),
        str(record.mod_order),
        str(record.trials),
        str(record.bit_errors),
        _format_float(record.ber),
        str(record.seed),
    ]


def write_csv(records: Sequence[BerRecord], stream) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(CSV_FIELDS)
    for record in records:
        writer.writerow(record_to_row(record))


def read_csv(path: pathlib.Path) -> list[BerRecord]:
    """读取 run_sweep 输出的 CSV"""
    with open(path, "r", encoding="utf-8", newline="") as f:
        reader = csv.DictReader(f)
        if tuple(reader.fieldnames or ()) != CSV_FIELDS:
            raise ValueError(f"CSV 表头不匹配: {reader.fieldnames}")
        records = []
        for row in reader:
            kind, _ = parse_scheme(row["scheme"])
            records.append(BerRecord(
                snr_db=float(row["snr_db"]),
                precoder=kind.label,
                refined=row["refined"] == "1",
                passes=int(row["passes"]),
                nt=int(row["nt"]),
                k=int(row["k"]),
                mod_order=int(row["mod_order"]),
                trials=int(row["trials"]),
                bit_errors=int(row["bit_errors"]),
                ber=float(row["ber"]),
                seed=int(row["seed"]),
            ))
    return records


# ── 扫描 ────────────────────────────────────────────────────

def format_summary(records: Sequence[BerRecord], audits: Optional[dict[str, OracleAudit]] = None) -> str:
    """每个方案的最小/最大 BER，以及穷举校验统计"""
    lines = ["📊 仿真汇总"]
    by_scheme: dict[str, list[BerRecord]] = {}
    for record in records:
        by_scheme.setdefault(record.scheme, []).append(record)
    for scheme, rows in by_scheme.items():
        bers = [row.ber for row in rows]
        lines.append(f"  {scheme:<8} BER 最小 {min(bers):.3e}, 最大 {max(bers):.3e} ({len(rows)} 个点)")
    for scheme, audit in (audits or {}).items():
        if audit.audited:
            lines.append(
                f"  🔍 {scheme}: 穷举校验 {audit.audited} 次，达到最优 {audit.optimal} 次，违反 {audit.violations} 次"
            )
    return "\n".join(lines)


async def run_sweep_async(spec: SweepSpec) -> list[BerRecord]:
    out = spec.output_path
    try:
        handle = tempfile.NamedTemporaryFile(
            mode="w", encoding="utf-8", newline="", dir=out.parent, prefix=f".{out.name}.", suffix=".tmp", delete=False,
        )
    except OSError as e:
        raise OSError(f"无法写入输出路径 {out}: {e}") from e

    tmp_path = pathlib.Path(handle.name)
    db = ResultsDatabase(spec.db_path) if spec.db_path else None
    records: list[BerRecord] = []
    audits: dict[str, OracleAudit] = {}
    try:
        if db:
            await db.init()
        if spec.grid.oracle_check and spec.grid.nt > MAX_ORACLE_NT:
            logger.warning(f"Nt={spec.grid.nt} 超过 {MAX_ORACLE_NT}，跳过穷举校验")

        for cfg in spec.configs():
            fingerprint = cfg.fingerprint()
            audit = audits.setdefault(cfg.label, OracleAudit())
            for snr_index, snr_db in enumerate(cfg.snr_db_list):
                cached = await db.get_record(fingerprint, snr_db) if db else None
                if cached is not None:
                    logger.info(f"[{cfg.label}] SNR={snr_db:g} dB: 复用数据库中的结果")
                    records.append(cached)
                    continue
                outcome = await asyncio.to_thread(simulate_point, cfg, snr_db, snr_index)
                audit.merge(outcome.audit)
                records.append(outcome.record)
                if db:
                    await db.save_record(fingerprint, outcome.record)

        with handle:
            write_csv(records, handle)
        os.replace(tmp_path, out)
    except BaseException:
        handle.close()
        tmp_path.unlink(missing_ok=True)
        raise
    finally:
        if db:
            await db.close()

    logger.info(f"已写入 {len(records)} 行结果: {out}")
    print(format_summary(records, audits))
    return records


def run_sweep(spec: SweepSpec) -> list[BerRecord]:
    """运行整个扫描，写出 CSV 并在标准输出打印汇总"""
    return asyncio.run(run_sweep_async(spec))
