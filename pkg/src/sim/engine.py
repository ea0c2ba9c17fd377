"""
蒙特卡洛 BER 仿真引擎

每个符号时隙独立抽取信道和用户符号，预编码、可选细化、加噪传输、判决并统计
Gray 比特错误。σ² 固定为 1，P = 10^(SNR_dB/10)。

每次试验的随机流由 (seed, SNR 索引, 试验索引) 经计数器型 Philox 生成器派生，
试验按固定大小的批次划分并按批次顺序汇总，因此结果与执行顺序和进程数无关。
"""

from __future__ import annotations

import hashlib
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from itertools import repeat
from typing import Optional, Sequence

import numpy as np

from src.constellation.psk import (
    Constellation,
    SymbolBases,
    all_bases,
    bit_errors_many,
    demodulate_many,
    make_constellation,
)
from src.metric.scaling import (
    build_scaling_matrix,
    from_extended,
    min_scaling,
    scaling_vector,
    to_extended,
)
from src.precoder.linear import DegenerateChannelError
from src.precoder.registry import REFINE_SUFFIX, PrecoderKind, precode, scheme_label
from src.refine.flip import MAX_ORACLE_NT, exhaustive_oracle, refine
from src.sim.channel import draw_channel, transmit_receive

logger = logging.getLogger("onebit.sim")

NOISE_VARIANCE = 1.0
DEFAULT_BATCH_SIZE = 1000
DEFAULT_ORACLE_AUDIT_TRIALS = 50
MAX_CHANNEL_REDRAWS = 16
# 默认试验上限为 min_trials 的倍数
MAX_TRIALS_FACTOR = 100
# 穷举校验时判定细化结果与最优值相同的容差
ORACLE_TOL = 1e-12


@dataclass(frozen=True)
class SimulationConfig:
    """单个方案的仿真配置"""
    nt: int
    k: int
    mod_order: int
    snr_db_list: tuple[float, ...]
    precoder: PrecoderKind
    refine_enabled: bool = False
    passes: int = 1
    min_trials: int = 1000
    target_bit_errors: int = 0
    seed: int = 0
    # 以下为扩展选项
    until_converged: bool = False
    max_trials: Optional[int] = None
    batch_size: int = DEFAULT_BATCH_SIZE
    workers: int = 1
    oracle_check: bool = False
    oracle_audit_trials: int = DEFAULT_ORACLE_AUDIT_TRIALS

    def __post_init__(self):
        object.__setattr__(self, "snr_db_list", tuple(float(v) for v in self.snr_db_list))
        if self.k < 1 or self.nt < self.k:
            raise ValueError(f"要求 1 ≤ K ≤ Nt，收到 K={self.k}, Nt={self.nt}")
        make_constellation(self.mod_order)
        if not self.snr_db_list:
            raise ValueError("SNR 列表不能为空")
        if self.min_trials < 1:
            raise ValueError(f"最少试验次数必须 ≥ 1，收到 {self.min_trials}")
        if self.target_bit_errors < 0:
            raise ValueError(f"目标比特错误数不能为负，收到 {self.target_bit_errors}")
        if self.passes < 1:
            raise ValueError(f"细化轮数必须 ≥ 1，收到 {self.passes}")
        if not 0 <= self.seed < 2**64:
            raise ValueError(f"种子必须是 64 位无符号整数，收到 {self.seed}")
        if self.refine_enabled and not self.precoder.quantized:
            raise ValueError("非量化 ZF 不能细化")
        if self.max_trials is not None and self.max_trials < self.min_trials:
            raise ValueError(f"试验上限 {self.max_trials} 小于最少试验次数 {self.min_trials}")
        if self.batch_size < 1 or self.workers < 1 or self.oracle_audit_trials < 0:
            raise ValueError("batch_size、workers 必须 ≥ 1，oracle_audit_trials 不能为负")

    @property
    def label(self) -> str:
        return scheme_label(self.precoder, self.refine_enabled)

    @property
    def effective_max_trials(self) -> int:
        if self.max_trials is not None:
            return self.max_trials
        return self.min_trials * MAX_TRIALS_FACTOR

    @property
    def effective_batch_size(self) -> int:
        return min(self.batch_size, self.min_trials)

    @property
    def bits_per_slot(self) -> int:
        return self.k * make_constellation(self.mod_order).bits_per_symbol

    def fingerprint(self) -> str:
        """影响结果的全部字段的摘要，workers 不参与"""
        data = asdict(self)
        data.pop("workers")
        data["precoder"] = self.precoder.value
        data["max_trials"] = self.effective_max_trials
        data["batch_size"] = self.effective_batch_size
        canonical = json.dumps(data, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class BerRecord:
    """一个 (SNR, 方案) 点的蒙特卡洛结果"""
    snr_db: float
    precoder: str
    refined: bool
    passes: int
    nt: int
    k: int
    mod_order: int
    trials: int
    bit_errors: int
    ber: float
    seed: int

    @property
    def scheme(self) -> str:
        return self.precoder + (REFINE_SUFFIX if self.refined else "")

    @classmethod
    def from_counts(cls, cfg: SimulationConfig, snr_db: float, trials: int, bit_errors: int) -> "BerRecord":
        return cls(
            snr_db=float(snr_db),
            precoder=cfg.precoder.label,
            refined=cfg.refine_enabled,
            passes=cfg.passes,
            nt=cfg.nt,
            k=cfg.k,
            mod_order=cfg.mod_order,
            trials=trials,
            bit_errors=bit_errors,
            ber=bit_errors / (trials * cfg.bits_per_slot),
            seed=cfg.seed,
        )


@dataclass
class OracleAudit:
    """穷举校验统计：audited 次中细化达到最优 optimal 次，violations 为细化值超过最优值的次数"""
    audited: int = 0
    optimal: int = 0
    violations: int = 0

    def merge(self, other: "OracleAudit") -> None:
        self.audited += other.audited
        self.optimal += other.optimal
        self.violations += other.violations


@dataclass
class BatchResult:
    trials: int = 0
    bit_errors: int = 0
    redraws: int = 0
    audit: OracleAudit = field(default_factory=OracleAudit)


@dataclass
class PointOutcome:
    record: BerRecord
    redraws: int
    audit: OracleAudit
    capped: bool


def trial_rng(seed: int, snr_index: int, trial_index: int) -> np.random.Generator:
    """某次试验专属的随机流"""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, snr_index, trial_index])))


def _draw_and_precode(cfg: SimulationConfig, c: Constellation, rng: np.random.Generator):
    redraws = 0
    while True:
        h = draw_channel(cfg.k, cfg.nt, rng)
        symbols = rng.integers(0, c.order, size=cfg.k)
        try:
            return h, symbols, precode(cfg.precoder, h, c.points[symbols], rng), redraws
        except DegenerateChannelError:
            redraws += 1
            if redraws > MAX_CHANNEL_REDRAWS:
                raise RuntimeError(f"连续 {redraws} 次抽到退化信道，放弃该次试验")


def _run_trial(
    cfg: SimulationConfig,
    c: Constellation,
    table: Sequence[SymbolBases],
    p: float,
    rng: np.random.Generator,
    audit: Optional[OracleAudit],
) -> tuple[int, int]:
    h, symbols, x, redraws = _draw_and_precode(cfg, c, rng)

    if cfg.refine_enabled:
        m = build_scaling_matrix(h, [table[s] for s in symbols])
        report = refine(m, to_extended(x), passes=cfg.passes, until_converged=cfg.until_converged)
        x = from_extended(report.x_out)
        if audit is not None:
            best = min_scaling(scaling_vector(m, exhaustive_oracle(m)))
            audit.audited += 1
            if report.final_min > best + ORACLE_TOL:
                audit.violations += 1
            elif report.final_min >= best - ORACLE_TOL:
                audit.optimal += 1

    y = transmit_receive(h, x, p, NOISE_VARIANCE, rng)
    return bit_errors_many(c, symbols, demodulate_many(c, y)), redraws


def _run_batch(cfg: SimulationConfig, snr_index: int, p: float, start: int, stop: int) -> BatchResult:
    """运行试验 [start, stop)，可在子进程中执行"""
    c = make_constellation(cfg.mod_order)
    table = all_bases(c)
    auditing = cfg.oracle_check and cfg.refine_enabled and cfg.nt <= MAX_ORACLE_NT
    result = BatchResult()
    for trial_index in range(start, stop):
        audit = result.audit if auditing and trial_index < cfg.oracle_audit_trials else None
        errors, redraws = _run_trial(cfg, c, table, p, trial_rng(cfg.seed, snr_index, trial_index), audit)
        result.trials += 1
        result.bit_errors += errors
        result.redraws += redraws
    return result


def _resolve_snr_index(cfg: SimulationConfig, snr_db: float) -> int:
    try:
        return cfg.snr_db_list.index(float(snr_db))
    except ValueError:
        raise ValueError(f"SNR {snr_db} dB 不在配置的 SNR 列表中，请显式传入 snr_index") from None


def simulate_point(cfg: SimulationConfig, snr_db: float, snr_index: Optional[int] = None) -> PointOutcome:
    """
    运行单个 SNR 点，直到达到 min_trials 且（若设置）累计比特错误达到
    target_bit_errors，或达到试验上限。
    """
    if snr_index is None:
        snr_index = _resolve_snr_index(cfg, snr_db)
    p = 10.0 ** (snr_db / 10.0)
    batch = cfg.effective_batch_size
    cap = cfg.effective_max_trials

    trials = errors = redraws = 0
    audit = OracleAudit()

    def finished() -> bool:
        enough_errors = cfg.target_bit_errors == 0 or errors >= cfg.target_bit_errors
        return trials >= cfg.min_trials and enough_errors

    executor = ProcessPoolExecutor(max_workers=cfg.workers) if cfg.workers > 1 else None
    try:
        next_start = 0
        while not finished() and next_start < cap:
            starts, stops = [], []
            while len(starts) < cfg.workers and next_start < cap:
                stop = min(next_start + batch, cap)
                # 未达到 min_trials 时批次不越过 min_trials，边界只依赖位置
                if next_start < cfg.min_trials:
                    stop = min(stop, cfg.min_trials)
                starts.append(next_start)
                stops.append(stop)
                next_start = stop

            if executor is None:
                results = [_run_batch(cfg, snr_index, p, starts[0], stops[0])]
            else:
                results = list(executor.map(_run_batch, repeat(cfg), repeat(snr_index), repeat(p), starts, stops))

            # 按批次顺序汇总，停止条件在每批之前检查
            for result in results:
                if finished():
                    break
                trials += result.trials
                errors += result.bit_errors
                redraws += result.redraws
                audit.merge(result.audit)
            logger.debug(f"[{cfg.label}] SNR={snr_db:g} dB: 已完成 {trials} 次试验, {errors} 个比特错误")
    finally:
        if executor is not None:
            executor.shutdown()

    capped = not finished()
    if capped:
        logger.warning(
            f"[{cfg.label}] SNR={snr_db:g} dB: 达到试验上限 {cap}，比特错误 {errors} 未达到目标 {cfg.target_bit_errors}"
        )
    if redraws:
        logger.warning(f"[{cfg.label}] SNR={snr_db:g} dB: 退化信道重抽 {redraws} 次")
    if audit.violations:
        logger.error(f"[{cfg.label}] SNR={snr_db:g} dB: 细化结果超过穷举最优值 {audit.violations} 次")
    elif audit.audited:
        logger.info(f"[{cfg.label}] SNR={snr_db:g} dB: 穷举校验 {audit.audited} 次，达到最优 {audit.optimal} 次")

    record = BerRecord.from_counts(cfg, snr_db, trials, errors)
    logger.info(f"[{cfg.label}] SNR={snr_db:g} dB: trials={trials}, bit_errors={errors}, BER={record.ber:.3e}")
    return PointOutcome(record=record, redraws=redraws, audit=audit, capped=capped)


def run_point(cfg: SimulationConfig, snr_db: float, snr_index: Optional[int] = None) -> BerRecord:
    return simulate_point(cfg, snr_db, snr_index).record


def with_scheme(cfg: SimulationConfig, precoder: PrecoderKind, refine_enabled: bool) -> SimulationConfig:
    """以 cfg 为模板换一个方案"""
    return replace(cfg, precoder=precoder, refine_enabled=refine_enabled)
