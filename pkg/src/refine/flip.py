"""
逐坐标翻转符号的细化过程，以及用于小规模系统校验的穷举最优解

细化按坐标 0..2Nt-1 的升序依次尝试翻转 x_E 的一个分量，只有当 min(Λ)
严格增大时才接受，并立即更新工作向量。Λ 通过秩一更新
Λ_i = Λ_0 - 2·x_E^i·M[:, i] 计算。
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.typing import ArrayLike, NDArray

from src.metric.scaling import ExtendedTransmitVector, is_quantized, quantization_level

# 穷举搜索的天线数上限（4^Nt 个候选）
MAX_ORACLE_NT = 8


@dataclass
class RefineReport:
    """细化结果与审计计数"""
    initial_min: float
    final_min: float
    flips_accepted: int
    passes_run: int
    x_out: ExtendedTransmitVector
    # 每次接受翻转后的目标值，严格递增
    history: list[float] = field(default_factory=list)

    @property
    def evaluations(self) -> int:
        """已评估的试探翻转次数"""
        return self.passes_run * self.x_out.size


def _check_system(m: ArrayLike, x0: ArrayLike) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    m = np.asarray(m, dtype=np.float64)
    x = np.array(x0, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] == 0 or m.shape[0] % 2:
        raise ValueError(f"M 必须是 2K×2Nt 矩阵，收到形状 {m.shape}")
    if x.ndim != 1 or m.shape[1] != x.size:
        raise ValueError(f"维度不匹配：M 为 {m.shape}，x_E 为 {x.shape}")
    if not is_quantized(x):
        raise ValueError("初始向量不在 1-bit 量化字母表 {±1/√(2Nt)} 内")
    return m, x


def refine(
    m: ArrayLike,
    x0: ArrayLike,
    passes: int = 1,
    until_converged: bool = False,
) -> RefineReport:
    """
    最大化 min(M·x_E) 的贪心单坐标翻转。

    Args:
        m: 2K×2Nt 缩放矩阵
        x0: 初始扩展发射向量，分量须为 ±1/√(2Nt)
        passes: 遍历轮数，默认 1 轮
        until_converged: 反复遍历直到某一轮没有接受任何翻转，最多 2Nt 轮；
            此时忽略 passes

    Returns:
        RefineReport，x_out 为细化后的向量
    """
    if passes < 1:
        raise ValueError(f"遍历轮数必须 ≥ 1，收到 {passes}")
    m, x = _check_system(m, x0)

    columns = np.ascontiguousarray(m.T)
    lam = m @ x
    current = float(lam.min())
    report = RefineReport(initial_min=current, final_min=current, flips_accepted=0, passes_run=0, x_out=x)

    limit = x.size if until_converged else passes
    while report.passes_run < limit:
        report.passes_run += 1
        accepted = 0
        for i in range(x.size):
            candidate = lam - 2.0 * x[i] * columns[i]
            value = float(candidate.min())
            if value > current:
                x[i] = -x[i]
                lam = candidate
                current = value
                accepted += 1
                report.history.append(value)
        report.flips_accepted += accepted
        if until_converged and accepted == 0:
            break

    report.final_min = current
    return report


def single_flip_objectives(m: ArrayLike, x: ArrayLike) -> NDArray[np.float64]:
    """第 i 个元素为只翻转坐标 i 后的 min(Λ)，按完整矩阵乘积计算"""
    m = np.asarray(m, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    flipped = np.where(np.eye(x.size, dtype=bool), -x[None, :], x[None, :])
    return (flipped @ m.T).min(axis=1)


def is_local_optimum(m: ArrayLike, x: ArrayLike, tol: float = 0.0) -> bool:
    """没有任何单坐标翻转能使 min(Λ) 增大超过 tol"""
    current = float((np.asarray(m, dtype=np.float64) @ np.asarray(x, dtype=np.float64)).min())
    return bool(np.all(single_flip_objectives(m, x) <= current + tol))


def exhaustive_oracle(m: ArrayLike) -> ExtendedTransmitVector:
    """
    穷举全部 4^Nt 个符号组合，返回 min(M·x_E) 最大的向量。

    并列时取字典序最小的符号组合（按坐标 0..2Nt-1，-1 < +1）。
    仅用于 Nt ≤ MAX_ORACLE_NT 的校验。
    """
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2 or m.shape[1] == 0 or m.shape[1] % 2:
        raise ValueError(f"M 必须是 2K×2Nt 矩阵，收到形状 {m.shape}")
    n = m.shape[1]
    nt = n // 2
    if nt > MAX_ORACLE_NT:
        raise ValueError(f"穷举搜索仅支持 Nt ≤ {MAX_ORACLE_NT}，收到 Nt={nt}")

    # 最高位对应坐标 0，位 0 表示 -1，整数序即字典序
    codes = np.arange(1 << n, dtype=np.int64)
    shifts = np.arange(n - 1, -1, -1, dtype=np.int64)
    signs = 2.0 * ((codes[:, None] >> shifts[None, :]) & 1) - 1.0

    objectives = (signs @ m.T).min(axis=1)
    best = int(np.argmax(objectives))
    return signs[best] * quantization_level(nt)
