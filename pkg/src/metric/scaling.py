"""
符号缩放性能指标

把每个用户的无噪接收信号 h_k·x_T 沿其目标符号的两条判决门限分解为
α_k^A·s_k^A + α_k^B·s_k^B，并把全部缩放因子写成实线性系统 Λ = M·x_E。
Λ 的排列固定为 [α_1^A, …, α_K^A, α_1^B, …, α_K^B]。
"""

from __future__ import annotations

from typing import Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray

from src.constellation.psk import COLLINEAR_EPS, SymbolBases

# 重构残差容差（64 位浮点，Nt ≤ 1024）
RECONSTRUCTION_TOL = 1e-10

ChannelMatrix = NDArray[np.complex128]
ExtendedTransmitVector = NDArray[np.float64]


def check_channel(h: ArrayLike) -> ChannelMatrix:
    """校验信道矩阵：二维、K ≥ 1、Nt ≥ K、元素有限"""
    h = np.asarray(h, dtype=np.complex128)
    if h.ndim != 2:
        raise ValueError(f"信道矩阵必须是二维 K×Nt 矩阵，收到形状 {h.shape}")
    k, nt = h.shape
    if k < 1:
        raise ValueError("信道矩阵至少需要一个用户")
    if nt < k:
        raise ValueError(f"用户数 K={k} 超过发射天线数 Nt={nt}")
    if not np.all(np.isfinite(h)):
        raise ValueError("信道矩阵包含非有限值")
    return h


def quantization_level(nt: int) -> float:
    """1-bit 量化后每个实/虚分量的幅度 1/√(2Nt)"""
    return 1.0 / np.sqrt(2 * nt)


def to_extended(x_t: ArrayLike) -> ExtendedTransmitVector:
    x_t = np.asarray(x_t, dtype=np.complex128)
    return np.concatenate([x_t.real, x_t.imag])


def from_extended(x_e: ArrayLike) -> NDArray[np.complex128]:
    """x_T = [I, jI]·x_E"""
    x_e = np.asarray(x_e, dtype=np.float64)
    if x_e.ndim != 1 or x_e.size % 2:
        raise ValueError(f"扩展发射向量长度必须为偶数，收到形状 {x_e.shape}")
    nt = x_e.size // 2
    return x_e[:nt] + 1j * x_e[nt:]


def is_quantized(x_e: ArrayLike) -> bool:
    """每个分量是否恰好为 ±1/√(2Nt)"""
    x_e = np.asarray(x_e, dtype=np.float64)
    if x_e.ndim != 1 or x_e.size == 0 or x_e.size % 2:
        return False
    return bool(np.all(np.abs(x_e) == quantization_level(x_e.size // 2)))


def build_scaling_matrix(h: ArrayLike, bases: Sequence[SymbolBases]) -> NDArray[np.float64]:
    """
    构造 2K×2Nt 实矩阵 M。

    第 k 行为 R_k = [A_k, B_k]，第 K+k 行为 I_k = [C_k, D_k]，
    系数由各用户目标符号的分解基向量给出。

    Args:
        h: K×Nt 复信道矩阵
        bases: 每个用户目标符号的分解，长度为 K

    Returns:
        矩阵 M，满足 Λ = M·x_E
    """
    h = check_channel(h)
    k, _ = h.shape
    if len(bases) != k:
        raise ValueError(f"分解基数量 {len(bases)} 与用户数 K={k} 不一致")

    a = np.array([base.a for base in bases], dtype=np.complex128)[:, None]
    b = np.array([base.b for base in bases], dtype=np.complex128)[:, None]
    ar, ai, br, bi = a.real, a.imag, b.real, b.imag

    denom = ar * bi - ai * br
    if np.any(np.abs(denom) < COLLINEAR_EPS):
        raise ValueError("分解基向量共线，坐标变换分母为零")

    hr, hi = h.real, h.imag
    block_a = (bi * hr - br * hi) / denom
    block_b = -(bi * hi + br * hr) / denom
    block_c = (ar * hi - ai * hr) / denom
    block_d = (ar * hr + ai * hi) / denom
    return np.block([[block_a, block_b], [block_c, block_d]])


def scaling_vector(m: ArrayLike, x: ArrayLike) -> NDArray[np.float64]:
    m = np.asarray(m, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    if m.ndim != 2 or x.ndim != 1 or m.shape[1] != x.shape[0]:
        raise ValueError(f"维度不匹配：M 为 {m.shape}，x_E 为 {x.shape}")
    return m @ x


def min_scaling(lam: ArrayLike) -> float:
    """Λ 的最小元素，即细化过程要最大化的目标"""
    lam = np.asarray(lam, dtype=np.float64)
    if lam.size == 0:
        raise ValueError("缩放向量为空")
    return float(lam.min())


def scaling_factors(lam: ArrayLike) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """把 Λ 拆成 (α^A, α^B)，各长 K"""
    lam = np.asarray(lam, dtype=np.float64)
    if lam.ndim != 1 or lam.size == 0 or lam.size % 2:
        raise ValueError(f"缩放向量长度必须为正偶数，收到形状 {lam.shape}")
    k = lam.size // 2
    return lam[:k], lam[k:]


def symbol_margins(lam: ArrayLike) -> NDArray[np.float64]:
    """每个用户的 min(α_k^A, α_k^B)，为正时无噪判决正确"""
    alpha_a, alpha_b = scaling_factors(lam)
    return np.minimum(alpha_a, alpha_b)
