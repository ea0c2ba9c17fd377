"""
初始发射向量 x_T^0：逐元素 1-bit 量化、量化 ZF、量化匹配滤波、随机符号，
以及作为参考的非量化 ZF。
"""

from __future__ import annotations

import numpy as np
from numpy.typing import ArrayLike, NDArray

from src.metric.scaling import check_channel, quantization_level

# Gram 矩阵条件数上限，超过即视为退化信道
MAX_GRAM_CONDITION = 1e12


class DegenerateChannelError(RuntimeError):
    """HH^H 在工作精度下不可逆"""


def _signs(values: NDArray[np.float64]) -> NDArray[np.float64]:
    # sign(0) 取 +1
    return np.where(values >= 0, 1.0, -1.0)


def quantize_1bit(x: ArrayLike) -> NDArray[np.complex128]:
    """
    对复向量的实部和虚部分别取符号，幅度归一到 1/√(2Nt)，
    使输出的 Frobenius 范数恰为 1。
    """
    x = np.asarray(x, dtype=np.complex128)
    if x.ndim != 1 or x.size < 1:
        raise ValueError(f"待量化信号必须是非空一维向量，收到形状 {x.shape}")
    level = quantization_level(x.size)
    return _signs(x.real) * level + 1j * (_signs(x.imag) * level)


def _check_symbols(h: NDArray[np.complex128], s: ArrayLike) -> NDArray[np.complex128]:
    s = np.asarray(s, dtype=np.complex128)
    if s.shape != (h.shape[0],):
        raise ValueError(f"符号向量长度 {s.shape} 与用户数 K={h.shape[0]} 不一致")
    return s


def zf_precode(h: ArrayLike, s: ArrayLike, quantize: bool = True) -> NDArray[np.complex128]:
    """
    ZF 预编码 w = H^H (HH^H)^{-1} s。

    quantize 为 True 时返回 1-bit 量化结果，否则返回单位范数的非量化参考信号。
    Gram 矩阵条件数超过 MAX_GRAM_CONDITION 时抛出 DegenerateChannelError，
    由蒙特卡洛驱动重新抽取信道。
    """
    h = check_channel(h)
    s = _check_symbols(h, s)
    gram = h @ h.conj().T
    condition = np.linalg.cond(gram)
    if not np.isfinite(condition) or condition > MAX_GRAM_CONDITION:
        raise DegenerateChannelError(f"信道 Gram 矩阵病态，条件数 {condition:.3e}")

    w = h.conj().T @ np.linalg.solve(gram, s)
    if quantize:
        return quantize_1bit(w)
    return w / np.linalg.norm(w)


def mf_precode(h: ArrayLike, s: ArrayLike) -> NDArray[np.complex128]:
    """量化匹配滤波 Q(H^H s)"""
    h = check_channel(h)
    s = _check_symbols(h, s)
    if not np.any(h):
        raise ValueError("匹配滤波要求信道矩阵非零")
    return quantize_1bit(h.conj().T @ s)


def random_precode(nt: int, rng: np.random.Generator) -> NDArray[np.complex128]:
    """实部与虚部独立均匀随机取符号的量化向量，结果由 rng 状态唯一决定"""
    if nt < 1:
        raise ValueError(f"天线数必须 ≥ 1，收到 {nt}")
    signs = 2.0 * rng.integers(0, 2, size=2 * nt) - 1.0
    level = quantization_level(nt)
    return signs[:nt] * level + 1j * (signs[nt:] * level)
