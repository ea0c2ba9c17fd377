"""
M-PSK 星座、Gray 映射与判决门限分解

星座点按逆时针排列，第一个点为 e^{jπ/4}。代码中的点索引从 0 开始，
索引 l 对应相位 2π·l/M + π/4。
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.typing import ArrayLike, NDArray

# 分解基向量的共线判定阈值
COLLINEAR_EPS = 1e-12


@dataclass(frozen=True, eq=False)
class Constellation:
    """M-PSK 星座，构造后不可变，可在并发的试验之间共享"""
    order: int
    points: NDArray[np.complex128]
    gray_labels: tuple[str, ...]
    # hamming[i, j] 为 gray_labels[i] 与 gray_labels[j] 的汉明距离
    hamming: NDArray[np.int64]

    @property
    def bits_per_symbol(self) -> int:
        return int(math.log2(self.order))

    def phase(self, index: int) -> float:
        return 2 * math.pi * index / self.order + math.pi / 4


@dataclass(frozen=True)
class SymbolBases:
    """
    星座点沿两条判决门限的分解：a + b = s_(l)，|a| = |b| = 1/rho。
    a 位于门限 φ - π/M 方向，b 位于门限 φ + π/M 方向。
    """
    a: complex
    b: complex
    rho: float

    @property
    def cross(self) -> float:
        """A^Re·B^Im − A^Im·B^Re，即坐标变换的分母"""
        return self.a.real * self.b.imag - self.a.imag * self.b.real


def _check_order(order: int) -> None:
    if isinstance(order, bool) or not isinstance(order, (int, np.integer)):
        raise ValueError(f"调制阶数必须为整数，收到: {order!r}")
    if order < 4:
        raise ValueError(f"不支持的调制阶数 M={order}：要求 M ≥ 4（BPSK 的两条门限共线，分解无定义）")
    if order & (order - 1):
        raise ValueError(f"不支持的调制阶数 M={order}：必须为 2 的幂")


@lru_cache(maxsize=None)
def make_constellation(order: int) -> Constellation:
    """构造 M-PSK 星座及反射二进制 Gray 标签（逆时针方向）"""
    _check_order(order)
    order = int(order)
    bits = int(math.log2(order))

    index = np.arange(order)
    points = np.exp(1j * (2 * np.pi * index / order + np.pi / 4))
    codes = index ^ (index >> 1)
    labels = tuple(format(int(code), f"0{bits}b") for code in codes)

    diff = codes[:, None] ^ codes[None, :]
    hamming = np.zeros_like(diff)
    for shift in range(bits):
        hamming += (diff >> shift) & 1

    points.setflags(write=False)
    hamming.setflags(write=False)
    return Constellation(order=order, points=points, gray_labels=labels, hamming=hamming)


def _check_index(c: Constellation, index: int) -> int:
    if isinstance(index, bool) or not isinstance(index, (int, np.integer)):
        raise ValueError(f"星座点索引必须为整数，收到: {index!r}")
    if not 0 <= index < c.order:
        raise ValueError(f"星座点索引 {index} 超出范围 [0, {c.order - 1}]")
    return int(index)


def decompose_symbol(c: Constellation, index: int) -> SymbolBases:
    """
    将第 index 个星座点沿其两条判决门限分解

    Args:
        c: 星座
        index: 星座点索引（从 0 开始）

    Returns:
        SymbolBases，满足 a + b 等于该星座点
    """
    index = _check_index(c, index)
    phi = c.phase(index)
    half = math.pi / c.order
    lower = complex(np.exp(1j * (phi - half)))
    upper = complex(np.exp(1j * (phi + half)))
    rho = abs(lower + upper)
    return SymbolBases(a=lower / rho, b=upper / rho, rho=rho)


def all_bases(c: Constellation) -> tuple[SymbolBases, ...]:
    """所有星座点的分解，按索引排列"""
    return tuple(decompose_symbol(c, index) for index in range(c.order))


def demodulate_many(c: Constellation, y: ArrayLike) -> NDArray[np.int64]:
    """
    对一组接收信号做最小相位距离判决。

    恰好落在门限上的信号判给较小的索引；y = 0 判为索引 0。
    """
    y = np.asarray(y, dtype=np.complex128)
    width = 2 * np.pi / c.order
    t = np.mod(np.angle(y) - np.pi / 4 + np.pi / c.order, 2 * np.pi) / width
    base = np.floor(t)
    index = base.astype(np.int64) % c.order
    on_threshold = t == base
    index = np.where(on_threshold, np.minimum(index, (index - 1) % c.order), index)
    return np.where(y == 0, 0, index)


def demodulate(c: Constellation, y: complex) -> int:
    """单个接收信号的判决，规则同 demodulate_many"""
    return int(demodulate_many(c, np.asarray([y]))[0])


def bit_errors_many(c: Constellation, sent: ArrayLike, decided: ArrayLike) -> int:
    """一组符号的 Gray 比特错误总数"""
    return int(c.hamming[np.asarray(sent), np.asarray(decided)].sum())


def bit_errors(c: Constellation, sent: int, decided: int) -> int:
    return int(c.hamming[_check_index(c, sent), _check_index(c, decided)])
