"""瑞利平坦衰落信道与加性高斯噪声"""

from __future__ import annotations

import numpy as np
from numpy.typing import ArrayLike, NDArray

from src.metric.scaling import ChannelMatrix


def draw_channel(k: int, nt: int, rng: np.random.Generator) -> ChannelMatrix:
    """
    K×Nt 独立同分布 CN(0, 1) 信道：实部与虚部方差各为 1/2
    """
    if k < 1 or nt < k:
        raise ValueError(f"无效的信道维度 K={k}, Nt={nt}（要求 1 ≤ K ≤ Nt）")
    real = rng.standard_normal((k, nt))
    imag = rng.standard_normal((k, nt))
    return (real + 1j * imag) / np.sqrt(2.0)


def transmit_receive(
    h: ArrayLike,
    x: ArrayLike,
    p: float,
    sigma2: float,
    rng: np.random.Generator,
) -> NDArray[np.complex128]:
    """y_k = √P·h_k·x + n_k，n_k ~ CN(0, σ²)；σ² = 0 时不加噪声"""
    if p <= 0:
        raise ValueError(f"发射功率必须为正，收到 P={p}")
    if sigma2 < 0:
        raise ValueError(f"噪声方差不能为负，收到 σ²={sigma2}")
    h = np.asarray(h, dtype=np.complex128)
    x = np.asarray(x, dtype=np.complex128)
    y = np.sqrt(p) * (h @ x)
    if sigma2 == 0:
        return y
    scale = np.sqrt(sigma2 / 2.0)
    noise = scale * (rng.standard_normal(y.shape) + 1j * rng.standard_normal(y.shape))
    return y + noise
