"""预编码方案注册表：方案标签与预编码函数的映射"""

from __future__ import annotations

from enum import Enum

import numpy as np
from numpy.typing import NDArray

from src.precoder.linear import mf_precode, random_precode, zf_precode

# 方案标签后缀，表示在初始向量上运行细化
REFINE_SUFFIX = "+r"


class PrecoderKind(Enum):
    """初始预编码器"""
    ZF_QUANTIZED = "zf_quantized"
    MF_QUANTIZED = "mf_quantized"
    RANDOM_SIGNS = "random_signs"
    ZF_UNQUANTIZED = "zf_unquantized"

    @property
    def label(self) -> str:
        return _KIND_LABELS[self]

    @property
    def quantized(self) -> bool:
        return self is not PrecoderKind.ZF_UNQUANTIZED


_KIND_LABELS: dict[PrecoderKind, str] = {
    PrecoderKind.ZF_UNQUANTIZED: "zf-unq",
    PrecoderKind.ZF_QUANTIZED: "zf",
    PrecoderKind.MF_QUANTIZED: "mf",
    PrecoderKind.RANDOM_SIGNS: "rand",
}

_LABEL_KINDS: dict[str, PrecoderKind] = {label: kind for kind, label in _KIND_LABELS.items()}


def scheme_label(kind: PrecoderKind, refined: bool) -> str:
    return kind.label + (REFINE_SUFFIX if refined else "")


def parse_scheme(label: str) -> tuple[PrecoderKind, bool]:
    """
    解析方案标签，例如 "zf" -> (ZF_QUANTIZED, False)，"rand+r" -> (RANDOM_SIGNS, True)

    非量化 ZF 不在量化字母表内，不能细化，"zf-unq+r" 会被拒绝。
    """
    base = label.strip().lower()
    refined = base.endswith(REFINE_SUFFIX)
    if refined:
        base = base[: -len(REFINE_SUFFIX)]
    kind = _LABEL_KINDS.get(base)
    if kind is None:
        known = ", ".join(sorted(_LABEL_KINDS))
        raise ValueError(f"未知的预编码方案 '{label}'，可选: {known}（可加后缀 {REFINE_SUFFIX}）")
    if refined and not kind.quantized:
        raise ValueError(f"方案 '{label}' 无效：非量化 ZF 不能细化")
    return kind, refined


def precode(
    kind: PrecoderKind,
    h: NDArray[np.complex128],
    s: NDArray[np.complex128],
    rng: np.random.Generator,
) -> NDArray[np.complex128]:
    """按方案生成初始发射向量；ZF 类方案可能抛出 DegenerateChannelError"""
    if kind is PrecoderKind.ZF_QUANTIZED:
        return zf_precode(h, s, quantize=True)
    if kind is PrecoderKind.ZF_UNQUANTIZED:
        return zf_precode(h, s, quantize=False)
    if kind is PrecoderKind.MF_QUANTIZED:
        return mf_precode(h, s)
    if kind is PrecoderKind.RANDOM_SIGNS:
        return random_precode(h.shape[1], rng)
    raise ValueError(f"未知的预编码器: {kind!r}")
