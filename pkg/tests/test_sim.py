"""
蒙特卡洛仿真测试
包括信道与噪声、停止规则、确定性与 BER 趋势
"""
import logging
import math
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np
import pytest

# 添加项目根目录到Python路径
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from src.constellation.psk import make_constellation  # noqa: E402
from src.precoder.linear import DegenerateChannelError  # noqa: E402
from src.precoder.registry import PrecoderKind, scheme_label  # noqa: E402
from src.sim import engine  # noqa: E402
from src.sim.channel import draw_channel, transmit_receive  # noqa: E402
from src.sim.engine import (  # noqa: E402
    MAX_CHANNEL_REDRAWS,
    BerRecord,
    SimulationConfig,
    run_point,
    simulate_point,
    trial_rng,
    with_scheme,
)


def _config(**overrides) -> SimulationConfig:
    values = dict(
        nt=4,
        k=2,
        mod_order=4,
        snr_db_list=(0.0, 10.0),
        precoder=PrecoderKind.ZF_QUANTIZED,
        refine_enabled=True,
        min_trials=40,
        seed=7,
        batch_size=16,
    )
    values.update(overrides)
    return SimulationConfig(**values)


class TestChannel:
    """信道与噪声测试类"""

    def test_entry_variance(self, rng):
        h = draw_channel(1, 100000, rng)
        assert np.mean(np.abs(h) ** 2) == pytest.approx(1.0, abs=0.02)
        assert np.var(h.real) == pytest.approx(0.5, abs=0.01)
        assert np.var(h.imag) == pytest.approx(0.5, abs=0.01)

    def test_fixed_seed(self):
        first = draw_channel(3, 5, np.random.default_rng(11))
        second = draw_channel(3, 5, np.random.default_rng(11))
        np.testing.assert_array_equal(first, second)

    def test_rejects_k_greater_than_nt(self, rng):
        with pytest.raises(ValueError):
            draw_channel(4, 2, rng)

    def test_noiseless(self, rng):
        h = draw_channel(2, 4, rng)
        x = np.full(4, (1 + 1j) / math.sqrt(8))
        np.testing.assert_array_equal(transmit_receive(h, x, 3.0, 0.0, rng), math.sqrt(3.0) * (h @ x))

    def test_scalar_arithmetic(self, rng):
        y = transmit_receive(np.array([[1 + 0j]]), [(1 + 1j) / math.sqrt(2)], 4.0, 0.0, rng)
        assert y[0] == pytest.approx(math.sqrt(2) * (1 + 1j))

    def test_pure_noise_variance(self, rng):
        y = transmit_receive(np.ones((50000, 1)), [0j], 1.0, 2.0, rng)
        assert np.mean(np.abs(y) ** 2) == pytest.approx(2.0, rel=0.03)

    def test_invalid_power(self, rng):
        with pytest.raises(ValueError):
            transmit_receive(np.ones((1, 1)), [1j], 0.0, 1.0, rng)
        with pytest.raises(ValueError):
            transmit_receive(np.ones((1, 1)), [1j], 1.0, -1.0, rng)


class TestSimulationConfig:
    """仿真配置测试类"""

    @pytest.mark.parametrize("overrides", [
        {"k": 5},
        {"mod_order": 2},
        {"snr_db_list": ()},
        {"min_trials": 0},
        {"target_bit_errors": -1},
        {"passes": 0},
        {"seed": -1},
        {"seed": 2 ** 64},
        {"precoder": PrecoderKind.ZF_UNQUANTIZED, "refine_enabled": True},
        {"max_trials": 10},
        {"workers": 0},
    ])
    def test_invalid(self, overrides):
        with pytest.raises(ValueError):
            _config(**overrides)

    def test_defaults(self):
        cfg = _config(batch_size=1000)
        assert cfg.effective_batch_size == 40
        assert cfg.effective_max_trials == 4000
        assert cfg.bits_per_slot == 4
        assert cfg.label == "zf+r"

    def test_fingerprint_ignores_workers(self):
        assert _config().fingerprint() == _config(workers=3).fingerprint()
        assert _config().fingerprint() != _config(seed=8).fingerprint()
        assert _config().fingerprint() != _config(refine_enabled=False).fingerprint()
        assert _config(max_trials=4000).fingerprint() == _config().fingerprint()

    def test_with_scheme(self):
        cfg = with_scheme(_config(), PrecoderKind.MF_QUANTIZED, False)
        assert cfg.label == "mf"
        assert cfg.nt == 4

    def test_trial_rng_streams(self):
        first = trial_rng(7, 0, 3).standard_normal(4)
        np.testing.assert_array_equal(first, trial_rng(7, 0, 3).standard_normal(4))
        assert not np.array_equal(first, trial_rng(7, 1, 3).standard_normal(4))
        assert not np.array_equal(first, trial_rng(7, 0, 4).standard_normal(4))


class TestSimulatePoint:
    """单点仿真测试类"""

    def test_unquantized_zf_noiseless_limit(self):
        cfg = _config(precoder=PrecoderKind.ZF_UNQUANTIZED, refine_enabled=False, snr_db_list=(300.0,))
        record = run_point(cfg, 300.0)
        assert record.bit_errors == 0
        assert record.ber == 0.0
        assert record.scheme == "zf-unq"

    def test_deterministic(self):
        cfg = _config(mod_order=8)
        assert run_point(cfg, 0.0) == run_point(cfg, 0.0)

    def test_independent_of_worker_count(self):
        cfg = _config(min_trials=64, target_bit_errors=30)
        serial = run_point(cfg, 10.0)
        parallel = run_point(replace(cfg, workers=3), 10.0)
        assert serial == parallel

    def test_unknown_snr_requires_index(self):
        with pytest.raises(ValueError):
            run_point(_config(), 3.0)
        assert run_point(_config(), 3.0, snr_index=0).snr_db == 3.0

    def test_record_fields(self):
        cfg = _config()
        record = run_point(cfg, 0.0)
        assert record.trials == 40
        assert record.precoder == "zf"
        assert record.refined is True
        assert (record.nt, record.k, record.mod_order, record.seed) == (4, 2, 4, 7)
        assert record.ber == record.bit_errors / (record.trials * 4)
        assert record.bit_errors <= record.trials * cfg.bits_per_slot

    @pytest.mark.parametrize("min_trials,batch_size,workers", [
        (20, 16, 1),
        (15, 10, 1),
        (20, 16, 3),
        (35, 8, 2),
    ])
    def test_min_trials_exact(self, min_trials, batch_size, workers):
        """不设目标错误数时恰好运行 min_trials 次，最后一批截断到 min_trials"""
        cfg = _config(min_trials=min_trials, batch_size=batch_size, workers=workers)
        outcome = simulate_point(cfg, 10.0)
        assert outcome.record.trials == min_trials
        assert not outcome.capped

    def test_truncated_batch_keeps_results(self):
        """截断后的批次边界与进程数无关"""
        cfg = _config(min_trials=20, batch_size=16, target_bit_errors=40, snr_db_list=(0.0,))
        assert run_point(cfg, 0.0) == run_point(replace(cfg, workers=2), 0.0)

    def test_target_errors_extend_run(self):
        cfg = _config(snr_db_list=(-5.0,), target_bit_errors=200, refine_enabled=False)
        outcome = simulate_point(cfg, -5.0)
        assert outcome.record.trials >= cfg.min_trials
        assert outcome.record.bit_errors >= 200
        assert not outcome.capped

    def test_trial_cap(self, caplog):
        cfg = _config(snr_db_list=(30.0,), target_bit_errors=10 ** 6, max_trials=50)
        with caplog.at_level(logging.WARNING, logger="onebit.sim"):
            outcome = simulate_point(cfg, 30.0)
        assert outcome.capped
        assert outcome.record.trials == 50
        assert "试验上限" in caplog.text

    def test_oracle_audit(self):
        cfg = _config(nt=3, min_trials=30, oracle_check=True, oracle_audit_trials=20)
        outcome = simulate_point(cfg, 10.0)
        assert outcome.audit.audited == 20
        assert outcome.audit.violations == 0
        assert 0 <= outcome.audit.optimal <= 20

    def test_oracle_audit_skipped_without_refine(self):
        cfg = _config(nt=3, refine_enabled=False, oracle_check=True)
        assert simulate_point(cfg, 10.0).audit.audited == 0

    def test_refine_improves_ber(self):
        """同一组信道下细化不会让 BER 变差太多，高 SNR 时明显改进"""
        base = _config(nt=8, snr_db_list=(25.0,), min_trials=400, batch_size=100, refine_enabled=False)
        unrefined = run_point(base, 25.0)
        refined = run_point(replace(base, refine_enabled=True), 25.0)
        assert refined.bit_errors < unrefined.bit_errors

    @pytest.mark.parametrize("kind,refined", [
        (PrecoderKind.ZF_QUANTIZED, True),
        (PrecoderKind.MF_QUANTIZED, False),
        (PrecoderKind.ZF_UNQUANTIZED, False),
    ])
    def test_ber_non_increasing_in_snr(self, kind, refined):
        """BER 随 SNR 单调不增，相邻两点之差不超过合并二项标准误的 3 倍"""
        snrs = (0.0, 4.0, 8.0, 12.0)
        cfg = _config(nt=8, snr_db_list=snrs, min_trials=300, batch_size=100,
                      precoder=kind, refine_enabled=refined)
        records = [run_point(cfg, snr) for snr in snrs]
        bits = [r.trials * cfg.bits_per_slot for r in records]
        for i in range(len(records) - 1):
            lo, hi = records[i], records[i + 1]
            pooled = (lo.bit_errors + hi.bit_errors) / (bits[i] + bits[i + 1])
            se = math.sqrt(pooled * (1 - pooled) * (1 / bits[i] + 1 / bits[i + 1]))
            assert hi.ber <= lo.ber + 3 * se, (lo.snr_db, lo.ber, hi.snr_db, hi.ber)
        assert records[-1].ber < records[0].ber


class TestChannelRedraw:
    """退化信道重抽测试类"""

    def test_redraw_counted(self, mocker):
        x = np.full(4, 0.5 + 0.5j)
        mocker.patch.object(engine, "precode", side_effect=[DegenerateChannelError("x"), DegenerateChannelError("x"), x])
        cfg = _config()
        _, _, out, redraws = engine._draw_and_precode(cfg, make_constellation(4), np.random.default_rng(0))
        assert redraws == 2
        np.testing.assert_array_equal(out, x)

    def test_redraw_limit(self, mocker):
        mocker.patch.object(engine, "precode", side_effect=DegenerateChannelError("x"))
        with pytest.raises(RuntimeError):
            engine._draw_and_precode(_config(), make_constellation(4), np.random.default_rng(0))
        assert engine.precode.call_count == MAX_CHANNEL_REDRAWS + 1


@pytest.mark.slow
class TestBerTrends:
    """桌面规模的 BER 趋势测试类"""

    def test_small_system_error_floor(self):
        """Nt=8, K=2, QPSK：量化 ZF 在高 SNR 出现误码平台，细化后平台消失"""
        cfg = SimulationConfig(
            nt=8, k=2, mod_order=4, snr_db_list=(22.0, 30.0), precoder=PrecoderKind.ZF_QUANTIZED,
            min_trials=100000, seed=7, workers=4,
        )
        zf_22 = run_point(cfg, 22.0)
        zf_30 = run_point(cfg, 30.0)
        refined_30 = run_point(replace(cfg, refine_enabled=True), 30.0)

        assert zf_30.ber > 0
        assert zf_22.ber / 2 <= zf_30.ber <= zf_22.ber * 2
        assert refined_30.ber * 10 <= zf_30.ber

    @pytest.mark.parametrize("k,order", [(16, 4), (8, 8)])
    def test_massive_system_refinement_gain(self, k, order):
        """Nt=128：细化后的量化 ZF 在某个 SNR 达到 1e-3，而未细化的至少差 10 倍"""
        snrs = tuple(float(v) for v in range(-4, 16, 2))
        cfg = SimulationConfig(
            nt=128, k=k, mod_order=order, snr_db_list=snrs, precoder=PrecoderKind.ZF_QUANTIZED,
            min_trials=10000, seed=7, workers=4,
        )
        refined = replace(cfg, refine_enabled=True)
        found = False
        for snr in snrs:
            r = run_point(refined, snr)
            if r.ber > 1e-3:
                continue
            if run_point(cfg, snr).ber >= 10 * r.ber:
                found = True
                break
        assert found


def test_ber_record_scheme():
    record = BerRecord(0.0, "mf", True, 1, 4, 2, 4, 10, 1, 0.025, 0)
    assert record.scheme == "mf+r"


@pytest.mark.parametrize("kind", [k for k in PrecoderKind if k.quantized])
@pytest.mark.parametrize("refined", [False, True])
def test_ber_record_scheme_matches_label(kind, refined):
    cfg = _config(precoder=kind, refine_enabled=refined)
    record = BerRecord.from_counts(cfg, 0.0, trials=10, bit_errors=1)
    assert record.scheme == scheme_label(kind, refined) == cfg.label
