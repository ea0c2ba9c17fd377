"""
pytest配置文件，包含测试夹具和共享配置
"""
import json
import sys
from pathlib import Path

import numpy as np
import pytest

# 添加项目根目录到Python路径
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from src.constellation.psk import make_constellation  # noqa: E402
from src.utils import config_helper  # noqa: E402


@pytest.fixture
def mock_config():
    """模拟配置数据"""
    return {
        "_comment": "测试配置",
        "logging": {
            "level": "INFO",
            "file_enabled": False,
            "log_dir": "logs"
        },
        "simulation": {
            "nt": 4,
            "k": 2,
            "mod": 4,
            "snr": "0:5:10",
            "schemes": ["zf", "zf+r"],
            "trials": 20,
            "seed": 7,
            "out": "ber.csv"
        },
        "presets": {
            "small": {
                "nt": 2,
                "k": 1,
                "schemes": ["mf", "rand+r"],
                "trials": 10
            },
            "fig5": {
                "nt": 128,
                "k": 8,
                "mod": 8
            }
        }
    }


@pytest.fixture
def temp_config_file(mock_config, tmp_path):
    """写入临时配置文件，返回其路径"""
    config_path = tmp_path / "config.json"
    with open(config_path, 'w', encoding='utf-8') as f:
        json.dump(mock_config, f, indent=4, ensure_ascii=False)

    yield config_path

    # 清理配置缓存，避免影响其他测试
    config_helper._config_cache = {}
    config_helper._config_cache_key = None


@pytest.fixture(autouse=True)
def isolated_config(monkeypatch, tmp_path):
    """默认指向不存在的配置文件，测试不受工作目录中 config.json 影响"""
    monkeypatch.setenv('ONEBIT_CONFIG', str(tmp_path / "missing-config.json"))
    monkeypatch.delenv('ONEBIT_LOG_LEVEL', raising=False)


@pytest.fixture
def rng():
    """固定种子的随机数生成器"""
    return np.random.default_rng(20240601)


@pytest.fixture
def qpsk():
    return make_constellation(4)


@pytest.fixture
def psk8():
    return make_constellation(8)
