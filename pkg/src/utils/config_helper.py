"""配置辅助工具，支持预设（preset）对仿真配置的覆盖"""
import json
import os
import pathlib
from typing import Any, Optional


DEFAULT_CONFIG_FILE = 'config.json'

_config_cache = {}
_config_cache_key = None


def get_config_path() -> pathlib.Path:
    """配置文件路径，可用环境变量 ONEBIT_CONFIG 指定"""
    return pathlib.Path(os.getenv('ONEBIT_CONFIG', DEFAULT_CONFIG_FILE))


def _load_config(path: Optional[pathlib.Path] = None) -> dict:
    """加载配置文件并按 (路径, 修改时间) 缓存"""
    global _config_cache, _config_cache_key
    path = pathlib.Path(path) if path is not None else get_config_path()
    try:
        key = (str(path.resolve()), path.stat().st_mtime)
        if _config_cache_key != key:
            with open(path, 'r', encoding='utf-8') as f:
                loaded = json.load(f)
            _config_cache = loaded if isinstance(loaded, dict) else {}
            _config_cache_key = key
        return _config_cache
    except (FileNotFoundError, json.JSONDecodeError):
        return {}


def get_config_value(key: str, preset: Optional[str] = None, default: Any = None,
                     path: Optional[pathlib.Path] = None) -> Any:
    """
    获取仿真配置值，支持预设覆盖

    Args:
        key: 配置键名
        preset: 预设名，如果提供则优先查找 presets[preset]
        default: 默认值
        path: 配置文件路径，默认见 get_config_path

    Returns:
        配置值，优先返回预设中的值，其次返回 simulation 段中的值
    """
    config = _load_config(path)

    if preset is not None:
        preset_config = config.get('presets', {}).get(preset, {})
        if key in preset_config:
            return preset_config[key]

    return config.get('simulation', {}).get(key, default)


def get_config_for_preset(preset: Optional[str] = None, path: Optional[pathlib.Path] = None) -> dict:
    """
    获取合并后的仿真配置字典（预设覆盖 simulation 段）

    以下划线开头的键是注释，会被忽略。预设不存在时抛出 KeyError。
    """
    config = _load_config(path)

    result = dict(config.get('simulation', {}))

    if preset is not None:
        presets = config.get('presets', {})
        if preset not in presets:
            raise KeyError(preset)
        result.update(presets[preset])

    return {k: v for k, v in result.items() if not k.startswith('_')}


def get_logging_config(path: Optional[pathlib.Path] = None) -> dict:
    return dict(_load_config(path).get('logging', {}))


def list_presets(path: Optional[pathlib.Path] = None) -> list[str]:
    return sorted(k for k in _load_config(path).get('presets', {}) if not k.startswith('_'))
