#!/usr/bin/env python3
"""
配置文件验证器
检查 simulation 段、各预设与 logging 段能否构成有效的扫描配置
"""

import json
from pathlib import Path
from typing import Optional

from src.cli.sweep import DEFAULT_SIMULATION_CONFIG, SweepSpecError, build_spec
from src.utils.log import LEVEL_MAP


def load_config_file(path: Path) -> Optional[dict]:
    """读取配置文件，失败时打印原因并返回 None"""
    try:
        with open(path, 'r', encoding='utf-8') as f:
            config = json.load(f)
    except FileNotFoundError:
        print(f"❌ 配置文件 {path} 不存在")
        print("💡 请复制 config.example.json 为 config.json")
        return None
    except json.JSONDecodeError as e:
        print(f"❌ 配置文件格式错误: {e}")
        return None
    if not isinstance(config, dict):
        print("❌ 配置文件顶层必须是 JSON 对象")
        return None
    return config


def _check_section(name: str, values: dict) -> bool:
    """校验一段仿真配置（已与默认值合并前的原始键）"""
    unknown = [key for key in values if not key.startswith('_') and key not in DEFAULT_SIMULATION_CONFIG]
    for key in unknown:
        print(f"  ⚠️ {name}: 未知字段 {key}，将被忽略")

    merged = dict(DEFAULT_SIMULATION_CONFIG)
    merged.update({k: v for k, v in values.items() if k in DEFAULT_SIMULATION_CONFIG})
    try:
        spec = build_spec(merged)
    except SweepSpecError as e:
        print(f"  ❌ {name}: {e}")
        return False

    grid = spec.grid
    print(f"  ✅ {name}: Nt={grid.nt}, K={grid.k}, {grid.mod_order}PSK, "
          f"{len(grid.snr_db_list)} 个 SNR 点 × {len(spec.schemes)} 个方案")
    return True


def validate_config(config: dict) -> bool:
    """验证配置字典，逐项打印结果"""
    print("🔍 验证配置文件...")
    ok = True

    # 验证仿真配置
    print("\n📡 仿真配置验证:")
    simulation = config.get('simulation', {})
    if not isinstance(simulation, dict):
        print("  ❌ simulation 段必须是对象")
        return False
    ok = _check_section('simulation', simulation) and ok

    # 验证预设（预设覆盖 simulation 段）
    print("\n🗂️ 预设验证:")
    presets = config.get('presets', {})
    if not isinstance(presets, dict):
        print("  ❌ presets 段必须是对象")
        return False
    names = [name for name in presets if not name.startswith('_')]
    if not names:
        print("  ⚠️ 未配置预设")
    for name in names:
        preset = presets[name]
        if not isinstance(preset, dict):
            print(f"  ❌ 预设 {name} 必须是对象")
            ok = False
            continue
        merged = dict(simulation)
        merged.update(preset)
        ok = _check_section(f"preset {name}", merged) and ok

    # 验证日志配置
    print("\n📋 日志配置验证:")
    logging_config = config.get('logging', {})
    level = str(logging_config.get('level', 'INFO')).upper()
    if level in LEVEL_MAP:
        print(f"  ✅ 日志级别: {level}")
    else:
        print(f"  ❌ 未知日志级别: {level}，可选 {', '.join(LEVEL_MAP)}")
        ok = False
    if logging_config.get('file_enabled', True):
        print(f"  ✅ 日志目录: {logging_config.get('log_dir', 'logs')}")
    else:
        print("  ⚠️ 文件日志未启用")

    if ok:
        print("\n🎉 配置验证完成!")
    else:
        print("\n💥 验证失败，请修复配置文件后重试")
    return ok
