import argparse
import json
import logging
import pathlib
import sys
from typing import Optional, Sequence

from dotenv import load_dotenv

from src.cli.sweep import parse_args, run_sweep
from src.sim import database
from src.utils.config_helper import get_config_path, get_logging_config
from src.utils.config_validator import validate_config
from src.utils.log import setup_logger

# 加载环境变量
load_dotenv()

logger = logging.getLogger('onebit')


# 配置加载
def load_config(path: Optional[pathlib.Path] = None):
    """加载配置文件"""
    path = path or get_config_path()
    try:
        with open(path, 'r', encoding='utf-8') as f:
            return json.load(f)
    except Exception as e:
        print(f"加载配置文件失败: {e}")
        return None


def _pre_parse(argv: Sequence[str]) -> argparse.Namespace:
    """先取出 --config / --check-config，日志要在完整解析之前配置好"""
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument('--config', type=pathlib.Path, default=None)
    pre.add_argument('--check-config', action='store_true')
    known, _ = pre.parse_known_args(argv)
    return known


def main(argv: Optional[Sequence[str]] = None) -> int:
    """主函数，返回进程退出码"""
    argv = list(sys.argv[1:] if argv is None else argv)
    pre = _pre_parse(argv)

    if pre.check_config:
        config = load_config(pre.config)
        if config is None:
            return 1
        return 0 if validate_config(config) else 1

    setup_logger(get_logging_config(pre.config))
    database.set_logger(logger)

    spec = parse_args(argv)
    logger.info(
        f"开始扫描: Nt={spec.grid.nt}, K={spec.grid.k}, {spec.grid.mod_order}PSK, "
        f"方案 {[s.label for s in spec.schemes]}, {len(spec.grid.snr_db_list)} 个 SNR 点"
    )
    try:
        run_sweep(spec)
    except KeyboardInterrupt:
        logger.info("仿真被手动停止")
        return 130
    except Exception as e:
        logger.error(f"仿真运行出错: {e}", exc_info=True)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
