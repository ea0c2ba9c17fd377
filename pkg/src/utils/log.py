import logging
import os
from datetime import datetime
from pathlib import Path
from typing import Optional


LOGGER_NAME = 'onebit'
LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'

LEVEL_MAP = {
    'DEBUG': logging.DEBUG,
    'INFO': logging.INFO,
    'WARNING': logging.WARNING,
    'ERROR': logging.ERROR,
    'CRITICAL': logging.CRITICAL
}


def resolve_level(level_str: Optional[str]) -> int:
    """日志级别字符串转 logging 常量，未知值回退到 INFO"""
    return LEVEL_MAP.get(str(level_str or 'INFO').upper(), logging.INFO)


# 日志设置
def setup_logger(logging_config: Optional[dict] = None) -> logging.Logger:
    """
    配置应用日志记录器：控制台 + 按日期滚动的文件

    Args:
        logging_config: 配置文件中的 logging 段，支持 level / file_enabled / log_dir。
            环境变量 ONEBIT_LOG_LEVEL 优先于 level。

    Returns:
        名为 onebit 的日志记录器，仿真各模块使用其子记录器
    """
    logging_config = logging_config or {}
    logger = logging.getLogger(LOGGER_NAME)
    level = resolve_level(os.getenv('ONEBIT_LOG_LEVEL') or logging_config.get('level'))
    logger.setLevel(level)

    # 重复调用时先移除旧处理器，避免日志重复输出
    for handler in list(logger.handlers):
        logger.removeHandler(handler)
        handler.close()

    # 添加控制台处理器
    console_handler = logging.StreamHandler()
    console_handler.setFormatter(logging.Formatter(LOG_FORMAT))
    logger.addHandler(console_handler)

    # 添加文件处理器
    if logging_config.get('file_enabled', True):
        log_dir = Path(logging_config.get('log_dir', 'logs'))
        log_dir.mkdir(parents=True, exist_ok=True)
        file_handler = logging.FileHandler(
            filename=log_dir / f"{datetime.now().strftime('%Y-%m-%d')}.log",
            encoding='utf-8',
            mode='a'
        )
        file_handler.setFormatter(logging.Formatter(LOG_FORMAT))
        logger.addHandler(file_handler)

    return logger
