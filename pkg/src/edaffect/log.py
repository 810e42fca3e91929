"""日志设置模块

库代码只调用 logger.debug/info/warning，sink 只在命令行入口配置一次。
"""
from __future__ import annotations

import sys
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, Optional, Tuple

from loguru import logger

CONSOLE_FORMAT = (
    "<green>{time:YYYY-MM-DD HH:mm:ss}</green> | <blue>{elapsed}</blue> | "
    "<level>{level.icon} {level: <8}</level> | "
    "<cyan>{name}:{function}:{line}</cyan> - <level>{message}</level>"
)
FILE_FORMAT = "{time:YYYY-MM-DD HH:mm:ss} | {elapsed} | {level.icon} {level: <8} | {name}:{function}:{line} - {message}"


def log_file_path(log_root: str | Path, app_name: str, now: Optional[datetime] = None) -> Path:
    """<log_root>/logs/<app>/<YYYY-MM-DD>/<HH>/<MMSS>.log"""
    now = now or datetime.now()
    return Path(log_root) / "logs" / app_name / now.strftime("%Y-%m-%d") / now.strftime("%H") / f"{now.strftime('%M%S')}.log"


def setup_logger(app_name: str = "edaffect", log_root: str | Path | None = None,
                 console_output: bool = True, level: str = "INFO") -> Tuple[Any, Dict[str, Optional[str]]]:
    """配置 Loguru 日志系统

    Args:
        app_name: 应用名称，用于日志目录
        log_root: 日志根目录，为 None 时不写文件日志
        console_output: 是否输出到 stderr
        level: 控制台日志级别，文件日志固定为 DEBUG

    Returns:
        tuple: (logger, config_info)，config_info["log_file"] 为日志文件路径或 None
    """
    logger.remove()

    # stdout 留给命令结果
    if console_output:
        logger.add(sys.stderr, level=level, format=CONSOLE_FORMAT)

    config_info: Dict[str, Optional[str]] = {"log_file": None}
    if log_root is None:
        return logger, config_info

    log_file = log_file_path(log_root, app_name)
    log_file.parent.mkdir(parents=True, exist_ok=True)
    logger.add(
        log_file,
        level="DEBUG",
        rotation="10 MB",
        retention="30 days",
        compression="zip",
        encoding="utf-8",
        format=FILE_FORMAT,
        enqueue=True,
    )
    config_info["log_file"] = str(log_file)
    logger.debug(f"📝 文件日志: {log_file}")
    return logger, config_info
