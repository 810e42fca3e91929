"""JSON 运行配置与内置 profile"""
from edaffect.config.config_manager import ConfigManager, RunConfig, resolve_seed

__all__ = ["ConfigManager", "RunConfig", "resolve_seed"]
