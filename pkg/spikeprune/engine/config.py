"""
运行配置加载

_conf_schema.json 声明全部合法键、类型、默认值与说明；未知键、类型错误都以
点分路径报告。
"""

import hashlib
import json
import os
from typing import Optional, Dict, Any

from ..errors import ConfigError
from ..snnapi.models import RunConfig
from ..log import logger

SCHEMA_PATH = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "_conf_schema.json")
SEED_ENV = "SPIKEPRUNE_SEED"

_schema_cache: Optional[Dict[str, Any]] = None


def load_schema() -> Dict[str, Any]:
    global _schema_cache
    if _schema_cache is None:
        with open(SCHEMA_PATH, 'r', encoding='utf-8') as f:
            _schema_cache = json.load(f)
    return _schema_cache


def _is_number(value) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool)


def _check_value(value: Any, entry: Dict[str, Any], key: str) -> Any:
    kind = entry.get("type")
    if kind == "int":
        if not isinstance(value, int) or isinstance(value, bool):
            raise ConfigError(f"需要整数，得到 {value!r}", key)
    elif kind == "float":
        if not _is_number(value):
            raise ConfigError(f"需要数值，得到 {value!r}", key)
    elif kind == "bool":
        if not isinstance(value, bool):
            raise ConfigError(f"需要 true/false，得到 {value!r}", key)
    elif kind == "string":
        if not isinstance(value, str):
            raise ConfigError(f"需要字符串，得到 {value!r}", key)
        options = entry.get("options")
        if options and value not in options:
            raise ConfigError(f"取值必须是 {options} 之一，得到 {value!r}", key)
    elif kind == "list":
        if not isinstance(value, list) or not all(_is_number(v) for v in value):
            raise ConfigError(f"需要数值列表，得到 {value!r}", key)
    elif kind == "schedule":
        ratios = value.get("ratios") if isinstance(value, dict) else value
        if not (value == "none" or (isinstance(ratios, list) and all(_is_number(v) for v in ratios))):
            raise ConfigError(f"需要保留比例列表或 \"none\"，得到 {value!r}", key)
    return value


def resolve(data: Any, schema: Dict[str, Any], prefix: str = "") -> Dict[str, Any]:
    """
    按 schema 校验并补全默认值

    Args:
        data: 配置文档（或其中一段）
        schema: 对应层级的 schema
        prefix: 当前层级的点分路径

    Returns:
        Dict[str, Any]: 补全后的配置

    Raises:
        ConfigError: 未知键或类型错误
    """
    if not isinstance(data, dict):
        raise ConfigError("需要 JSON 对象", prefix or "config")
    for key in data:
        if key not in schema:
            raise ConfigError("未知的配置项", f"{prefix}.{key}" if prefix else key)

    resolved: Dict[str, Any] = {}
    for key, entry in schema.items():
        dotted = f"{prefix}.{key}" if prefix else key
        if entry.get("type") == "object":
            resolved[key] = resolve(data.get(key, {}), entry.get("items", {}), dotted)
        else:
            resolved[key] = _check_value(data.get(key, entry.get("default")), entry, dotted)
    return resolved


def config_from_dict(data: Dict[str, Any], env: Optional[Dict[str, str]] = None) -> RunConfig:
    """
    由配置字典构建并校验 RunConfig

    Args:
        data: 配置文档
        env: 环境变量，默认为 os.environ

    Raises:
        ConfigError: 任何校验失败
    """
    resolved = resolve(data, load_schema())
    config = RunConfig.from_dict(resolved)

    env = os.environ if env is None else env
    seed = env.get(SEED_ENV)
    if seed is not None and seed != "":
        try:
            config.train.seed = int(seed)
        except ValueError as e:
            raise ConfigError(f"{SEED_ENV} 必须是整数: {seed!r}", "train.seed") from e
        logger.warning(f"{SEED_ENV}={seed} overrides train.seed")

    config.validate()
    return config


def load_config(path: Optional[str] = None, env: Optional[Dict[str, str]] = None) -> RunConfig:
    """
    读取 JSON 配置文件，省略 path 时全部使用默认值

    Raises:
        ConfigError: 如果文件不是合法 JSON 或校验失败
        OSError: 如果文件无法读取
    """
    if path is None:
        data: Dict[str, Any] = {}
    else:
        with open(path, 'r', encoding='utf-8') as f:
            try:
                data = json.load(f)
            except json.JSONDecodeError as e:
                raise ConfigError(f"不是合法 JSON: {e}", "config") from e
    config = config_from_dict(data, env)
    logger.info(f"Loaded config {path or '<defaults>'} (fingerprint {fingerprint(config)[:12]})")
    return config


def fingerprint(config: RunConfig) -> str:
    """规范化 JSON 的 SHA-256"""
    canonical = json.dumps(config.to_dict(), sort_keys=True, separators=(",", ":"), ensure_ascii=True)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()
