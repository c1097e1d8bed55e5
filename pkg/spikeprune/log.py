"""
共享日志对象

整个包统一通过 ``from ..log import logger`` 使用同一个 logger，
处理器由命令行入口配置，库代码不调用 ``basicConfig``。
"""

import logging
import sys
from typing import Optional

logger = logging.getLogger("spikeprune")
logger.addHandler(logging.NullHandler())

_cli_handler: Optional[logging.Handler] = None


def setup_logging(verbose: bool = False) -> None:
    """
    为命令行进程配置一个 stderr 处理器，重复调用时替换上一次的处理器

    非 verbose 时只输出 warning；错误由命令行的 ❌ 行单独报告。
    """
    global _cli_handler
    if _cli_handler is not None:
        logger.removeHandler(_cli_handler)
    _cli_handler = logging.StreamHandler(sys.stderr)
    _cli_handler.setFormatter(logging.Formatter("[%(asctime)s] [%(levelname)s] %(message)s", "%H:%M:%S"))
    if not verbose:
        _cli_handler.setLevel(logging.WARNING)
        _cli_handler.addFilter(lambda record: record.levelno < logging.ERROR)
    logger.addHandler(_cli_handler)
    logger.setLevel(logging.DEBUG if verbose else logging.INFO)
