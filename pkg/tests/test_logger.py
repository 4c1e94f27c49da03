"""日志作用域测试."""

from loguru import logger

from src.utils.logger import run_scope


def test_run_scope_prefixes_messages():
    messages = []
    handler = logger.add(messages.append, format="{extra[prefix]}{message}", level="INFO")
    try:
        with run_scope("flow", 3):
            logger.info("inside")
        logger.info("outside")
    finally:
        logger.remove(handler)
    assert [m.strip() for m in messages] == ["[flow seed=3] inside", "outside"]
