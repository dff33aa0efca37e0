import pytest

from sdde_stab.cli.logger import setup_logger
from sdde_stab.utils.config import LogConfig
from sdde_stab.utils.logger import get_logger, is_logger_set, reset_logger


def test_setup_default():
    reset_logger()
    logger = setup_logger(LogConfig())
    assert is_logger_set()
    assert get_logger() is logger


def test_setup_twice():
    reset_logger()
    setup_logger(LogConfig(level="debug", utc=True))
    with pytest.raises(RuntimeError):
        setup_logger(LogConfig())


def test_fallback_without_setup():
    reset_logger()
    assert not is_logger_set()
    get_logger().info("Library code logs without an entry point")
