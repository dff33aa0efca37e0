from loguru import logger as loguru_logger
from loguru._logger import Logger

from sdde_stab.utils.config import LogConfig
from sdde_stab.utils.logger import (
    format_debug,
    format_message,
    format_time,
    is_logger_set,
    set_logger,
    setup_handlers,
)


def setup_logger(log_config: LogConfig) -> Logger:
    if is_logger_set():
        raise RuntimeError("Logger already setup. Call reset_logger first.")

    message = format_message()
    time = format_time(log_config)
    debug = format_debug(log_config)
    format = time + message + debug

    logger = setup_handlers(loguru_logger, format, log_config)
    set_logger(logger)

    return logger
