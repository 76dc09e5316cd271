import logging
import sys
from typing import Optional

LOGGER_NAME = "seqdisc"
LOG_FORMAT = "%(asctime)s [%(levelname)s] %(name)s: %(message)s"


def configure_logging(log_file_name: Optional[str] = None,
                      logger_name: str = LOGGER_NAME,
                      level: str = "INFO") -> logging.Logger:
    """
    Configure and return a logger with a stream (stderr) and an optional file handler.

    Reports are written to stdout, so log records always go to stderr.

    :param log_file_name: The path to the log file. If provided, logs will also be written to this file.
    :type log_file_name: Optional[str]
    :param logger_name: The name of the logger to configure.
    :type logger_name: str
    :param level: Log level name, e.g. ``"INFO"`` or ``"DEBUG"``.
    :type level: str
    :return: The configured logger instance.
    :rtype: logging.Logger
    """
    logger = logging.getLogger(logger_name)
    numeric_level = getattr(logging, level.upper(), logging.INFO)
    logger.setLevel(numeric_level)

    # Repeated CLI invocations in one process must not stack handlers.
    for handler in list(logger.handlers):
        logger.removeHandler(handler)
        handler.close()

    stream_handler = logging.StreamHandler(sys.stderr)
    stream_handler.setLevel(numeric_level)
    stream_handler.setFormatter(logging.Formatter(LOG_FORMAT))
    logger.addHandler(stream_handler)

    if log_file_name:
        file_handler = logging.FileHandler(log_file_name)
        file_handler.setLevel(numeric_level)
        file_handler.setFormatter(logging.Formatter(LOG_FORMAT))
        logger.addHandler(file_handler)

    logger.propagate = False
    return logger
