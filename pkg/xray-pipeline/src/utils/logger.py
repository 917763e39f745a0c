import logging
import sys
from pathlib import Path
from datetime import datetime
from typing import Optional, Union

from src.config import settings


def _resolve_level(level: Union[int, str]) -> int:
    if isinstance(level, int):
        return level
    resolved = logging.getLevelName(str(level).upper())
    return resolved if isinstance(resolved, int) else logging.INFO


def setup_logger(
    name: str,
    log_level: Optional[Union[int, str]] = None,
    log_dir: Optional[Path] = None,
    console_level: Optional[Union[int, str]] = None,
) -> logging.Logger:
    """
    Setup logger with both console and file handlers

    Args:
        name: Name of the logger (usually __name__; "" configures the root logger)
        log_level: Level of the file handler (default: settings.log_level)
        log_dir: Directory for the run log (default: settings.log_dir)
        console_level: Level of the stderr handler (default: settings.console_log_level)

    Returns:
        Configured logger instance
    """
    logger = logging.getLogger(name)
    logger.setLevel(logging.DEBUG)  # Capture all levels, handlers will filter

    # Prevent duplicate handlers if logger already exists
    if logger.handlers:
        return logger

    formatter = logging.Formatter(
        '%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        datefmt='%Y-%m-%d %H:%M:%S'
    )

    # Console handler - WARNING and above; stdout is reserved for command output
    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setLevel(_resolve_level(console_level or settings.console_log_level))
    console_handler.setFormatter(formatter)
    logger.addHandler(console_handler)

    if settings.log_to_file:
        log_dir = Path(log_dir or settings.log_dir)
        log_dir.mkdir(parents=True, exist_ok=True)

        timestamp = datetime.now().strftime('%Y%m%d_%H%M%S')
        log_file = log_dir / f"xraynet_{timestamp}.log"

        file_handler = logging.FileHandler(log_file)
        file_handler.setLevel(_resolve_level(log_level or settings.log_level))
        file_handler.setFormatter(formatter)
        logger.addHandler(file_handler)

        logger.info(f"Logger initialized. Log file: {log_file}")

    return logger
