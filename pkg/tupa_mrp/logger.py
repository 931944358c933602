"""
Logging configuration for TUPA-MRP.
Unified logging management.
"""
import logging
import sys
from pathlib import Path
from typing import Optional

PREFIX = 'tupa_mrp'


def setup_logger(log_file: Optional[str] = None, level: int = logging.INFO):
    """
    Configure the root logger so every module's records reach the console and, optionally, a file.
    """
    root_logger = logging.getLogger()
    root_logger.setLevel(level)

    # already configured: only the console level changes
    if root_logger.handlers:
        for handler in root_logger.handlers:
            if isinstance(handler, logging.StreamHandler) and not isinstance(handler, logging.FileHandler):
                handler.setLevel(level)
        return root_logger

    console_formatter = logging.Formatter('%(asctime)s - %(levelname)s - %(message)s', datefmt='%H:%M:%S')
    file_formatter = logging.Formatter('%(asctime)s - %(name)s - %(levelname)s - %(message)s')

    console_handler = logging.StreamHandler(sys.stdout)
    console_handler.setLevel(level)
    console_handler.setFormatter(console_formatter)
    root_logger.addHandler(console_handler)

    if log_file:
        try:
            log_path = Path(log_file)
            log_path.parent.mkdir(parents=True, exist_ok=True)

            file_handler = logging.FileHandler(log_file, encoding='utf-8')
            # the file also keeps debug records
            file_handler.setLevel(logging.DEBUG)
            file_handler.setFormatter(file_formatter)
            root_logger.addHandler(file_handler)
        except OSError as e:
            print(f"Failed to setup file logging: {e}")

    return root_logger


def get_logger(name: Optional[str] = None):
    """
    Package logger, or the child logger for one module.
    e.g. get_logger('oracle') -> 'tupa_mrp.oracle'
    """
    if name:
        return logging.getLogger(f'{PREFIX}.{name}')
    return logging.getLogger(PREFIX)
