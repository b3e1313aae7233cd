import logging
import sys
from datetime import datetime
from pathlib import Path
from typing import Optional, Union

LOG_FORMAT = "%(asctime)s | %(name)s | %(levelname)s | %(message)s"

# marks handlers installed here so a second call only replaces its own
_HANDLER_TAG = "_namebank_handler"


def setup_logging(
    log_dir: Union[str, Path, None] = None, level: Union[str, int] = "INFO"
) -> Optional[Path]:
    """
    Configure logging to the error stream and, when ``log_dir`` is given,
    to a timestamped log file.

    Returns
    -------
    Path or None
        Path to the log file created for this run.
    """
    if isinstance(level, str):
        level = logging.getLevelName(level.upper())
        if not isinstance(level, int):
            level = logging.INFO

    formatter = logging.Formatter(LOG_FORMAT)
    root_logger = logging.getLogger()
    for handler in list(root_logger.handlers):
        if getattr(handler, _HANDLER_TAG, False):
            root_logger.removeHandler(handler)
            handler.close()

    # Console handler; stdout carries data only
    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setFormatter(formatter)
    console_handler.setLevel(level)
    setattr(console_handler, _HANDLER_TAG, True)
    root_logger.addHandler(console_handler)

    log_path = None
    if log_dir is not None:
        logs_dir = Path(log_dir)
        logs_dir.mkdir(parents=True, exist_ok=True)
        timestamp = datetime.now().strftime("%Y%m%d_%H%M%S")
        log_path = logs_dir / f"run_{timestamp}.log"

        file_handler = logging.FileHandler(log_path, encoding="utf-8")
        file_handler.setFormatter(formatter)
        file_handler.setLevel(level)
        setattr(file_handler, _HANDLER_TAG, True)
        root_logger.addHandler(file_handler)

    root_logger.setLevel(level)
    return log_path
