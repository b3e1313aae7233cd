import logging
import os
import tempfile
from pathlib import Path
from typing import Any, Dict, Iterator, List, Optional, Sequence, Tuple, Union

import yaml

from src.core.errors import GazetteerError

logger = logging.getLogger(__name__)

PROJECT_ROOT = Path(__file__).resolve().parents[2]
CONFIG_PATH = PROJECT_ROOT / "config" / "config.yaml"

# Environment variables that override config keys.
ENV_OVERRIDES: Dict[str, str] = {
    "NAMEBANK_RESOURCE": "resource",
    "NAMEBANK_LOG_DIR": "log_dir",
}


class RuleFileError(GazetteerError):
    """A rule, table or lexicon file could not be read."""

    def __init__(self, path: Union[str, Path], line_no: int, message: str) -> None:
        self.path = str(path)
        self.line_no = line_no
        super().__init__(f"{path}:{line_no}: {message}")


class ConfigError(GazetteerError):
    """Invalid configuration value."""
    pass


def resolve_path(path: Union[str, Path]) -> Path:
    """Resolve a config path; relative paths are taken from the project root."""
    path = Path(path)
    return path if path.is_absolute() else PROJECT_ROOT / path


def load_config(path: Union[str, Path, None] = None) -> Dict[str, Any]:
    """Load the YAML config file and apply environment overrides."""
    path = resolve_path(path) if path is not None else CONFIG_PATH
    logger.info("Loading config from %s", path)
    try:
        with open(path, encoding="utf-8") as f:
            cfg = yaml.safe_load(f) or {}
    except FileNotFoundError:
        logger.error("Config file not found at path: %s", path)
        raise ConfigError(f"config file not found: {path}") from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"config file {path} is not valid YAML: {exc}") from exc

    if not isinstance(cfg, dict):
        raise ConfigError(f"config file {path} must hold a mapping")

    for env_name, key in ENV_OVERRIDES.items():
        value = os.getenv(env_name)
        if value:
            logger.info("Overriding %s from environment: %s", key, value)
            cfg[key] = value

    logger.info("Config loaded successfully")
    return cfg


def read_rule_lines(
    path: Union[str, Path],
    min_columns: int = 1,
    max_columns: Optional[int] = None,
) -> Iterator[Tuple[int, List[str]]]:
    """
    Yield ``(line_no, columns)`` for every data line of a tab-separated
    rule file. Blank lines and lines starting with '#' are skipped.

    Raises:
        FileNotFoundError: if the file does not exist.
        RuleFileError: on a line with the wrong number of columns.
    """
    path = resolve_path(path)
    logger.debug("Reading rule file %s", path)
    with open(path, encoding="utf-8") as f:
        for line_no, line in enumerate(f, start=1):
            line = line.rstrip("\n").rstrip("\r")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            columns = line.split("\t")
            validate_columns(path, line_no, columns, min_columns, max_columns)
            yield line_no, columns


def validate_columns(
    path: Union[str, Path],
    line_no: int,
    columns: Sequence[str],
    min_columns: int,
    max_columns: Optional[int] = None,
) -> None:
    """Raise RuleFileError if ``columns`` has the wrong width."""
    if max_columns is None:
        max_columns = min_columns
    if not min_columns <= len(columns) <= max_columns:
        logger.error(
            "Column check failed in %s line %d: %d columns", path, line_no, len(columns)
        )
        raise RuleFileError(
            path,
            line_no,
            f"expected {min_columns}-{max_columns} tab-separated columns, got {len(columns)}",
        )


def read_word_list(path: Union[str, Path]) -> List[str]:
    """One entry per line, '#' comments and blanks skipped, order kept."""
    return [columns[0].strip() for _line_no, columns in read_rule_lines(path, 1, 1)]


def atomic_write_bytes(path: Union[str, Path], data: bytes) -> None:
    """
    Write ``data`` to ``path`` via a temp file in the same directory and
    an atomic rename, so readers never see a torn file.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(data)
            f.flush()
            os.fsync(f.fileno())
        os.replace(tmp_name, path)
    except BaseException:
        logger.exception("Atomic write to %s failed; leaving target untouched", path)
        try:
            os.unlink(tmp_name)
        except FileNotFoundError:
            pass
        raise
