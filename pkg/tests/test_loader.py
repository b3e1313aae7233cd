import logging

import pytest

from src.utils.loader import (
    CONFIG_PATH,
    ConfigError,
    RuleFileError,
    atomic_write_bytes,
    load_config,
    read_rule_lines,
    read_word_list,
    resolve_path,
    validate_columns,
)
from src.utils.logging_config import setup_logging


def _write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


def test_load_default_config():
    """The shipped config loads and carries the merge defaults."""
    cfg = load_config()

    assert CONFIG_PATH.exists()
    assert cfg["merge"]["threshold"] == pytest.approx(0.94)
    assert cfg["eligibility"]["min_clusters"] == 5


def test_env_overrides_resource(tmp_path, monkeypatch):
    path = _write(tmp_path, "config.yaml", "resource: data/entities.txt\n")
    monkeypatch.setenv("NAMEBANK_RESOURCE", "/tmp/other.zip")

    cfg = load_config(path)

    assert cfg["resource"] == "/tmp/other.zip"


@pytest.mark.parametrize("text", ["- just\n- a list\n", "resource: [unclosed\n"])
def test_bad_config_raises(tmp_path, text):
    path = _write(tmp_path, "config.yaml", text)
    with pytest.raises(ConfigError):
        load_config(path)


def test_missing_config_raises(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "absent.yaml")


def test_read_rule_lines_skips_comments_and_blanks(tmp_path):
    path = _write(tmp_path, "rules.tsv", "# comment\n\nou\tu\nkh\th\tstart\n")

    lines = list(read_rule_lines(path, 2, 3))

    assert lines == [(3, ["ou", "u"]), (4, ["kh", "h", "start"])]


def test_read_rule_lines_reports_bad_width(tmp_path):
    """A line with too many columns names its line number."""
    path = _write(tmp_path, "rules.tsv", "ou\tu\na\tb\tc\td\n")

    with pytest.raises(RuleFileError) as excinfo:
        list(read_rule_lines(path, 2, 3))

    assert excinfo.value.line_no == 2
    assert str(path) in str(excinfo.value)


def test_validate_columns_exact_width():
    validate_columns("x.tsv", 1, ["a"], 1)
    with pytest.raises(RuleFileError):
        validate_columns("x.tsv", 1, ["a", "b"], 1)


def test_read_word_list(tmp_path):
    path = _write(tmp_path, "words.txt", "# persons\nAnna Lindh\n  Tony Blair  \n")
    assert read_word_list(path) == ["Anna Lindh", "Tony Blair"]


def test_resolve_path_is_project_relative():
    assert resolve_path("config/config.yaml") == CONFIG_PATH
    assert resolve_path("/abs/path.txt").as_posix() == "/abs/path.txt"


def test_atomic_write_replaces_content(tmp_path):
    target = tmp_path / "out" / "names.txt"

    atomic_write_bytes(target, b"first")
    atomic_write_bytes(target, b"second")

    assert target.read_bytes() == b"second"
    assert [p.name for p in target.parent.iterdir()] == ["names.txt"]


def test_setup_logging_writes_run_file(tmp_path):
    """A log directory gets one timestamped file per run; repeated setup does not stack handlers."""
    root = logging.getLogger()
    before = len(root.handlers)
    level = root.level
    try:
        setup_logging(tmp_path, "DEBUG")
        log_path = setup_logging(tmp_path, "DEBUG")
        logging.getLogger("src.test").info("hello %s", "log")

        assert len(root.handlers) == before + 2
        assert log_path.name.startswith("run_")
        assert "| src.test | INFO | hello log" in log_path.read_text(encoding="utf-8")
    finally:
        setup_logging(None, "WARNING")
        for handler in list(root.handlers)[before:]:
            root.removeHandler(handler)
            handler.close()
        root.setLevel(level)
