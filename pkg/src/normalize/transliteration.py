"""
Step one of name keying: rewrite non-Latin graphemes into Latin with
per-script rule tables, then lowercase.

Table files hold ``<source>\\t<replacement>`` lines with lowercase sources;
uppercase and capitalised forms are derived on load. Latin letters,
combining marks and ASCII pass through; anything else without a rule is
dropped and reported.
"""
import logging
import unicodedata
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import regex

from src.utils.loader import PROJECT_ROOT, read_rule_lines, resolve_path

logger = logging.getLogger(__name__)

DEFAULT_TABLE_DIR = PROJECT_ROOT / "resources" / "translit"


@dataclass(frozen=True)
class TransliterationTable:
    rules: Dict[str, str] = field(default_factory=dict)
    name: str = "empty"

    def __post_init__(self) -> None:
        # longest source first; ties broken by code point for determinism
        sources = sorted(self.rules, key=lambda s: (-len(s), s))
        pattern = (
            regex.compile("|".join(regex.escape(s) for s in sources)) if sources else None
        )
        object.__setattr__(self, "_pattern", pattern)

    def __len__(self) -> int:
        return len(self.rules)

    @property
    def pattern(self) -> Optional["regex.Pattern"]:
        return self._pattern


def _case_forms(source: str) -> List[str]:
    forms = [source]
    for form in (source.upper(), source.capitalize()):
        if form not in forms:
            forms.append(form)
    return forms


def load_transliteration_table(
    paths: Union[str, Path, Sequence[Union[str, Path]]],
) -> TransliterationTable:
    """
    Merge one or more table files into a single table. When two files map
    the same source, the first mapping wins.
    """
    if isinstance(paths, (str, Path)):
        paths = [paths]

    rules: Dict[str, str] = {}
    names = []
    for path in paths:
        path = resolve_path(path)
        names.append(path.stem)
        for line_no, columns in read_rule_lines(path, min_columns=2, max_columns=2):
            source, replacement = columns
            if not source:
                logger.warning("%s line %d: empty source ignored", path, line_no)
                continue
            for form in _case_forms(source):
                if form in rules and rules[form] != replacement:
                    logger.warning(
                        "%s line %d: %r already maps to %r", path, line_no, form, rules[form]
                    )
                    continue
                rules.setdefault(form, replacement)

    logger.info("Loaded transliteration table %s with %d rules", "+".join(names), len(rules))
    return TransliterationTable(rules=rules, name="+".join(names) or "empty")


def load_default_table() -> TransliterationTable:
    """All shipped tables under resources/translit, in file-name order."""
    return load_transliteration_table(sorted(DEFAULT_TABLE_DIR.glob("*.tsv")))


def _passes_through(ch: str) -> bool:
    if ch.isascii() or unicodedata.combining(ch):
        return True
    return unicodedata.name(ch, "").startswith("LATIN")


def _copy_unmapped(segment: str, out: List[str], dropped: List[str]) -> None:
    for ch in segment:
        if _passes_through(ch):
            out.append(ch)
        elif ch.isspace():
            out.append(" ")
        else:
            dropped.append(ch)


def transliterate_with_diagnostics(
    name: str, table: TransliterationTable
) -> Tuple[str, List[str]]:
    """
    Transliterate ``name`` and return the result plus a diagnostic per
    dropped character.
    """
    name = unicodedata.normalize("NFC", name)
    out: List[str] = []
    dropped: List[str] = []

    pos = 0
    if table.pattern is not None:
        for m in table.pattern.finditer(name):
            _copy_unmapped(name[pos : m.start()], out, dropped)
            out.append(table.rules[m.group()])
            pos = m.end()
    _copy_unmapped(name[pos:], out, dropped)

    diagnostics = [
        f"no transliteration rule for {ch!r} (U+{ord(ch):04X} {unicodedata.name(ch, '?')})"
        for ch in dropped
    ]
    if diagnostics:
        logger.warning("Dropped %d unmapped characters from %r", len(dropped), name)
    return "".join(out).lower(), diagnostics


def transliterate(name: str, table: TransliterationTable) -> str:
    """Latin, lowercased form of ``name``; accents survive this step."""
    return transliterate_with_diagnostics(name, table)[0]

