"""
Step two of name keying: the rule cascade that maps spelling variants of a
name onto one normalized string.

Rule files are tab-separated ``<source>\\t<replacement>\\t<anchor>`` with
anchor in {any, start, end, token}. Two builtin operations are written as
sources: ``<strip-accents>`` and ``<degeminate>``.
"""
import logging
import re
from dataclasses import dataclass
from pathlib import Path
from typing import FrozenSet, Pattern, Tuple, Union

from unidecode import unidecode

from src.utils.loader import RuleFileError, read_rule_lines, resolve_path

logger = logging.getLogger(__name__)

STRIP_ACCENTS = "<strip-accents>"
DEGEMINATE = "<degeminate>"
BUILTINS = (STRIP_ACCENTS, DEGEMINATE)
ANCHORS = ("any", "start", "end", "token")

MAX_PASSES = 10

_DOUBLE_CONSONANT = re.compile(r"([^\W\d_aeiou])\1+")
_NON_LETTER = re.compile(r"[^a-z]+")


@dataclass(frozen=True)
class NormalizationRule:
    source: str
    replacement: str = ""
    anchor: str = "any"

    def __post_init__(self) -> None:
        if self.anchor not in ANCHORS:
            raise ValueError(f"unknown anchor {self.anchor!r}")
        object.__setattr__(self, "_regex", self._compile())

    @property
    def builtin(self) -> bool:
        return self.source in BUILTINS

    def _compile(self) -> Pattern:
        if self.source == DEGEMINATE:
            return _DOUBLE_CONSONANT
        if self.source == STRIP_ACCENTS:
            return None
        literal = re.escape(self.source)
        if self.anchor == "start":
            return re.compile("^" + literal)
        if self.anchor == "end":
            return re.compile(literal + "$")
        if self.anchor == "token":
            return re.compile(r"(?<!\S)" + literal)
        return re.compile(literal)

    def apply(self, text: str, protected: FrozenSet[str] = frozenset()) -> str:
        if self.source == STRIP_ACCENTS:
            return strip_accents(text, protected)
        if self.source == DEGEMINATE:
            return self._regex.sub(r"\1", text)
        replacement = self.replacement
        return self._regex.sub(lambda _m: replacement, text)


@dataclass(frozen=True)
class NormalizationRuleSet:
    rules: Tuple[NormalizationRule, ...]

    def __len__(self) -> int:
        return len(self.rules)

    def protected_after(self, index: int) -> FrozenSet[str]:
        """Non-ASCII characters rewritten by a rule after ``index``."""
        chars = set()
        for rule in self.rules[index + 1 :]:
            if not rule.builtin:
                chars.update(ch for ch in rule.source if not ch.isascii())
        return frozenset(chars)


DEFAULT_RULES = NormalizationRuleSet(
    (
        NormalizationRule(STRIP_ACCENTS),
        NormalizationRule(DEGEMINATE),
        NormalizationRule("ou", "u"),
        NormalizationRule("al-", "", "token"),
        NormalizationRule("wl", "vl", "start"),
        NormalizationRule("ow", "ov", "end"),
        NormalizationRule("ck", "k"),
        NormalizationRule("ph", "f"),
        NormalizationRule("ž", "j"),
        NormalizationRule("š", "sh"),
        NormalizationRule("x", "ks"),
    )
)


def strip_accents(text: str, protected: FrozenSet[str] = frozenset()) -> str:
    """Fold every non-ASCII letter to its ASCII base unless it is protected."""
    if text.isascii():
        return text
    return "".join(
        ch if ch.isascii() or ch in protected else unidecode(ch).lower() for ch in text
    )


def _cleanup(text: str) -> str:
    return _NON_LETTER.sub(" ", text).strip()


def normalize(translit: str, rules: NormalizationRuleSet = DEFAULT_RULES) -> str:
    """
    Apply the rule cascade in order, then reduce to lowercase ASCII
    letters and single spaces. The cascade repeats until the text stops
    changing, so the result is a fixpoint.
    """
    protected = [rules.protected_after(i) for i in range(len(rules))]
    text = translit
    for _ in range(MAX_PASSES):
        previous = text
        for rule, keep in zip(rules.rules, protected):
            text = rule.apply(text, keep)
        text = _cleanup(text)
        if text == previous:
            return text
    logger.warning("Normalization of %r did not converge after %d passes", translit, MAX_PASSES)
    return text


def load_rule_set(path: Union[str, Path]) -> NormalizationRuleSet:
    """
    Read a normalization rule file.

    Raises:
        RuleFileError: unknown anchor or empty source.
    """
    path = resolve_path(path)
    rules = []
    for line_no, columns in read_rule_lines(path, min_columns=1, max_columns=3):
        source = columns[0]
        replacement = columns[1] if len(columns) > 1 else ""
        anchor = columns[2] if len(columns) > 2 and columns[2] else "any"
        if not source:
            raise RuleFileError(path, line_no, "empty rule source")
        if anchor not in ANCHORS:
            raise RuleFileError(path, line_no, f"unknown anchor {anchor!r}")
        rules.append(NormalizationRule(source, replacement, anchor))
    logger.info("Loaded %d normalization rules from %s", len(rules), path)
    return NormalizationRuleSet(tuple(rules))
