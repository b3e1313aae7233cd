import logging
from dataclasses import dataclass, field
from typing import Dict, Optional

from src.normalize.rules import DEFAULT_RULES, NormalizationRuleSet, normalize
from src.normalize.transliteration import (
    TransliterationTable,
    load_default_table,
    transliterate,
)

logger = logging.getLogger(__name__)

VOWELS = frozenset("aeiou")


@dataclass(frozen=True)
class NameKey:
    """Transliterated form, normalized form and consonant signature of a name."""

    translit: str
    normalized: str
    signature: str


def consonant_signature(normalized: str) -> str:
    """Drop every vowel; words stay separated by single spaces."""
    words = ("".join(ch for ch in word if ch not in VOWELS) for word in normalized.split())
    return " ".join(w for w in words if w)


def levenshtein(a: str, b: str) -> int:
    """Unit-cost edit distance (insert, delete, substitute)."""
    if a == b:
        return 0
    if len(a) < len(b):
        a, b = b, a
    if not b:
        return len(a)

    previous = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        current = [i]
        for j, cb in enumerate(b, start=1):
            current.append(
                min(
                    previous[j] + 1,
                    current[j - 1] + 1,
                    previous[j - 1] + (ca != cb),
                )
            )
        previous = current
    return previous[-1]


def string_similarity(x: str, y: str) -> float:
    """1 - distance / longer length; two empty strings are identical."""
    longest = max(len(x), len(y))
    if longest == 0:
        return 1.0
    return 1.0 - levenshtein(x, y) / longest


def similarity(a: NameKey, b: NameKey) -> float:
    """Mean of the transliterated-form and normalized-form similarities."""
    return (
        string_similarity(a.translit, b.translit)
        + string_similarity(a.normalized, b.normalized)
    ) / 2.0


@dataclass
class NameKeyBuilder:
    """
    Builds NameKeys with one transliteration table and rule set, caching
    results per surface.
    """

    table: TransliterationTable
    rules: NormalizationRuleSet = DEFAULT_RULES
    _cache: Dict[str, NameKey] = field(default_factory=dict, repr=False)

    @classmethod
    def default(cls, rules: Optional[NormalizationRuleSet] = None) -> "NameKeyBuilder":
        return cls(table=load_default_table(), rules=rules or DEFAULT_RULES)

    def key(self, surface: str) -> NameKey:
        cached = self._cache.get(surface)
        if cached is not None:
            return cached
        translit = transliterate(surface, self.table)
        normalized = normalize(translit, self.rules)
        key = NameKey(translit, normalized, consonant_signature(normalized))
        self._cache[surface] = key
        return key
