"""
Domain types shared by every stage of the toolkit.

An entity is a person or organisation with a numeric id and an ordered
list of name variants; the first variant is the main name. Each variant
carries a language scope ("u" = every language) and release flags that are
not part of the four-column resource format.
"""
import re
from dataclasses import dataclass, field
from enum import Enum
from typing import FrozenSet, Iterable, List, Optional

from src.core.errors import InvalidSurface

UNIVERSAL = "u"

_LANGUAGE_RE = re.compile(r"[a-z]{2}")
_FORBIDDEN_CHARS = ("\t", "\n", "\r", "+")


class EntityType(str, Enum):
    PERSON = "P"
    ORGANISATION = "O"

    @classmethod
    def parse(cls, code: str) -> "EntityType":
        return cls(code)


class VariantFlag(str, Enum):
    VALIDATED = "validated"
    FROM_WIKIPEDIA = "wikipedia"
    FREQUENCY_ELIGIBLE = "eligible"


def is_valid_scope(code: str) -> bool:
    """True for the universal marker or a two-letter lowercase code."""
    return code == UNIVERSAL or bool(_LANGUAGE_RE.fullmatch(code))


def in_scope(scope: str, language: Optional[str]) -> bool:
    """Whether a variant scoped to ``scope`` is active for ``language``."""
    return scope == UNIVERSAL or (language is not None and scope == language)


def check_surface(surface: str) -> str:
    """
    Validate a display surface against the storage invariants.

    Raises:
        InvalidSurface: empty, tab/newline/'+' inside, untrimmed, or
            containing a run of spaces.
    """
    if not surface:
        raise InvalidSurface("surface is empty")
    for ch in _FORBIDDEN_CHARS:
        if ch in surface:
            raise InvalidSurface(f"surface {surface!r} contains {ch!r}")
    if surface != surface.strip():
        raise InvalidSurface(f"surface {surface!r} has surrounding whitespace")
    if "  " in surface:
        raise InvalidSurface(f"surface {surface!r} has consecutive spaces")
    return surface


@dataclass(frozen=True)
class NameVariant:
    surface: str
    scope: str = UNIVERSAL
    flags: FrozenSet[VariantFlag] = frozenset()

    def __post_init__(self) -> None:
        check_surface(self.surface)
        if not is_valid_scope(self.scope):
            raise InvalidSurface(f"invalid language scope {self.scope!r}")
        object.__setattr__(self, "flags", frozenset(self.flags))

    @property
    def key(self):
        return (self.surface, self.scope)

    @property
    def eligible(self) -> bool:
        return VariantFlag.FREQUENCY_ELIGIBLE in self.flags

    def with_scope(self, scope: str) -> "NameVariant":
        return NameVariant(self.surface, scope, self.flags)

    def with_flags(self, flags: Iterable[VariantFlag]) -> "NameVariant":
        return NameVariant(self.surface, self.scope, frozenset(flags))


@dataclass
class EntityRecord:
    id: int
    etype: EntityType
    variants: List[NameVariant] = field(default_factory=list)

    @property
    def main_name(self) -> str:
        return self.variants[0].surface

    def find(self, surface: str, scope: Optional[str] = None) -> int:
        """Index of the first variant with ``surface`` (and ``scope``), or -1."""
        for idx, variant in enumerate(self.variants):
            if variant.surface == surface and (scope is None or variant.scope == scope):
                return idx
        return -1

    def has(self, surface: str, scope: str) -> bool:
        return self.find(surface, scope) >= 0

    def add_variant(self, variant: NameVariant) -> bool:
        """Append unless the (surface, scope) pair is present; True if added."""
        if self.has(variant.surface, variant.scope):
            return False
        self.variants.append(variant)
        return True


@dataclass(frozen=True)
class CandidateName:
    """A newly found name waiting to be merged or registered."""

    surface: str
    language: str = UNIVERSAL
    guessed_type: EntityType = EntityType.PERSON
    evidence: tuple = ()
    cluster_count: int = 0
