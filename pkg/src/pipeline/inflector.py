"""
Pre-generation of name variants that plain lookup would miss:
morphological inflections (suffix alternations per language) and regular
surface alternations (hyphen vs space, dropped "al"/"el" particles).
"""
import itertools
import logging
from collections import deque
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import regex

from src.core.errors import GazetteerError
from src.core.models import NameVariant, is_valid_scope
from src.core.repository import Repository
from src.utils.loader import RuleFileError, resolve_path

logger = logging.getLogger(__name__)

DEFAULT_PARTICLES = ("al", "el")


class EmptyRuleSet(GazetteerError):
    """An inflection rule set without any suffix."""
    pass


class IneligibleVariant(GazetteerError):
    """The variant has not been seen in enough clusters to be expanded."""
    pass


@dataclass(frozen=True)
class InflectionRuleSet:
    language: str
    token_suffix_alternatives: Tuple[str, ...]
    # tokens must fully match one of these to take suffixes; empty = every token
    applies_to: Tuple[str, ...] = ()

    def __post_init__(self) -> None:
        seen = []
        for suffix in self.token_suffix_alternatives:
            if suffix not in seen:
                seen.append(suffix)
        object.__setattr__(self, "token_suffix_alternatives", tuple(seen))
        object.__setattr__(
            self, "_predicates", tuple(regex.compile(p) for p in self.applies_to)
        )

    @property
    def suffixes(self) -> Tuple[str, ...]:
        """Non-empty suffixes; the bare token is always a form of its own."""
        return tuple(s for s in self.token_suffix_alternatives if s)

    def applies(self, token: str) -> bool:
        if not self._predicates:
            return True
        return any(p.fullmatch(token) for p in self._predicates)


@dataclass(frozen=True)
class VariantExpansion:
    base: NameVariant
    pattern: str
    enumerated: Optional[Tuple[str, ...]] = None


def load_inflection_rules(path: Union[str, Path]) -> InflectionRuleSet:
    """
    Read a rule file: a ``lang <code>`` header, then one suffix per line,
    optional ``applies-to <regex>`` lines, '#' comments.

    Raises:
        RuleFileError: missing or bad header, invalid predicate.
        EmptyRuleSet: no suffix lines.
    """
    path = resolve_path(path)
    language = None
    suffixes: List[str] = []
    predicates: List[str] = []

    with open(path, encoding="utf-8") as f:
        for line_no, raw in enumerate(f, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if language is None:
                head, _, code = line.partition(" ")
                if head != "lang" or not is_valid_scope(code.strip()):
                    raise RuleFileError(path, line_no, "expected header 'lang <code>'")
                language = code.strip()
                continue
            if line.startswith("applies-to "):
                pattern = line[len("applies-to ") :].strip()
                try:
                    regex.compile(pattern)
                except regex.error as exc:
                    raise RuleFileError(path, line_no, f"bad predicate: {exc}") from exc
                predicates.append(pattern)
                continue
            if any(ch.isspace() or ch == "+" for ch in line):
                raise RuleFileError(path, line_no, f"invalid suffix {line!r}")
            suffixes.append(line)

    if language is None:
        raise RuleFileError(path, 1, "missing 'lang <code>' header")
    if not suffixes:
        raise EmptyRuleSet(f"{path}: no suffixes for language {language}")

    logger.info("Loaded %d %s suffixes from %s", len(suffixes), language, path)
    return InflectionRuleSet(language, tuple(suffixes), tuple(predicates))


def _token_forms(token: str, rules: InflectionRuleSet) -> List[str]:
    if not rules.applies(token):
        return [token]
    return [token] + [token + suffix for suffix in rules.suffixes]


def expand_inflections(
    name: NameVariant, rules: InflectionRuleSet, enumerate_forms: bool = True
) -> VariantExpansion:
    """
    Build the inflection pattern for ``name``: every token followed by an
    optional group of the rule set's suffixes, tokens joined by ``\\s+``.
    The enumerated forms are the cross product of the per-token forms.

    Raises:
        EmptyRuleSet: the rule set has no suffixes at all.
        IneligibleVariant: ``name`` lacks the cluster-frequency flag.
    """
    if not rules.token_suffix_alternatives:
        raise EmptyRuleSet(f"no suffixes for language {rules.language}")
    if not name.eligible:
        raise IneligibleVariant(f"{name.surface!r} is not eligible for expansion")

    tokens = name.surface.split(" ")
    group = "(" + "|".join(regex.escape(s) for s in rules.suffixes) + ")?"
    pieces = [
        regex.escape(t) + (group if rules.suffixes and rules.applies(t) else "")
        for t in tokens
    ]
    pattern = r"\s+".join(pieces)

    enumerated = None
    if enumerate_forms:
        per_token = [_token_forms(t, rules) for t in tokens]
        enumerated = tuple(" ".join(combo) for combo in itertools.product(*per_token))

    return VariantExpansion(base=name, pattern=pattern, enumerated=enumerated)


def _particle_drops(tokens: Sequence[str], particles: Sequence[str]) -> List[List[str]]:
    results = []
    for i in range(1, len(tokens)):
        token = tokens[i]
        lowered = token.lower()
        for particle in particles:
            if lowered == particle and i + 1 < len(tokens):
                results.append(list(tokens[:i]) + list(tokens[i + 1 :]))
            elif lowered.startswith(particle + "-") and len(token) > len(particle) + 1:
                results.append(list(tokens[:i]) + [token[len(particle) + 1 :]] + list(tokens[i + 1 :]))
    return results


def _neighbours(surface: str, particles: Sequence[str]) -> List[str]:
    out = []
    for idx, ch in enumerate(surface):
        if ch == "-" and 0 < idx < len(surface) - 1:
            candidate = surface[:idx] + " " + surface[idx + 1 :]
            if "  " not in candidate:
                out.append(candidate)
    for tokens in _particle_drops(surface.split(" "), particles):
        out.append(" ".join(tokens))
    return out


def surface_variants(
    name: NameVariant, particles: Sequence[str] = DEFAULT_PARTICLES
) -> List[NameVariant]:
    """
    Closure of hyphen-to-space substitution and removal of non-initial
    "al"/"el" particles. The input itself is never returned; generated
    variants keep the scope and carry no flags.
    """
    seen = {name.surface}
    order: List[str] = []
    queue = deque([name.surface])
    while queue:
        current = queue.popleft()
        for nxt in _neighbours(current, particles):
            if nxt not in seen and nxt.strip():
                seen.add(nxt)
                order.append(nxt)
                queue.append(nxt)
    return [NameVariant(s, name.scope) for s in order]


def expand_repository(
    repo: Repository,
    rules: Optional[InflectionRuleSet],
    particles: Sequence[str] = DEFAULT_PARTICLES,
) -> Tuple[Repository, int]:
    """
    Copy of ``repo`` where every eligible variant gains its surface
    variants (same scope) and, with ``rules``, its enumerated inflections
    (scoped to the rule language). Returns the copy and the number of
    variants added.
    """
    updated = repo.copy()
    added = 0
    for entity in updated.iter_entities():
        for variant in [v for v in entity.variants if v.eligible]:
            generated = list(surface_variants(variant, particles))
            if rules is not None:
                expansion = expand_inflections(variant, rules)
                generated.extend(
                    NameVariant(s, rules.language)
                    for s in expansion.enumerated
                    if s != variant.surface
                )
            for new_variant in generated:
                if entity.add_variant(new_variant):
                    added += 1

    logger.info("Expansion added %d variants", added)
    return updated, added
