"""
Finds every known name in text with a finite-state multi-pattern automaton.

Patterns are inserted case-folded into an Aho-Corasick automaton. Text is
scanned through a view where each whitespace run is a single space, so one
stored space matches any run of whitespace. Every automaton hit is then
checked against the case contract (an uppercase stored letter only matches
itself, a lowercase one matches both cases) and the word-boundary rule,
and overlaps are resolved leftmost-longest.
"""
import bisect
import logging
import re
import unicodedata
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple

import ahocorasick

from src.core.models import in_scope
from src.core.repository import Repository

logger = logging.getLogger(__name__)

_WHITESPACE_RUN = re.compile(r"\s+")


class Match(NamedTuple):
    id: int
    main_name: str
    surface_found: str
    offset: int
    length: int


@dataclass(frozen=True)
class Payload:
    entity_id: int
    variant_index: int
    main_name: str
    surface: str
    # positions of uppercase letters that must match exactly
    upper_positions: Tuple[int, ...]


def fold_char(ch: str) -> str:
    """Single-code-point lowercase; characters whose lowercase is longer stay as they are."""
    low = ch.lower()
    if len(low) != 1:
        return ch
    return "σ" if low == "ς" else low


def fold(text: str) -> str:
    """Length-preserving case fold used for automaton keys and scanned text."""
    low = text.lower()
    if len(low) == len(text):
        return low.replace("ς", "σ")
    return "".join(fold_char(ch) for ch in text)


def is_word_char(ch: str) -> bool:
    """Letters and combining marks; a name may not start or end next to one."""
    return ch.isalpha() or unicodedata.category(ch).startswith("M")


def collapse_whitespace(text: str) -> Tuple[str, List[int], List[int]]:
    """
    Replace every whitespace run with one space. Returns the view plus a
    shift table: for view index ``v``, the original index is
    ``v + shifts[bisect_right(starts, v) - 1]``.
    """
    parts: List[str] = []
    starts: List[int] = [0]
    shifts: List[int] = [0]
    pos = 0
    removed = 0
    view_len = 0
    for m in _WHITESPACE_RUN.finditer(text):
        parts.append(text[pos : m.start()])
        parts.append(" ")
        view_len += m.start() - pos + 1
        run = m.end() - m.start()
        pos = m.end()
        if run > 1:
            removed += run - 1
            starts.append(view_len)
            shifts.append(removed)
    parts.append(text[pos:])
    return "".join(parts), starts, shifts


class CompiledMatcher:
    """
    Immutable lookup structure for one target language. Safe to share
    between threads; build a new one to pick up repository changes.
    """

    def __init__(
        self,
        automaton: Optional["ahocorasick.Automaton"],
        built_for: Optional[str],
        pattern_count: int,
        entity_count: int,
        variant_count: int,
    ) -> None:
        self._automaton = automaton
        self.built_for = built_for
        self.pattern_count = pattern_count
        self.entity_count = entity_count
        self.variant_count = variant_count

    @property
    def state_count(self) -> int:
        if self._automaton is None:
            return 0
        return int(self._automaton.get_stats()["nodes_count"])

    def stats(self) -> Dict[str, int]:
        return {
            "entities": self.entity_count,
            "variants": self.variant_count,
            "patterns": self.pattern_count,
            "states": self.state_count,
        }

    # --------------------------------------------------------------------- #
    # Matching
    # --------------------------------------------------------------------- #
    def _hits(self, view: str) -> List[Tuple[int, int, List[Payload]]]:
        """All (start, end, payloads) spans passing case and boundary checks."""
        hits = []
        view_len = len(view)
        for end_idx, (key_len, payloads) in self._automaton.iter(fold(view)):
            start = end_idx - key_len + 1
            end = end_idx + 1
            if start > 0 and is_word_char(view[start - 1]):
                continue
            if end < view_len and is_word_char(view[end]):
                continue
            accepted = [
                p
                for p in payloads
                if all(view[start + i] == p.surface[i] for i in p.upper_positions)
            ]
            if accepted:
                hits.append((start, end, accepted))
        return hits

    def find_all(self, text: str) -> List[Match]:
        """
        Non-overlapping matches, left to right, longest match at each
        start. One Match per entity when several share the same span.
        """
        if self._automaton is None or not text:
            return []

        view, starts, shifts = collapse_whitespace(text)
        hits = self._hits(view)
        hits.sort(key=lambda h: (h[0], -h[1]))

        def original(v: int) -> int:
            return v + shifts[bisect.bisect_right(starts, v) - 1]

        matches: List[Match] = []
        cursor = 0
        for start, end, payloads in hits:
            if start < cursor:
                continue
            cursor = end
            offset = original(start)
            stop = original(end - 1) + 1
            found = text[offset:stop]

            seen = {}
            for p in payloads:
                seen.setdefault(p.entity_id, p)
            if len(seen) > 1:
                logger.debug(
                    "Ambiguous span %r at %d resolves to entities %s",
                    found,
                    offset,
                    sorted(seen),
                )
            for entity_id in sorted(seen):
                p = seen[entity_id]
                matches.append(Match(entity_id, p.main_name, found, offset, stop - offset))
        return matches


def compile_matcher(repo: Repository, language: Optional[str] = None) -> CompiledMatcher:
    """
    Build a matcher over every variant active for ``language``: scope "u",
    or scope equal to ``language``. Without a language only "u" variants
    are included.
    """
    grouped: Dict[str, List[Payload]] = {}
    for entity, idx, variant in repo.iter_variants():
        if not in_scope(variant.scope, language):
            continue
        surface = _WHITESPACE_RUN.sub(" ", variant.surface)
        payload = Payload(
            entity_id=entity.id,
            variant_index=idx,
            main_name=entity.main_name,
            surface=surface,
            upper_positions=tuple(i for i, ch in enumerate(surface) if ch.isupper()),
        )
        grouped.setdefault(fold(surface), []).append(payload)

    automaton = None
    if grouped:
        automaton = ahocorasick.Automaton(ahocorasick.STORE_ANY, ahocorasick.KEY_STRING)
        for key, payloads in grouped.items():
            automaton.add_word(key, (len(key), tuple(payloads)))
        automaton.make_automaton()

    matcher = CompiledMatcher(
        automaton,
        built_for=language,
        pattern_count=sum(len(p) for p in grouped.values()),
        entity_count=len(repo),
        variant_count=repo.variant_count,
    )
    logger.info(
        "Compiled matcher for language=%s: %d patterns, %d keys, %d states",
        language or "u",
        matcher.pattern_count,
        len(grouped),
        matcher.state_count,
    )
    return matcher


def find_all(matcher: CompiledMatcher, text: str) -> List[Match]:
    return matcher.find_all(text)


def find_all_documents(
    matcher: CompiledMatcher, documents: Sequence[Tuple[str, str]], workers: int = 1
) -> List[Tuple[str, List[Match]]]:
    """Match several ``(doc_id, text)`` pairs, optionally on worker threads; input order kept."""
    if workers <= 1 or len(documents) <= 1:
        return [(doc_id, matcher.find_all(text)) for doc_id, text in documents]

    with ThreadPoolExecutor(max_workers=workers) as pool:
        results = list(pool.map(lambda doc: matcher.find_all(doc[1]), documents))
    return [(doc_id, matches) for (doc_id, _text), matches in zip(documents, results)]
