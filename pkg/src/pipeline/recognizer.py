"""
Spots new person and organisation names in raw text.

A name candidate is a short run of capitalised tokens standing next to a
trigger: a title, profession, country adjective, age expression, modifier
or reporting verb taken from a per-language lexicon. Triggers may stack
("57-year-old former British Prime Minister"). Name stop words such as
weekdays never become part of a candidate.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple, Union

import regex

from src.core.errors import GazetteerError
from src.core.models import UNIVERSAL, CandidateName, EntityType, is_valid_scope
from src.pipeline.type_model import TypeModel, UntrainedModel
from src.utils.loader import resolve_path

logger = logging.getLogger(__name__)

TRIGGER_CLASSES = ("title", "profession", "country-adjective", "age", "verb-phrase", "modifier")
LEFT_CLASSES = frozenset(c for c in TRIGGER_CLASSES if c != "verb-phrase")
RIGHT_CLASSES = frozenset({"verb-phrase", "age"})
DEFAULT_PARTICLES = ("al", "el", "van", "von", "de", "der", "den", "da", "di", "du", "bin", "ibn", "le", "la")
SECTIONS = ("triggers", "org_words", "stop_words", "particles")

_TOKEN = regex.compile(r"[\p{L}\p{M}\p{N}]+(?:['’\-][\p{L}\p{M}\p{N}]+)*")
_WORD = regex.compile(r"[\p{L}\p{M}\p{N}]+")


class LexiconError(GazetteerError):
    def __init__(self, path: Union[str, Path], line_no: int, message: str) -> None:
        self.path = str(path)
        self.line_no = line_no
        super().__init__(f"{path}:{line_no}: {message}")


@dataclass(frozen=True)
class Trigger:
    pattern: str
    tag: str = "title"
    is_regex: bool = False

    def compile(self) -> "regex.Pattern":
        if self.is_regex:
            body, flags = self.pattern, 0
        else:
            body = r"\s+".join(regex.escape(w) for w in self.pattern.split())
            flags = regex.IGNORECASE
        return regex.compile(rf"(?<![\p{{L}}\p{{N}}])(?:{body})(?![\p{{L}}\p{{N}}])", flags)


@dataclass(frozen=True)
class TriggerLexicon:
    language: str
    triggers: Tuple[Trigger, ...] = ()
    org_words: FrozenSet[str] = frozenset()
    stop_words: FrozenSet[str] = frozenset()
    particles: Tuple[str, ...] = DEFAULT_PARTICLES
    _compiled: Tuple = field(default=(), repr=False, compare=False)

    def __post_init__(self) -> None:
        unique: List[Trigger] = []
        for trigger in self.triggers:
            if trigger.tag not in TRIGGER_CLASSES:
                raise ValueError(f"unknown trigger class {trigger.tag!r}")
            if trigger not in unique:
                unique.append(trigger)
        object.__setattr__(self, "triggers", tuple(unique))
        object.__setattr__(self, "org_words", frozenset(w.casefold() for w in self.org_words))
        object.__setattr__(self, "stop_words", frozenset(w.casefold() for w in self.stop_words))
        object.__setattr__(self, "particles", tuple(dict.fromkeys(p.casefold() for p in self.particles)))
        object.__setattr__(self, "_compiled", tuple((t, t.compile()) for t in unique))

    def with_stop_words(self, words: Iterable[str]) -> "TriggerLexicon":
        """Copy with extra name stop words (e.g. the repository's own list)."""
        return TriggerLexicon(
            self.language,
            self.triggers,
            self.org_words,
            self.stop_words | frozenset(words),
            self.particles,
        )

    def is_stop_word(self, token: str) -> bool:
        return token.casefold() in self.stop_words


def load_lexicon(
    path: Union[str, Path],
    language: Optional[str] = None,
    default_particles: Sequence[str] = DEFAULT_PARTICLES,
) -> TriggerLexicon:
    """
    Read a lexicon file with ``[triggers]``, ``[org_words]``,
    ``[stop_words]`` and optional ``[particles]`` sections. Trigger lines
    may carry a class after a tab; ``re:`` entries are regular expressions.
    The language defaults to the file stem; without a particles section
    ``default_particles`` apply.

    Raises:
        LexiconError: entry outside a section, unknown section or class,
            pattern that does not compile.
    """
    path = resolve_path(path)
    language = language or path.stem
    if not is_valid_scope(language):
        language = UNIVERSAL

    section = None
    entries: Dict[str, list] = {name: [] for name in SECTIONS}
    seen_particles = False

    with open(path, encoding="utf-8") as f:
        for line_no, raw in enumerate(f, start=1):
            line = raw.rstrip("\n").rstrip("\r")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            stripped = line.strip()
            if stripped.startswith("[") and stripped.endswith("]"):
                section = stripped[1:-1].strip()
                if section not in SECTIONS:
                    raise LexiconError(path, line_no, f"unknown section [{section}]")
                seen_particles = seen_particles or section == "particles"
                continue
            if section is None:
                raise LexiconError(path, line_no, "entry before the first section")

            if section != "triggers":
                entries[section].append(stripped)
                continue

            pattern, _, tag = line.partition("\t")
            pattern, tag = pattern.strip(), (tag.strip() or "title")
            if tag not in TRIGGER_CLASSES:
                raise LexiconError(path, line_no, f"unknown trigger class {tag!r}")
            is_regex = pattern.startswith("re:")
            if is_regex:
                pattern = pattern[3:]
            trigger = Trigger(pattern, tag, is_regex)
            try:
                trigger.compile()
            except regex.error as exc:
                raise LexiconError(path, line_no, f"bad pattern {pattern!r}: {exc}") from exc
            entries["triggers"].append(trigger)

    lexicon = TriggerLexicon(
        language=language,
        triggers=tuple(entries["triggers"]),
        org_words=frozenset(entries["org_words"]),
        stop_words=frozenset(entries["stop_words"]),
        particles=tuple(entries["particles"]) if seen_particles else tuple(default_particles),
    )
    logger.info(
        "Loaded %s lexicon from %s: %d triggers, %d org words, %d stop words",
        language,
        path,
        len(lexicon.triggers),
        len(lexicon.org_words),
        len(lexicon.stop_words),
    )
    return lexicon


# --------------------------------------------------------------------- #
# Candidate spans
# --------------------------------------------------------------------- #
@dataclass(frozen=True)
class _TriggerHit:
    start: int
    end: int
    tag: str


def _trigger_hits(text: str, lex: TriggerLexicon) -> List[_TriggerHit]:
    hits = []
    for trigger, compiled in lex._compiled:
        for m in compiled.finditer(text):
            if m.end() > m.start():
                hits.append(_TriggerHit(m.start(), m.end(), trigger.tag))
    hits.sort(key=lambda h: (h.start, -h.end))
    return hits


def _chain_start(text: str, hit: _TriggerHit, by_end: Dict[int, List[_TriggerHit]]) -> int:
    """Walk left over triggers separated from each other only by whitespace."""
    start = hit.start
    visited = {start}
    while True:
        prefix = text[:start]
        gap = len(prefix) - len(prefix.rstrip())
        if gap == 0:
            return start
        previous = [h for h in by_end.get(start - gap, []) if h.tag in LEFT_CLASSES]
        if not previous:
            return start
        start = min(h.start for h in previous)
        if start in visited:
            return start
        visited.add(start)


class _Tokens:
    def __init__(self, text: str, lex: TriggerLexicon, hits: Sequence[_TriggerHit]) -> None:
        self.text = text
        self.lex = lex
        self.spans = [(m.start(), m.end()) for m in _TOKEN.finditer(text)]
        self.by_start = {s: i for i, (s, _e) in enumerate(self.spans)}
        self.by_end = {e: i for i, (_s, e) in enumerate(self.spans)}
        self.in_trigger = set()
        for i, (s, e) in enumerate(self.spans):
            if any(h.start < e and s < h.end for h in hits):
                self.in_trigger.add(i)

    def word(self, i: int) -> str:
        s, e = self.spans[i]
        return self.text[s:e]

    def adjacent(self, i: int, j: int) -> bool:
        """Tokens i < j are consecutive and separated only by whitespace."""
        gap = self.text[self.spans[i][1] : self.spans[j][0]]
        return j == i + 1 and gap != "" and gap.isspace()

    def is_name_token(self, i: int) -> bool:
        if i in self.in_trigger:
            return False
        token = self.word(i)
        if self.lex.is_stop_word(token):
            return False
        if token[:1].isupper():
            return True
        head, sep, rest = token.partition("-")
        return bool(sep) and head.casefold() in self.lex.particles and rest[:1].isupper()

    def is_particle(self, i: int) -> bool:
        return i not in self.in_trigger and self.word(i).casefold() in self.lex.particles


def _opens_name(tokens: _Tokens, i: int) -> bool:
    """A run of particles directly followed by a capitalised token ("van Gogh", "de la Fuente")."""
    j = i
    while j < len(tokens.spans) and tokens.is_particle(j) and not tokens.is_name_token(j):
        if j + 1 >= len(tokens.spans) or not tokens.adjacent(j, j + 1):
            return False
        j += 1
    return j != i and j < len(tokens.spans) and tokens.is_name_token(j)


def _trim(tokens: _Tokens, span: List[int]) -> List[int]:
    # particles may open a name but never close one
    while span and not tokens.is_name_token(span[-1]):
        span = span[:-1]
    while span and not (tokens.is_name_token(span[0]) or tokens.is_particle(span[0])):
        span = span[1:]
    return span


def _span_right_of(tokens: _Tokens, first: int, max_tokens: int) -> List[int]:
    # leading stop words directly after the trigger chain are skipped
    i = first
    while i < len(tokens.spans) and i not in tokens.in_trigger and tokens.lex.is_stop_word(tokens.word(i)):
        if i + 1 < len(tokens.spans) and tokens.adjacent(i, i + 1):
            i += 1
        else:
            return []
    span: List[int] = []
    while i < len(tokens.spans) and len(span) < max_tokens:
        if not (tokens.is_name_token(i) or (tokens.is_particle(i) and (span or _opens_name(tokens, i)))):
            break
        if span and not tokens.adjacent(span[-1], i):
            break
        span.append(i)
        i += 1
    return _trim(tokens, span)


def _span_left_of(tokens: _Tokens, last: int, max_tokens: int) -> List[int]:
    span: List[int] = []
    i = last
    while i >= 0 and len(span) < max_tokens:
        if not (tokens.is_name_token(i) or (span and tokens.is_particle(i))):
            break
        if span and not tokens.adjacent(i, span[0]):
            break
        span.insert(0, i)
        i -= 1
    return _trim(tokens, span)


def _surface(tokens: _Tokens, span: List[int]) -> str:
    return " ".join(tokens.word(i) for i in span)


def find_candidates(text: str, lex: TriggerLexicon, max_tokens: int = 4) -> List[CandidateName]:
    """
    Capitalised spans of 1..max_tokens tokens next to a trigger chain.
    Candidates come back in text order, one per distinct span, with the
    trigger context as evidence.
    """
    if not text or not lex.triggers:
        return []

    hits = _trigger_hits(text, lex)
    if not hits:
        return []
    tokens = _Tokens(text, lex, hits)
    hits_by_end: Dict[int, List[_TriggerHit]] = {}
    for hit in hits:
        hits_by_end.setdefault(hit.end, []).append(hit)

    found: Dict[Tuple[int, int], List[str]] = {}

    for hit in hits:
        if hit.tag in LEFT_CLASSES:
            rest = text[hit.end :]
            gap = len(rest) - len(rest.lstrip())
            first = tokens.by_start.get(hit.end + gap)
            if gap and first is not None:
                span = _span_right_of(tokens, first, max_tokens)
                if span:
                    evidence = text[_chain_start(text, hit, hits_by_end) : hit.end]
                    found.setdefault((span[0], span[-1]), []).append(" ".join(evidence.split()))

        if hit.tag in RIGHT_CLASSES:
            before = text[: hit.start]
            stripped = before.rstrip()
            # "Tony Blair, 57-year-old"
            if hit.tag == "age" and stripped.endswith(","):
                stripped = stripped[:-1].rstrip()
            last = tokens.by_end.get(len(stripped))
            if stripped != before and last is not None:
                span = _span_left_of(tokens, last, max_tokens)
                if span:
                    found.setdefault((span[0], span[-1]), []).append(" ".join(text[hit.start : hit.end].split()))

    candidates = []
    for (first, last), evidence in sorted(found.items()):
        span = list(range(first, last + 1))
        candidates.append(
            CandidateName(
                surface=_surface(tokens, span),
                language=lex.language,
                evidence=tuple(dict.fromkeys(evidence)),
            )
        )
    logger.debug("Found %d candidates in %d characters", len(candidates), len(text))
    return candidates


# --------------------------------------------------------------------- #
# Typing and batch extraction
# --------------------------------------------------------------------- #
def guess_type(surface: str, lex: TriggerLexicon, model: Optional[TypeModel]) -> Tuple[EntityType, float]:
    """
    Organisation with score 1 when any word of ``surface`` is an
    organisation word; otherwise the classifier's argmax and posterior.

    Raises:
        UntrainedModel: ``model`` is missing or was never trained.
    """
    if model is None or not model.trained:
        raise UntrainedModel("guess_type needs a trained type model")
    if any(w.casefold() in lex.org_words for w in _WORD.findall(surface)):
        return EntityType.ORGANISATION, 1.0
    return model.predict(surface)


def extract_candidates(
    documents: Sequence[Tuple[str, str]],
    lex: TriggerLexicon,
    model: Optional[TypeModel] = None,
    max_tokens: int = 4,
    workers: int = 1,
) -> List[CandidateName]:
    """
    Run find_candidates over ``(doc_id, text)`` pairs and aggregate by
    surface: ``cluster_count`` is the number of distinct documents the
    surface was found in. Types are guessed when ``model`` is given.
    Output follows first appearance.
    """
    def run(doc: Tuple[str, str]) -> List[CandidateName]:
        return find_candidates(doc[1], lex, max_tokens)

    if workers > 1 and len(documents) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            per_doc = list(pool.map(run, documents))
    else:
        per_doc = [run(doc) for doc in documents]

    docs_by_surface: Dict[str, set] = {}
    evidence_by_surface: Dict[str, Dict[str, None]] = {}
    for (doc_id, _text), candidates in zip(documents, per_doc):
        for candidate in candidates:
            docs_by_surface.setdefault(candidate.surface, set()).add(doc_id)
            evidence_by_surface.setdefault(candidate.surface, {}).update(
                dict.fromkeys(candidate.evidence)
            )

    results = []
    for surface, doc_ids in docs_by_surface.items():
        etype = EntityType.PERSON
        if model is not None:
            etype, _score = guess_type(surface, lex, model)
        results.append(
            CandidateName(
                surface=surface,
                language=lex.language,
                guessed_type=etype,
                evidence=tuple(evidence_by_surface[surface]),
                cluster_count=len(doc_ids),
            )
        )
    logger.info("Extracted %d distinct candidates from %d documents", len(results), len(documents))
    return results
