"""
Decides for every newly found name whether it is a spelling variant of a
known entity or a new entity.

Names are blocked by consonant signature; inside a block each candidate is
scored against every known variant (and every candidate resolved earlier
in the same batch) and merged into the best-scoring entity that clears the
threshold. Ties go to the lower entity id.
"""
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

from src.core.errors import GazetteerError, InvalidSurface
from src.core.models import (
    UNIVERSAL,
    CandidateName,
    EntityType,
    NameVariant,
    VariantFlag,
    check_surface,
    is_valid_scope,
)
from src.core.repository import Repository
from src.core.resource_io import decode_surface, encode_surface
from src.normalize.keys import NameKey, NameKeyBuilder, similarity

logger = logging.getLogger(__name__)

MERGED = "MERGED"
CREATED = "CREATED"
SKIPPED = "SKIPPED"


class SignatureMismatch(GazetteerError):
    """Two names from different signature blocks were compared."""
    pass


@dataclass(frozen=True)
class MergerConfig:
    threshold: float = 0.94
    treat_equal_as_merge: bool = True
    min_clusters: int = 5
    # False: new variants are universal; True: scoped to the candidate language
    scope_to_language: bool = False

    def __post_init__(self) -> None:
        if not 0.0 < self.threshold <= 1.0:
            raise ValueError(f"threshold must lie in (0, 1], got {self.threshold}")

    @classmethod
    def from_dict(cls, cfg: Dict) -> "MergerConfig":
        merge_cfg = cfg.get("merge", {}) or {}
        eligibility = cfg.get("eligibility", {}) or {}
        return cls(
            threshold=float(merge_cfg.get("threshold", 0.94)),
            treat_equal_as_merge=bool(merge_cfg.get("treat_equal_as_merge", True)),
            min_clusters=int(eligibility.get("min_clusters", 5)),
            scope_to_language=bool(merge_cfg.get("scope_to_language", False)),
        )


@dataclass(frozen=True)
class MergeDecision:
    merged: bool
    score: float

    @property
    def kind(self) -> str:
        return "Merge" if self.merged else "Separate"


@dataclass(frozen=True)
class Resolution:
    surface: str
    decision: str
    entity_id: Optional[int] = None
    score: float = 0.0
    reason: str = ""

    def to_fields(self) -> List[str]:
        entity = str(self.entity_id) if self.entity_id is not None else "-"
        last = self.reason if self.decision == SKIPPED else f"{self.score:.4f}"
        return [encode_surface(self.surface), self.decision, entity, last]

    def to_dict(self) -> Dict:
        return {
            "surface": self.surface,
            "decision": self.decision,
            "entity_id": self.entity_id,
            "score": round(self.score, 4),
            "reason": self.reason,
        }


@dataclass
class MergeReport:
    """One resolution per input candidate, in input order; rejected candidate-file lines kept apart."""

    resolutions: List[Resolution] = field(default_factory=list)
    rejected_lines: List[Tuple[int, str]] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.resolutions)

    def _select(self, decision: str) -> List[Resolution]:
        return [r for r in self.resolutions if r.decision == decision]

    @property
    def merged(self) -> List[Tuple[str, int, float]]:
        return [(r.surface, r.entity_id, r.score) for r in self._select(MERGED)]

    @property
    def created(self) -> List[Tuple[str, int]]:
        return [(r.surface, r.entity_id) for r in self._select(CREATED)]

    @property
    def skipped(self) -> List[Tuple[str, str]]:
        return [(r.surface, r.reason) for r in self._select(SKIPPED)]

    def rows(self) -> List[List[str]]:
        """TSV rows: resolutions first, then one SKIPPED row per rejected line."""
        rows = [r.to_fields() for r in self.resolutions]
        rows.extend(["-", SKIPPED, "-", f"line {n}: {reason}"] for n, reason in self.rejected_lines)
        return rows

    def records(self) -> List[Dict]:
        records = [r.to_dict() for r in self.resolutions]
        records.extend(
            {"line": n, "decision": SKIPPED, "reason": reason} for n, reason in self.rejected_lines
        )
        return records


@dataclass
class Bucket:
    candidates: List[Tuple[int, CandidateName, NameKey]] = field(default_factory=list)
    existing: List[Tuple[int, NameKey]] = field(default_factory=list)


# --------------------------------------------------------------------- #
# Operations
# --------------------------------------------------------------------- #
def _invalid_reason(candidate: CandidateName) -> Optional[str]:
    try:
        check_surface(candidate.surface)
    except InvalidSurface as exc:
        return str(exc)
    if not is_valid_scope(candidate.language):
        return f"invalid language {candidate.language!r}"
    return None


def block_by_signature(
    candidates: Sequence[CandidateName],
    repo: Repository,
    keys: NameKeyBuilder,
) -> Dict[str, Bucket]:
    """
    Group candidates and known variants by consonant signature. Only
    buckets holding at least one candidate are returned. Names without a
    consonant (vowel-only or unmapped scripts) share the empty signature.
    """
    buckets: Dict[str, Bucket] = {}
    for idx, candidate in enumerate(candidates):
        if _invalid_reason(candidate):
            continue
        key = keys.key(candidate.surface)
        buckets.setdefault(key.signature, Bucket()).candidates.append((idx, candidate, key))

    if buckets:
        for entity, _idx, variant in repo.iter_variants():
            key = keys.key(variant.surface)
            bucket = buckets.get(key.signature)
            if bucket is not None:
                bucket.existing.append((entity.id, key))

    logger.debug("Blocked %d candidates into %d buckets", len(candidates), len(buckets))
    return buckets


def merge_decision(a: NameKey, b: NameKey, cfg: MergerConfig) -> MergeDecision:
    """
    Merge when the similarity reaches the threshold (strictly exceeds it
    when ``treat_equal_as_merge`` is off).

    Raises:
        SignatureMismatch: the keys come from different blocks.
    """
    if a.signature != b.signature:
        raise SignatureMismatch(f"{a.signature!r} != {b.signature!r}")
    score = similarity(a, b)
    if cfg.treat_equal_as_merge:
        merged = score >= cfg.threshold
    else:
        merged = score > cfg.threshold
    return MergeDecision(merged, score)


def merge_batch(
    repo: Repository,
    candidates: Sequence[CandidateName],
    cfg: MergerConfig = MergerConfig(),
    keys: Optional[NameKeyBuilder] = None,
) -> Tuple[Repository, MergeReport]:
    """
    Resolve ``candidates`` in input order against a copy of ``repo``.

    Returns the updated repository and a report listing every candidate
    exactly once as merged, created or skipped.
    """
    keys = keys or NameKeyBuilder.default()
    updated = repo.copy()
    report = MergeReport()
    buckets = block_by_signature(candidates, updated, keys)

    for candidate in candidates:
        reason = _invalid_reason(candidate)
        if reason is not None:
            logger.warning("Skipping candidate %r: %s", candidate.surface, reason)
            report.resolutions.append(Resolution(candidate.surface, SKIPPED, reason=reason))
            continue

        key = keys.key(candidate.surface)
        bucket = buckets[key.signature]

        best_id: Optional[int] = None
        best_score = -1.0
        best_separate = 0.0
        for entity_id, known in bucket.existing:
            decision = merge_decision(key, known, cfg)
            if not decision.merged:
                best_separate = max(best_separate, decision.score)
                continue
            if decision.score > best_score or (
                decision.score == best_score and entity_id < best_id
            ):
                best_id, best_score = entity_id, decision.score

        flags = (
            {VariantFlag.FREQUENCY_ELIGIBLE}
            if candidate.cluster_count >= cfg.min_clusters
            else set()
        )
        scope = candidate.language if cfg.scope_to_language else UNIVERSAL
        variant = NameVariant(candidate.surface, scope, frozenset(flags))

        if best_id is not None:
            entity = updated.get(best_id)
            idx = entity.find(variant.surface, variant.scope)
            if idx >= 0:
                existing = entity.variants[idx]
                entity.variants[idx] = existing.with_flags(existing.flags | variant.flags)
            else:
                entity.variants.append(variant)
            report.resolutions.append(
                Resolution(candidate.surface, MERGED, best_id, best_score)
            )
        else:
            entity = updated.add_entity(candidate.guessed_type, [variant])
            report.resolutions.append(
                Resolution(candidate.surface, CREATED, entity.id, best_separate)
            )

        bucket.existing.append((entity.id, key))

    logger.info(
        "Merge batch: %d merged, %d created, %d skipped",
        len(report.merged),
        len(report.created),
        len(report.skipped),
    )
    return updated, report


# --------------------------------------------------------------------- #
# Candidate files
# --------------------------------------------------------------------- #
def parse_candidates(text: str) -> Tuple[List[CandidateName], List[Tuple[int, str]]]:
    """
    Parse ``surface \\t language \\t type \\t cluster_count`` lines.
    Malformed lines are returned as ``(line_no, reason)`` instead of raising.
    """
    candidates: List[CandidateName] = []
    problems: List[Tuple[int, str]] = []
    for line_no, line in enumerate(text.split("\n"), start=1):
        line = line.rstrip("\r")
        if not line.strip() or line.startswith("#"):
            continue
        fields = line.split("\t")
        if len(fields) != 4:
            problems.append((line_no, f"expected 4 fields, got {len(fields)}"))
            continue
        raw_surface, language, raw_type, raw_count = fields
        try:
            etype = EntityType.parse(raw_type)
        except ValueError:
            problems.append((line_no, f"invalid type {raw_type!r}"))
            continue
        if not raw_count.isascii() or not raw_count.isdigit():
            problems.append((line_no, f"invalid cluster count {raw_count!r}"))
            continue
        candidates.append(
            CandidateName(
                surface=decode_surface(raw_surface),
                language=language,
                guessed_type=etype,
                cluster_count=int(raw_count),
            )
        )

    for line_no, reason in problems:
        logger.warning("Candidate line %d skipped: %s", line_no, reason)
    return candidates, problems


def format_candidate(candidate: CandidateName) -> str:
    return "\t".join(
        [
            encode_surface(candidate.surface),
            candidate.language,
            candidate.guessed_type.value,
            str(candidate.cluster_count),
        ]
    )
