"""
Moderation edits: the manual corrections applied on top of the automatic
pipeline (merging entities, choosing the main name, fixing the type,
extending the stop-word list, restricting a variant to one language).
"""
import logging
from dataclasses import dataclass
from typing import Iterable, List, Tuple, Union

from src.core.errors import EditError, InvalidSurface, SelfMerge
from src.core.models import EntityType, NameVariant, check_surface, is_valid_scope
from src.core.repository import Repository
from src.core.resource_io import decode_surface, encode_surface

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class MergeEntities:
    winner: int
    loser: int


@dataclass(frozen=True)
class SetMainName:
    id: int
    surface: str


@dataclass(frozen=True)
class SetType:
    id: int
    etype: EntityType


@dataclass(frozen=True)
class AddStopWord:
    language: str
    word: str


@dataclass(frozen=True)
class RestrictVariant:
    id: int
    surface: str
    scope: str


ModerationEdit = Union[MergeEntities, SetMainName, SetType, AddStopWord, RestrictVariant]


def _merge_flags(kept: NameVariant, dropped: NameVariant) -> NameVariant:
    return kept.with_flags(kept.flags | dropped.flags)


def _apply_in_place(repo: Repository, edit: ModerationEdit) -> None:
    if isinstance(edit, MergeEntities):
        if edit.winner == edit.loser:
            raise SelfMerge(f"cannot merge entity {edit.winner} into itself")
        winner = repo.get(edit.winner)
        loser = repo.get(edit.loser)
        for variant in loser.variants:
            idx = winner.find(variant.surface, variant.scope)
            if idx >= 0:
                winner.variants[idx] = _merge_flags(winner.variants[idx], variant)
            else:
                winner.variants.append(variant)
        repo.remove_entity(edit.loser)
        logger.info("Merged entity %d into %d", edit.loser, edit.winner)

    elif isinstance(edit, SetMainName):
        entity = repo.get(edit.id)
        idx = repo.variant_index(edit.id, edit.surface)
        entity.variants.insert(0, entity.variants.pop(idx))
        logger.info("Main name of %d is now %r", edit.id, edit.surface)

    elif isinstance(edit, SetType):
        repo.get(edit.id).etype = edit.etype
        logger.info("Type of %d is now %s", edit.id, edit.etype.value)

    elif isinstance(edit, AddStopWord):
        repo.add_stop_word(edit.language, edit.word)
        logger.info("Added %s stop word %r", edit.language, edit.word)

    elif isinstance(edit, RestrictVariant):
        entity = repo.get(edit.id)
        idx = repo.variant_index(edit.id, edit.surface)
        restricted = entity.variants[idx].with_scope(edit.scope)
        existing = entity.find(edit.surface, edit.scope)
        if existing >= 0 and existing != idx:
            # the target (surface, scope) pair already exists: collapse onto it
            entity.variants[existing] = _merge_flags(entity.variants[existing], restricted)
            del entity.variants[idx]
        else:
            entity.variants[idx] = restricted
        logger.info("Variant %r of %d restricted to %s", edit.surface, edit.id, edit.scope)

    else:
        raise EditError(f"unsupported edit {edit!r}")


def apply_edit(repo: Repository, edit: ModerationEdit) -> Repository:
    """
    Return a copy of ``repo`` with ``edit`` applied.

    Raises:
        UnknownEntity: a referenced id does not exist.
        UnknownVariant: the surface is not a variant of that entity.
        SelfMerge: MergeEntities with winner == loser.
    """
    updated = repo.copy()
    _apply_in_place(updated, edit)
    return updated


def apply_edits(
    repo: Repository, edits: Iterable[Tuple[int, ModerationEdit]]
) -> Repository:
    """
    Apply ``(line_no, edit)`` pairs in order to a copy of ``repo``. The
    first failure aborts with the offending line number; ``repo`` itself is
    never touched.
    """
    updated = repo.copy()
    count = 0
    for line_no, edit in edits:
        try:
            _apply_in_place(updated, edit)
        except EditError as exc:
            logger.error("Edit on line %d failed: %s", line_no, exc.message)
            raise exc.at_line(line_no) from exc
        count += 1
    logger.info("Applied %d moderation edits", count)
    return updated


# --------------------------------------------------------------------- #
# Edit log
# --------------------------------------------------------------------- #
_ARITY = {"MERGE": 3, "MAIN": 3, "TYPE": 3, "STOP": 3, "SCOPE": 4}


def _entity_id(raw: str, line_no: int) -> int:
    if not raw.isascii() or not raw.isdigit() or int(raw) < 1:
        raise EditError(f"invalid entity id {raw!r}", line_no)
    return int(raw)


def _surface(raw: str, line_no: int) -> str:
    surface = decode_surface(raw)
    try:
        return check_surface(surface)
    except InvalidSurface as exc:
        raise EditError(str(exc), line_no) from exc


def _scope(raw: str, line_no: int) -> str:
    if not is_valid_scope(raw):
        raise EditError(f"invalid language {raw!r}", line_no)
    return raw


def parse_edit_line(line: str, line_no: int) -> ModerationEdit:
    fields = line.split("\t")
    op = fields[0]
    if op not in _ARITY:
        raise EditError(f"unknown edit {op!r}", line_no)
    if len(fields) != _ARITY[op]:
        raise EditError(f"{op} takes {_ARITY[op] - 1} arguments", line_no)

    if op == "MERGE":
        return MergeEntities(_entity_id(fields[1], line_no), _entity_id(fields[2], line_no))
    if op == "MAIN":
        return SetMainName(_entity_id(fields[1], line_no), _surface(fields[2], line_no))
    if op == "TYPE":
        try:
            etype = EntityType.parse(fields[2])
        except ValueError:
            raise EditError(f"invalid entity type {fields[2]!r}", line_no) from None
        return SetType(_entity_id(fields[1], line_no), etype)
    if op == "STOP":
        return AddStopWord(_scope(fields[1], line_no), _surface(fields[2], line_no))
    return RestrictVariant(
        _entity_id(fields[1], line_no),
        _surface(fields[2], line_no),
        _scope(fields[3], line_no),
    )


def parse_edit_log(text: str) -> List[Tuple[int, ModerationEdit]]:
    """Parse an edit log into ``(line_no, edit)`` pairs; '#' lines are comments."""
    edits = []
    for line_no, line in enumerate(text.split("\n"), start=1):
        line = line.rstrip("\r")
        if not line.strip() or line.startswith("#"):
            continue
        edits.append((line_no, parse_edit_line(line, line_no)))
    return edits


def format_edit(edit: ModerationEdit) -> str:
    """Inverse of parse_edit_line."""
    if isinstance(edit, MergeEntities):
        return f"MERGE\t{edit.winner}\t{edit.loser}"
    if isinstance(edit, SetMainName):
        return f"MAIN\t{edit.id}\t{encode_surface(edit.surface)}"
    if isinstance(edit, SetType):
        return f"TYPE\t{edit.id}\t{edit.etype.value}"
    if isinstance(edit, AddStopWord):
        return f"STOP\t{edit.language}\t{encode_surface(edit.word)}"
    if isinstance(edit, RestrictVariant):
        return f"SCOPE\t{edit.id}\t{encode_surface(edit.surface)}\t{edit.scope}"
    raise EditError(f"unsupported edit {edit!r}")
