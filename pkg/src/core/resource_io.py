"""
Reading and writing the four-column resource file.

Each line is ``id \\t type \\t language \\t variant`` with '+' standing for
the spaces of multi-word names. Lines of one id keep their order; the first
one holds the main name. Release flags, stop words and the id allocator
live in a YAML sidecar next to the resource (``<resource>.meta.yaml``).
"""
import io
import logging
import zipfile
from pathlib import Path
from typing import Any, BinaryIO, Dict, Union

import yaml

from src.core.errors import (
    DuplicateVariant,
    InvalidLanguage,
    InvalidSurface,
    InvalidType,
    MalformedLine,
)
from src.core.models import EntityRecord, EntityType, NameVariant, VariantFlag, is_valid_scope
from src.core.repository import Repository
from src.utils.loader import atomic_write_bytes

logger = logging.getLogger(__name__)

ZIP_MEMBER = "entities.txt"
SIDECAR_SUFFIX = ".meta.yaml"


def encode_surface(surface: str) -> str:
    return surface.replace(" ", "+")


def decode_surface(field: str) -> str:
    return field.replace("+", " ")


def _read_text(stream: Union[bytes, BinaryIO]) -> str:
    data = stream if isinstance(stream, (bytes, bytearray)) else stream.read()
    try:
        return bytes(data).decode("utf-8")
    except UnicodeDecodeError as exc:
        line_no = data.count(b"\n", 0, exc.start) + 1
        raise MalformedLine(line_no, "not valid UTF-8") from exc


def parse_resource(stream: Union[bytes, BinaryIO]) -> Repository:
    """
    Parse resource text into a Repository.

    Raises:
        MalformedLine: wrong column count, bad id, invalid surface.
        InvalidType: type column not P/O, or conflicting types for one id.
        InvalidLanguage: language column not "u" or two lowercase letters.
        DuplicateVariant: the same (id, surface, scope) twice.
    """
    text = _read_text(stream)
    repo = Repository()
    entities: Dict[int, EntityRecord] = {}

    for line_no, line in enumerate(text.split("\n"), start=1):
        if not line:
            continue
        fields = line.split("\t")
        if len(fields) != 4:
            raise MalformedLine(line_no, f"expected 4 tab-separated fields, got {len(fields)}")
        raw_id, raw_type, scope, raw_surface = fields

        if not raw_id.isascii() or not raw_id.isdigit() or int(raw_id) < 1:
            raise MalformedLine(line_no, f"invalid entity id {raw_id!r}")
        entity_id = int(raw_id)

        try:
            etype = EntityType.parse(raw_type)
        except ValueError:
            raise InvalidType(line_no, f"invalid entity type {raw_type!r}") from None

        if not is_valid_scope(scope):
            raise InvalidLanguage(line_no, f"invalid language {scope!r}")

        try:
            variant = NameVariant(decode_surface(raw_surface), scope)
        except InvalidSurface as exc:
            raise MalformedLine(line_no, str(exc)) from exc

        record = entities.get(entity_id)
        if record is None:
            record = EntityRecord(id=entity_id, etype=etype, variants=[])
            entities[entity_id] = record
        elif record.etype is not etype:
            raise InvalidType(
                line_no,
                f"entity {entity_id} declared as {record.etype.value} and {etype.value}",
            )

        if not record.add_variant(variant):
            raise DuplicateVariant(
                line_no, f"entity {entity_id} repeats {variant.surface!r} ({scope})"
            )

    for entity_id in sorted(entities):
        repo.entities[entity_id] = entities[entity_id]
    repo.next_id = max(entities, default=0) + 1

    logger.info(
        "Parsed resource: %d entities, %d variants", len(repo), repo.variant_count
    )
    return repo


def serialize_resource(repo: Repository) -> bytes:
    """Emit the resource text: ascending ids, main name first per entity."""
    lines = [
        f"{entity.id}\t{entity.etype.value}\t{variant.scope}\t{encode_surface(variant.surface)}\n"
        for entity, _idx, variant in repo.iter_variants()
    ]
    return "".join(lines).encode("utf-8")


# --------------------------------------------------------------------- #
# Sidecar metadata
# --------------------------------------------------------------------- #
def dump_metadata(repo: Repository) -> Dict[str, Any]:
    flags = [
        {
            "id": entity.id,
            "scope": variant.scope,
            "surface": variant.surface,
            "flags": sorted(flag.value for flag in variant.flags),
        }
        for entity, _idx, variant in repo.iter_variants()
        if variant.flags
    ]
    return {
        "next_id": repo.next_id,
        "stop_words": {
            lang: sorted(words) for lang, words in sorted(repo.name_stop_words.items())
        },
        "flags": flags,
    }


def apply_metadata(repo: Repository, meta: Dict[str, Any]) -> Repository:
    """Attach sidecar flags, stop words and the id allocator to ``repo``."""
    meta = meta or {}
    for lang, words in (meta.get("stop_words") or {}).items():
        for word in words:
            repo.add_stop_word(lang, word)

    for item in meta.get("flags") or []:
        entity = repo.entities.get(item["id"])
        idx = entity.find(item["surface"], item["scope"]) if entity else -1
        if idx < 0:
            logger.warning(
                "Sidecar flags for unknown variant %s/%r (%s) ignored",
                item["id"],
                item["surface"],
                item["scope"],
            )
            continue
        flags = frozenset(VariantFlag(value) for value in item.get("flags", []))
        entity.variants[idx] = entity.variants[idx].with_flags(flags)

    repo.next_id = max(repo.next_id, int(meta.get("next_id") or 0))
    return repo


def sidecar_path(path: Union[str, Path]) -> Path:
    path = Path(path)
    return path.with_name(path.name + SIDECAR_SUFFIX)


# --------------------------------------------------------------------- #
# Files on disk
# --------------------------------------------------------------------- #
def load_repository(path: Union[str, Path]) -> Repository:
    """
    Load a resource from a zip archive or a plain text file, plus its
    sidecar when one exists.
    """
    path = Path(path)
    logger.info("Loading resource from %s", path)

    if path.suffix == ".zip":
        with zipfile.ZipFile(path) as archive:
            names = archive.namelist()
            if not names:
                raise MalformedLine(1, f"zip archive {path} is empty")
            member = ZIP_MEMBER if ZIP_MEMBER in names else names[0]
            data = archive.read(member)
    else:
        data = path.read_bytes()

    repo = parse_resource(data)

    meta_path = sidecar_path(path)
    if meta_path.exists():
        with open(meta_path, encoding="utf-8") as f:
            apply_metadata(repo, yaml.safe_load(f))
        logger.info("Applied sidecar metadata from %s", meta_path)
    return repo


def save_repository(repo: Repository, path: Union[str, Path]) -> Path:
    """Atomically write the resource (zip or text) and its sidecar."""
    path = Path(path)
    payload = serialize_resource(repo)

    if path.suffix == ".zip":
        buffer = io.BytesIO()
        with zipfile.ZipFile(buffer, "w", compression=zipfile.ZIP_DEFLATED) as archive:
            archive.writestr(ZIP_MEMBER, payload)
        payload = buffer.getvalue()

    atomic_write_bytes(path, payload)
    meta = yaml.safe_dump(dump_metadata(repo), allow_unicode=True, sort_keys=False)
    atomic_write_bytes(sidecar_path(path), meta.encode("utf-8"))

    logger.info(
        "Saved resource to %s (%d entities, %d variants)",
        path,
        len(repo),
        repo.variant_count,
    )
    return path
