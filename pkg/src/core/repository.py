import copy
import logging
from dataclasses import dataclass, field
from typing import Dict, Iterator, List, Optional, Set, Tuple

from src.core.errors import UnknownEntity, UnknownVariant
from src.core.models import EntityRecord, EntityType, NameVariant, VariantFlag

logger = logging.getLogger(__name__)

RELEASE_FLAGS = frozenset(
    {VariantFlag.VALIDATED, VariantFlag.FROM_WIKIPEDIA, VariantFlag.FREQUENCY_ELIGIBLE}
)


@dataclass
class Repository:
    """
    The mutable entity database plus the name stop-word lexicon.

    Single writer: every mutation goes through one caller at a time.
    ``next_id`` always exceeds every id ever handed out, so ids of deleted
    entities are not reused while the repository lives.
    """

    entities: Dict[int, EntityRecord] = field(default_factory=dict)
    name_stop_words: Dict[str, Set[str]] = field(default_factory=dict)
    next_id: int = 1

    # --------------------------------------------------------------------- #
    # Lookup
    # --------------------------------------------------------------------- #
    def __len__(self) -> int:
        return len(self.entities)

    def __contains__(self, entity_id: int) -> bool:
        return entity_id in self.entities

    def get(self, entity_id: int) -> EntityRecord:
        try:
            return self.entities[entity_id]
        except KeyError:
            raise UnknownEntity(f"unknown entity {entity_id}") from None

    def iter_entities(self) -> Iterator[EntityRecord]:
        """Entities in ascending id order."""
        for entity_id in sorted(self.entities):
            yield self.entities[entity_id]

    def iter_variants(self) -> Iterator[Tuple[EntityRecord, int, NameVariant]]:
        """(entity, variant index, variant) in serialization order."""
        for entity in self.iter_entities():
            for idx, variant in enumerate(entity.variants):
                yield entity, idx, variant

    @property
    def variant_count(self) -> int:
        return sum(len(e.variants) for e in self.entities.values())

    def stop_words(self, language: str) -> Set[str]:
        return set(self.name_stop_words.get(language, set()))

    # --------------------------------------------------------------------- #
    # Mutation
    # --------------------------------------------------------------------- #
    def allocate_id(self) -> int:
        entity_id = self.next_id
        self.next_id += 1
        return entity_id

    def add_entity(
        self,
        etype: EntityType,
        variants: List[NameVariant],
        entity_id: Optional[int] = None,
    ) -> EntityRecord:
        """Register a new entity; allocates an id unless one is given."""
        if not variants:
            raise ValueError("an entity needs at least one name variant")
        if entity_id is None:
            entity_id = self.allocate_id()
        elif entity_id < 1:
            raise ValueError(f"entity ids start at 1, got {entity_id}")
        elif entity_id in self.entities:
            raise ValueError(f"entity id {entity_id} already in use")

        record = EntityRecord(id=entity_id, etype=etype, variants=[])
        for variant in variants:
            record.add_variant(variant)
        self.entities[entity_id] = record
        self.next_id = max(self.next_id, entity_id + 1)
        return record

    def remove_entity(self, entity_id: int) -> EntityRecord:
        record = self.get(entity_id)
        del self.entities[entity_id]
        return record

    def add_stop_word(self, language: str, word: str) -> None:
        self.name_stop_words.setdefault(language, set()).add(word)

    def variant_index(self, entity_id: int, surface: str) -> int:
        idx = self.get(entity_id).find(surface)
        if idx < 0:
            raise UnknownVariant(f"entity {entity_id} has no variant {surface!r}")
        return idx

    # --------------------------------------------------------------------- #
    # Views
    # --------------------------------------------------------------------- #
    def copy(self) -> "Repository":
        return copy.deepcopy(self)

    def release_view(self) -> "Repository":
        """
        Copy holding only entities that pass the release gate: at least one
        variant validated, sourced from Wikipedia, or seen often enough.
        """
        released = Repository(
            name_stop_words=copy.deepcopy(self.name_stop_words),
            next_id=self.next_id,
        )
        for entity in self.iter_entities():
            if any(v.flags & RELEASE_FLAGS for v in entity.variants):
                released.entities[entity.id] = copy.deepcopy(entity)
        logger.info(
            "Release gate kept %d of %d entities", len(released), len(self)
        )
        return released
