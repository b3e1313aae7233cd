import logging
import unicodedata
from typing import Any, Dict, List, NamedTuple, Optional

import numpy as np
import pandas as pd

from src.core.models import EntityType, in_scope
from src.core.repository import Repository

logger = logging.getLogger(__name__)


class ExportRow(NamedTuple):
    entity_id: int
    etype: EntityType
    scope: str
    surface: str


def export_variants(repo: Repository, language: Optional[str] = None) -> List[ExportRow]:
    """
    Every variant active for ``language`` (scope "u" or equal to it), in
    serialization order. Without a language every variant is returned.
    """
    rows = [
        ExportRow(entity.id, entity.etype, variant.scope, variant.surface)
        for entity, _idx, variant in repo.iter_variants()
        if language is None or in_scope(variant.scope, language)
    ]
    logger.info("Exported %d variants (language=%s)", len(rows), language or "all")
    return rows


def script_of(surface: str) -> str:
    """Name of the writing system of the first letter, e.g. LATIN, CYRILLIC."""
    for ch in surface:
        if ch.isalpha():
            name = unicodedata.name(ch, "")
            if name.startswith("CJK"):
                return "HAN"
            return name.split(" ")[0] if name else "UNKNOWN"
    return "COMMON"


def summarize(repo: Repository, histogram_cap: int = 10) -> Dict[str, Any]:
    """
    Resource statistics: totals, counts per entity type and per script,
    and the variants-per-entity histogram (last bucket is "cap or more").
    """
    rows = export_variants(repo)
    df = pd.DataFrame(
        {
            "entity_id": [r.entity_id for r in rows],
            "etype": [r.etype.value for r in rows],
            "scope": [r.scope for r in rows],
            "script": [script_of(r.surface) for r in rows],
        }
    )

    if df.empty:
        return {
            "entities": 0,
            "variants": 0,
            "by_type": {},
            "by_script": {},
            "by_scope": {},
            "variants_per_entity": {},
        }

    per_entity = df.groupby("entity_id").size().to_numpy()
    capped = np.minimum(per_entity, histogram_cap)
    counts = np.bincount(capped, minlength=histogram_cap + 1)
    histogram = {
        (f"{k}+" if k == histogram_cap else str(k)): int(counts[k])
        for k in range(1, histogram_cap + 1)
        if counts[k]
    }

    entity_types = df.drop_duplicates("entity_id")["etype"].value_counts()
    summary = {
        "entities": int(df["entity_id"].nunique()),
        "variants": int(len(df)),
        "by_type": {k: int(v) for k, v in sorted(entity_types.items())},
        "by_script": {k: int(v) for k, v in sorted(df["script"].value_counts().items())},
        "by_scope": {k: int(v) for k, v in sorted(df["scope"].value_counts().items())},
        "variants_per_entity": histogram,
    }

    logger.info(
        "Resource summary: %d entities, %d variants, %d scripts",
        summary["entities"],
        summary["variants"],
        len(summary["by_script"]),
    )
    return summary
