import random
import time

import pytest

from src.core.models import EntityType, NameVariant
from src.core.repository import Repository
from src.pipeline.matcher import compile_matcher

from tests.oracles import naive_find_all

SYLLABLES = ["ka", "lo", "mi", "ne", "ru", "sa", "to", "vi", "ze", "bor", "dan", "gel"]


def _word(rng: random.Random) -> str:
    return "".join(rng.choice(SYLLABLES) for _ in range(rng.randint(2, 3))).capitalize()


def _synthetic_repo(rng: random.Random, entities: int) -> Repository:
    repo = Repository()
    for _ in range(entities):
        first, last = _word(rng), _word(rng)
        repo.add_entity(EntityType.PERSON, [NameVariant(f"{first} {last}"), NameVariant(f"{first[0]}. {last}")])
    return repo


def _synthetic_text(rng: random.Random, repo: Repository, chars: int) -> str:
    names = [e.main_name for e in repo.iter_entities()]
    parts = []
    size = 0
    while size < chars:
        piece = rng.choice(names) if rng.random() < 0.2 else rng.choice(["the", "said", "and", "of", "in"])
        parts.append(piece)
        size += len(piece) + 1
    return " ".join(parts)


@pytest.mark.slow
def test_compile_100k_variants_under_ten_seconds():
    repo = _synthetic_repo(random.Random(1), 50_000)
    assert repo.variant_count == 100_000

    started = time.perf_counter()
    matcher = compile_matcher(repo)
    elapsed = time.perf_counter() - started

    assert matcher.stats()["patterns"] == 100_000
    assert elapsed < 10.0


@pytest.mark.slow
def test_automaton_outpaces_naive_scanner():
    """
    Characters per second of the full matcher against the naive scanner
    restricted to 1,000 patterns; the naive rate is measured on a short
    text and extrapolated.
    """
    rng = random.Random(2)
    big = _synthetic_repo(rng, 50_000)
    small = _synthetic_repo(rng, 500)
    matcher = compile_matcher(big)

    text = _synthetic_text(rng, big, 1_000_000)
    started = time.perf_counter()
    matches = matcher.find_all(text)
    fast_rate = len(text) / (time.perf_counter() - started)

    sample = _synthetic_text(rng, small, 2_000)
    started = time.perf_counter()
    naive_find_all(small, None, sample)
    naive_rate = len(sample) / (time.perf_counter() - started)

    assert matches
    assert fast_rate >= 10 * naive_rate
