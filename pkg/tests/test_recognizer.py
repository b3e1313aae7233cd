import random

import pytest
import regex

from src.core.models import EntityType
from src.pipeline.recognizer import (
    LexiconError,
    Trigger,
    TriggerLexicon,
    extract_candidates,
    find_candidates,
    load_lexicon,
)
from src.pipeline.type_model import train_type_model
from src.utils.loader import read_word_list


@pytest.fixture(scope="module")
def en() -> TriggerLexicon:
    return load_lexicon("resources/lexicon/en.txt")


@pytest.fixture(scope="module")
def fr() -> TriggerLexicon:
    return load_lexicon("resources/lexicon/fr.txt")


def _surfaces(candidates):
    return [c.surface for c in candidates]


def test_title_before_name(en):
    """A title trigger on the left yields the capitalised span after it."""
    candidates = find_candidates("Prime Minister Tony Blair said on Monday.", en)

    assert _surfaces(candidates) == ["Tony Blair"]
    assert "Prime Minister" in candidates[0].evidence
    assert "said" in candidates[0].evidence
    assert candidates[0].language == "en"


def test_stop_word_never_joins_the_span(en):
    """"Monday Angela Merkel" is never a candidate."""
    assert _surfaces(find_candidates("Chancellor Monday Angela Merkel spoke", en)) == ["Angela Merkel"]
    assert _surfaces(find_candidates("On Monday Angela Merkel said", en)) == ["Angela Merkel"]


def test_stacked_triggers(en):
    text = "the 57-year-old former British Prime Minister Tony Blair said"

    candidates = find_candidates(text, en)

    assert _surfaces(candidates) == ["Tony Blair"]
    assert "57-year-old former British Prime Minister" in candidates[0].evidence


def test_age_after_comma(en):
    candidates = find_candidates("Tony Blair, 57-year-old, said nothing", en)
    assert _surfaces(candidates) == ["Tony Blair"]
    assert candidates[0].evidence == ("57-year-old",)


def test_no_trigger_no_candidates(en):
    assert find_candidates("The weather in Paris was fine.", en) == []
    assert find_candidates("", en) == []
    assert find_candidates("President Tony Blair", TriggerLexicon("en")) == []


def test_particles_inside_names(en):
    assert _surfaces(find_candidates("President Mohammed al-Mahdi said", en)) == ["Mohammed al-Mahdi"]
    assert _surfaces(find_candidates("the actor Vincent van Gogh announced", en)) == ["Vincent van Gogh"]
    # trailing particle is trimmed
    assert _surfaces(find_candidates("Dr Anna van", en)) == ["Anna"]


def test_particles_can_open_a_name(en):
    """A lowercase particle starts a span when a capitalised token follows it."""
    candidates = find_candidates("President van Gogh said", en)

    assert _surfaces(candidates) == ["van Gogh"]
    assert set(candidates[0].evidence) == {"President", "said"}
    assert _surfaces(find_candidates("the actor de la Fuente announced", en)) == ["de la Fuente"]
    assert find_candidates("President van said", en) == []


def test_span_is_capped(en):
    candidates = find_candidates("President Alpha Beta Gamma Delta Epsilon", en)
    assert _surfaces(candidates) == ["Alpha Beta Gamma Delta"]
    assert _surfaces(find_candidates("President Alpha Beta Gamma", en, max_tokens=2)) == ["Alpha Beta"]


def test_with_stop_words_extends_lexicon():
    lex = TriggerLexicon("en", triggers=(Trigger("President"),))
    text = "President Bulletin Anna Lindh"

    assert _surfaces(find_candidates(text, lex)) == ["Bulletin Anna Lindh"]
    assert _surfaces(find_candidates(text, lex.with_stop_words(["Bulletin"]))) == ["Anna Lindh"]


def test_french_lexicon(fr):
    candidates = find_candidates("le président Nicolas Sarkozy a déclaré", fr)

    assert _surfaces(candidates) == ["Nicolas Sarkozy"]
    assert candidates[0].language == "fr"
    assert "de" in fr.particles


def test_load_lexicon_sections(en):
    assert en.language == "en"
    assert "organisation" in en.org_words
    assert en.is_stop_word("MONDAY")
    assert Trigger(r"\d{1,3}-year-old", "age", True) in en.triggers
    assert en.particles[:2] == ("al", "el")


def test_lists_are_deduplicated():
    lex = TriggerLexicon(
        "en",
        triggers=(Trigger("President"), Trigger("President")),
        org_words=frozenset({"Bank", "bank"}),
    )
    assert len(lex.triggers) == 1
    assert lex.org_words == frozenset({"bank"})


@pytest.mark.parametrize(
    "content, line_no",
    [
        ("Minister\n", 1),
        ("[triggers]\nMinister\tbogus\n", 2),
        ("[triggers]\nre:(unclosed\n", 2),
        ("# lexicon\n[nouns]\n", 2),
    ],
)
def test_lexicon_errors_carry_line_numbers(tmp_path, content, line_no):
    path = tmp_path / "de.txt"
    path.write_text(content, encoding="utf-8")

    with pytest.raises(LexiconError) as excinfo:
        load_lexicon(path)

    assert excinfo.value.line_no == line_no


def test_language_defaults_to_file_stem(tmp_path):
    de = tmp_path / "de.txt"
    de.write_text("[triggers]\nBundeskanzlerin\n", encoding="utf-8")
    other = tmp_path / "lexicon.txt"
    other.write_text("[triggers]\nPresident\n", encoding="utf-8")

    assert load_lexicon(de).language == "de"
    assert load_lexicon(other).language == "u"


@pytest.mark.parametrize("workers", [1, 3])
def test_extract_candidates_counts_documents(en, workers):
    """cluster_count is the number of distinct documents a name was found in."""
    docs = [
        ("d1", "President Tony Blair said"),
        ("d2", "Mr Tony Blair said and Mr Tony Blair left"),
        ("d3", "Chancellor Angela Merkel spoke"),
        ("d4", "nothing here"),
    ]
    persons = read_word_list("resources/training/persons.txt")
    orgs = read_word_list("resources/training/orgs.txt")
    model = train_type_model(persons, orgs)

    candidates = extract_candidates(docs, en, model, workers=workers)

    assert [(c.surface, c.cluster_count) for c in candidates] == [("Tony Blair", 2), ("Angela Merkel", 1)]
    assert all(c.guessed_type is EntityType.PERSON for c in candidates)


def test_candidates_respect_token_invariants(en):
    """No stop word inside a candidate; every candidate is a verbatim run of text tokens."""
    rng = random.Random(31)
    vocabulary = ["President", "said", "Monday", "Report", "Anna", "Lindh", "al-Sadr", "van", "the", "former", ",", "57-year-old"]
    for _ in range(200):
        text = " ".join(rng.choice(vocabulary) for _ in range(rng.randint(1, 12)))
        for candidate in find_candidates(text, en):
            tokens = candidate.surface.split(" ")
            assert not any(en.is_stop_word(t) for t in tokens), text
            assert 1 <= len(tokens) <= 4
            pattern = r"(?<![\p{L}\p{N}])" + r"\s+".join(regex.escape(t) for t in tokens) + r"(?![\p{L}\p{N}])"
            assert regex.search(pattern, text), (text, candidate.surface)
