"""
Multinomial Bayes classifier deciding whether a new name is a person or
an organisation, trained on lists of known names. Features are token
unigrams plus character trigrams with add-k smoothing.
"""
import logging
import random
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy import sparse
from sklearn.exceptions import NotFittedError
from sklearn.feature_extraction.text import CountVectorizer
from sklearn.naive_bayes import MultinomialNB

from src.core.errors import GazetteerError
from src.core.models import EntityType

logger = logging.getLogger(__name__)

CLASSES = (EntityType.PERSON, EntityType.ORGANISATION)


class UntrainedModel(GazetteerError):
    pass


class EmptyTrainingClass(GazetteerError):
    pass


@dataclass
class TypeModel:
    token_vectorizer: Optional[CountVectorizer] = None
    char_vectorizer: Optional[CountVectorizer] = None
    classifier: Optional[MultinomialNB] = None
    smoothing: float = 1.0

    @property
    def trained(self) -> bool:
        return self.classifier is not None and hasattr(self.classifier, "classes_")

    def features(self, names: Sequence[str]):
        if not self.trained:
            raise UntrainedModel("type model has not been trained")
        return sparse.hstack(
            [self.token_vectorizer.transform(names), self.char_vectorizer.transform(names)]
        ).tocsr()

    def predict(self, name: str) -> Tuple[EntityType, float]:
        """Argmax class and its posterior probability."""
        try:
            posterior = self.classifier.predict_proba(self.features([name]))[0]
        except NotFittedError as exc:
            raise UntrainedModel(str(exc)) from exc
        best = int(np.argmax(posterior))
        return EntityType(self.classifier.classes_[best]), float(posterior[best])

    def feature_probabilities(self) -> np.ndarray:
        """Per-class feature distributions after smoothing (rows sum to 1)."""
        if not self.trained:
            raise UntrainedModel("type model has not been trained")
        return np.exp(self.classifier.feature_log_prob_)


def train_type_model(
    persons: Sequence[str],
    orgs: Sequence[str],
    smoothing: float = 1.0,
    class_prior: Optional[Sequence[float]] = None,
) -> TypeModel:
    """
    Fit the classifier. Deterministic for identical inputs. ``class_prior``
    is given in (organisation, person) order and need not sum to one.

    Raises:
        EmptyTrainingClass: either list is empty.
        ValueError: smoothing is not positive.
    """
    if not persons:
        raise EmptyTrainingClass("no person names to train on")
    if not orgs:
        raise EmptyTrainingClass("no organisation names to train on")
    if smoothing <= 0:
        raise ValueError(f"smoothing must be positive, got {smoothing}")

    names = list(persons) + list(orgs)
    labels = [EntityType.PERSON.value] * len(persons) + [EntityType.ORGANISATION.value] * len(orgs)

    token_vectorizer = CountVectorizer(analyzer="word", token_pattern=r"(?u)\b\w+\b", lowercase=True)
    char_vectorizer = CountVectorizer(analyzer="char_wb", ngram_range=(3, 3), lowercase=True)
    features = sparse.hstack(
        [token_vectorizer.fit_transform(names), char_vectorizer.fit_transform(names)]
    ).tocsr()

    prior = None
    if class_prior is not None:
        prior = np.asarray(class_prior, dtype=float)
        prior = prior / prior.sum()
    classifier = MultinomialNB(alpha=smoothing, class_prior=prior)
    classifier.fit(features, labels)

    logger.info(
        "Trained type model on %d persons / %d organisations (%d features)",
        len(persons),
        len(orgs),
        features.shape[1],
    )
    return TypeModel(token_vectorizer, char_vectorizer, classifier, smoothing)


def evaluate_type_model(
    persons: Sequence[str],
    orgs: Sequence[str],
    held_out_fraction: float = 0.2,
    seed: int = 42,
    smoothing: float = 1.0,
) -> float:
    """Accuracy on a held-out split of both lists; no target is implied."""
    rng = random.Random(seed)

    def split(items: Sequence[str]) -> Tuple[list, list]:
        items = list(items)
        rng.shuffle(items)
        cut = max(1, int(round(len(items) * held_out_fraction)))
        return items[cut:], items[:cut]

    train_p, test_p = split(persons)
    train_o, test_o = split(orgs)
    model = train_type_model(train_p, train_o, smoothing)

    gold = [EntityType.PERSON] * len(test_p) + [EntityType.ORGANISATION] * len(test_o)
    predicted = [model.predict(n)[0] for n in test_p + test_o]
    accuracy = float(np.mean([g is p for g, p in zip(gold, predicted)]))
    logger.info("Held-out type accuracy: %.3f on %d names", accuracy, len(gold))
    return accuracy
