"""The empathic response bank and its two orderings.

Intervention sessions get the bank ranked by a transparent score:

    score = 3 * [inferred emotion in response.emotion_tags]
          + 2 * [detected symptom in response.symptom_tags]
          + 1 * (content-word overlap between utterance and response,
                 normalized by the response's content-word count)

Control sessions get the bank in a seeded Fisher-Yates order instead.
Weights and the stop-word list live in a config file so the constants are
inspectable without reading code. Ties break on response id, ascending.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from importlib import resources as importlib_resources

from . import prng
from .errors import ParseError, ValidationError
from .nlu import EMOTIONS, NluResult

BANK_SIZE = 78
DEPTHS = ("simple", "complex")

_TOKEN = re.compile(r"[a-z0-9]+")


@dataclass(frozen=True)
class EmpathicResponse:
    id: str
    text: str
    emotion_tags: frozenset[str]
    symptom_tags: frozenset[str]
    depth: str


@dataclass(frozen=True)
class RankedSuggestion:
    response: str
    score: float
    rank: int


@dataclass(frozen=True)
class ScorerConfig:
    emotion_weight: float
    symptom_weight: float
    overlap_weight: float
    stop_words: frozenset[str]


@dataclass(frozen=True)
class ResponseBank:
    responses: tuple[EmpathicResponse, ...]
    config: ScorerConfig

    def by_id(self, response_id: str) -> EmpathicResponse:
        for r in self.responses:
            if r.id == response_id:
                return r
        raise KeyError(response_id)


def load_scorer_config(document: bytes | str) -> ScorerConfig:
    raw = json.loads(document)
    return ScorerConfig(
        emotion_weight=float(raw["weights"]["emotion"]),
        symptom_weight=float(raw["weights"]["symptom"]),
        overlap_weight=float(raw["weights"]["overlap"]),
        stop_words=frozenset(raw["stop_words"]),
    )


def load_bank(document: bytes | str, config: ScorerConfig, known_symptoms: set[str] | None = None) -> ResponseBank:
    try:
        raw = json.loads(document)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise ParseError(f"response bank is not valid JSON: {exc}") from exc
    responses = []
    seen = set()
    for entry in raw:
        response = EmpathicResponse(
            id=entry["id"],
            text=entry["text"],
            emotion_tags=frozenset(entry.get("emotion_tags", [])),
            symptom_tags=frozenset(entry.get("symptom_tags", [])),
            depth=entry.get("depth", "complex"),
        )
        if response.id in seen:
            raise ValidationError(f"duplicate response id: {response.id}")
        seen.add(response.id)
        if not response.text:
            raise ValidationError(f"response {response.id} has empty text")
        if response.depth not in DEPTHS:
            raise ValidationError(f"response {response.id} has unknown depth: {response.depth}")
        bad_emotions = response.emotion_tags - set(EMOTIONS)
        if bad_emotions:
            raise ValidationError(f"response {response.id} tags unknown emotions: {sorted(bad_emotions)}")
        if known_symptoms is not None:
            bad_symptoms = response.symptom_tags - known_symptoms
            if bad_symptoms:
                raise ValidationError(f"response {response.id} tags unknown symptoms: {sorted(bad_symptoms)}")
        responses.append(response)
    if len(responses) != BANK_SIZE:
        raise ValidationError(f"response bank must hold exactly {BANK_SIZE} entries, got {len(responses)}")
    return ResponseBank(tuple(responses), config)


def load_shipped_bank(known_symptoms: set[str] | None = None) -> ResponseBank:
    data_dir = importlib_resources.files("a2p2.data")
    config = load_scorer_config(data_dir.joinpath("scorer_config.json").read_bytes())
    return load_bank(data_dir.joinpath("responses.json").read_bytes(), config, known_symptoms)


def content_words(text: str, stop_words: frozenset[str]) -> list[str]:
    return [t for t in _TOKEN.findall(text.lower()) if len(t) > 1 and t not in stop_words]


def score_response(response: EmpathicResponse, utterance: str, nlu: NluResult, config: ScorerConfig) -> float:
    score = 0.0
    if nlu.emotion is not None and nlu.emotion in response.emotion_tags:
        score += config.emotion_weight
    if nlu.symptom is not None and nlu.symptom in response.symptom_tags:
        score += config.symptom_weight
    response_words = content_words(response.text, config.stop_words)
    if response_words:
        utterance_words = set(content_words(utterance, config.stop_words))
        overlap = len(utterance_words & set(response_words)) / len(response_words)
        score += config.overlap_weight * overlap
    return score


def rank(bank: ResponseBank, utterance: str, nlu: NluResult) -> list[RankedSuggestion]:
    """Full bank ordered by score, ties broken by response id."""
    scored = sorted(
        ((score_response(r, utterance, nlu, bank.config), r.id) for r in bank.responses),
        key=lambda pair: (-pair[0], pair[1]),
    )
    return [RankedSuggestion(response=rid, score=s, rank=i + 1) for i, (s, rid) in enumerate(scored)]


def control_order(bank: ResponseBank, seed: int) -> list[RankedSuggestion]:
    """Seeded Fisher-Yates permutation of the bank, applied to id-sorted order."""
    ids = sorted(r.id for r in bank.responses)
    shuffled = prng.fisher_yates(ids, prng.stream(seed, prng.STREAM_EMPATHY))
    return [RankedSuggestion(response=rid, score=0.0, rank=i + 1) for i, rid in enumerate(shuffled)]
