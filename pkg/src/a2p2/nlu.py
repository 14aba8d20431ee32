"""Deterministic language understanding over authored lexicons.

Symptom phrases live in the graph file; emotion phrases in their own JSON
document. A lexicon entry is either a plain phrase, matched as a substring
after case folding and whitespace collapsing, or a gapped pattern using
"*" between fragments ("thinking about * attack"), where the gap matches
any span of text. The label whose entry covers the longest span wins;
equal spans fall back to the lexicographically smaller label id.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from importlib import resources as importlib_resources

from .ckg import ClinicalGraph

EMOTIONS = ("frustrated", "overwhelmed", "sad", "stressed", "tired", "worried")


@dataclass(frozen=True)
class Match:
    phrase: str
    span: tuple[int, int]

    @property
    def length(self) -> int:
        return self.span[1] - self.span[0]


@dataclass(frozen=True)
class NluResult:
    symptom: str | None = None
    emotion: str | None = None
    matches: tuple[Match, ...] = field(default_factory=tuple)


def _normalize(text: str) -> str:
    return re.sub(r"\s+", " ", text.casefold()).strip()


def _find(phrase: str, utterance: str) -> Match | None:
    """Best (longest, then leftmost) occurrence of a phrase or gapped pattern."""
    needle = _normalize(phrase)
    if "*" in needle:
        fragments = [re.escape(f.strip()) for f in needle.split("*") if f.strip()]
        if not fragments:
            return None
        pattern = re.compile(".*?".join(fragments))
        best = None
        for start in range(len(utterance)):
            m = pattern.match(utterance, start)
            if m and (best is None or m.end() - m.start() > best.length):
                best = Match(phrase, (m.start(), m.end()))
        return best
    idx = utterance.find(needle)
    if idx < 0:
        return None
    return Match(phrase, (idx, idx + len(needle)))


def _best_label(utterance: str, lexicons: dict[str, list[str] | tuple[str, ...]]) -> tuple[str, Match] | None:
    normalized = _normalize(utterance)
    if not normalized:
        return None
    best: tuple[str, Match] | None = None
    for label in sorted(lexicons):
        for phrase in lexicons[label]:
            match = _find(phrase, normalized)
            if match is None:
                continue
            if best is None or match.length > best[1].length:
                best = (label, match)
            # equal length keeps the earlier (smaller) label: no update
    return best


def detect_symptom(utterance: str, graph: ClinicalGraph) -> NluResult:
    lexicons = {s.id: s.lexicon for s in graph.symptoms.values()}
    hit = _best_label(utterance, lexicons)
    if hit is None:
        return NluResult()
    return NluResult(symptom=hit[0], matches=(hit[1],))


def load_emotion_lexicon() -> dict[str, list[str]]:
    raw = importlib_resources.files("a2p2.data").joinpath("emotion_lexicon.json").read_text()
    lexicon = json.loads(raw)
    unknown = set(lexicon) - set(EMOTIONS)
    if unknown:
        raise ValueError(f"emotion lexicon contains labels outside the taxonomy: {sorted(unknown)}")
    return lexicon


def infer_emotion(utterance: str, lexicon: dict[str, list[str]] | None = None) -> NluResult:
    hit = _best_label(utterance, lexicon if lexicon is not None else load_emotion_lexicon())
    if hit is None:
        return NluResult()
    return NluResult(emotion=hit[0], matches=(hit[1],))


def understand(utterance: str, graph: ClinicalGraph, emotion_lexicon: dict[str, list[str]] | None = None) -> NluResult:
    """Symptom and emotion in one pass; the two detectors are independent."""
    symptom = detect_symptom(utterance, graph)
    emotion = infer_emotion(utterance, emotion_lexicon)
    return NluResult(
        symptom=symptom.symptom,
        emotion=emotion.emotion,
        matches=symptom.matches + emotion.matches,
    )
