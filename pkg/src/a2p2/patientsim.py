"""Scripted standardized-patient scenarios and the headless auto-provider.

The driver plays a scenario's client turns against a session endpoint (in
process or over HTTP) on a fixed simulated clock, so identical inputs give
identical transcripts. The auto-provider models a person reading the
suggestion panel: it spends time proportional to how far down the list it
reads before choosing, which is position 1 under the default policy and
up to a patience bound when simulating a provider who hunts for the best
reflection in an unranked list.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from datetime import datetime, timedelta, timezone
from importlib import resources as importlib_resources
from pathlib import Path

import httpx

from . import prng
from .errors import IncompleteRecord, ParseError, ProtocolError, Timeout, ValidationError
from .session import Runtime, SessionService, iso_ms

SIM_START = datetime(2026, 1, 1, 9, 0, 0, tzinfo=timezone.utc)


@dataclass(frozen=True)
class ScenarioTurn:
    client_text: str
    kind: str
    empathic_gold: str | None = None


@dataclass(frozen=True)
class Scenario:
    id: str
    client: dict
    symptom_gold: str
    goal_gold: tuple[str, str]
    turns: tuple[ScenarioTurn, ...]

    def open_ended_indexes(self) -> list[int]:
        return [i for i, t in enumerate(self.turns) if t.kind == "open_ended"]


@dataclass(frozen=True)
class AccuracyReport:
    empathic_correct: int
    goal_correct: int
    symptom_identified: bool
    per_turn_rt: list[float]
    empathy_turn_rt: list[float]


def load_scenario(document: bytes | str, runtime: Runtime | None = None) -> Scenario:
    try:
        raw = json.loads(document)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise ParseError(f"scenario is not valid JSON: {exc}") from exc
    try:
        turns = tuple(
            ScenarioTurn(t["client_text"], t["kind"], t.get("empathic_gold")) for t in raw["turns"]
        )
        scenario = Scenario(
            id=raw["id"],
            client=raw["client"],
            symptom_gold=raw["symptom_gold"],
            goal_gold=tuple(raw["goal_gold"]),
            turns=turns,
        )
    except (KeyError, TypeError) as exc:
        raise ParseError(f"scenario is missing required fields: {exc}") from exc

    open_turns = [t for t in scenario.turns if t.kind == "open_ended"]
    if len(open_turns) != 2:
        raise ValidationError(f"scenario must have exactly 2 open-ended turns, got {len(open_turns)}")
    for t in open_turns:
        if not t.empathic_gold:
            raise ValidationError("every open-ended turn needs an empathic_gold")
    if len(scenario.goal_gold) != 2:
        raise ValidationError("goal_gold must be a pair")
    for t in scenario.turns:
        if t.kind not in ("scripted", "open_ended"):
            raise ValidationError(f"unknown turn kind: {t.kind}")

    if runtime is not None:
        graph = runtime.graph
        if scenario.symptom_gold not in graph.symptoms:
            raise ValidationError(f"dangling symptom_gold: {scenario.symptom_gold}")
        for goal in scenario.goal_gold:
            if goal not in graph.goals:
                raise ValidationError(f"dangling goal_gold: {goal}")
        if tuple(sorted(scenario.goal_gold)) != graph.exclusive_goals(scenario.symptom_gold):
            raise ValidationError("goal_gold must be the symptom's exclusive pair")
        for t in open_turns:
            try:
                runtime.bank.by_id(t.empathic_gold)
            except KeyError:
                raise ValidationError(f"dangling empathic_gold: {t.empathic_gold}") from None
    return scenario


def shipped_scenario(name: str, runtime: Runtime | None = None) -> Scenario:
    try:
        data = importlib_resources.files("a2p2.data.scenarios").joinpath(f"{name}.json").read_bytes()
    except FileNotFoundError:
        raise ParseError(f"no shipped scenario named {name!r}") from None
    return load_scenario(data, runtime)


# -- endpoints ---------------------------------------------------------------


class InProcessEndpoint:
    """Drives a SessionService directly; the default for headless runs."""

    def __init__(self, service: SessionService):
        self.service = service

    def create_session(self, profile: dict, condition: str, seed: int, at: str) -> str:
        return self.service.create_session(profile, condition, seed, at=at)

    def post_client(self, session_id: str, text: str, at: str) -> dict:
        return self.service.post_client_message(session_id, text, at=at)

    def get_state(self, session_id: str) -> dict:
        return self.service.get_state(session_id)

    def get_suggestions(self, session_id: str, step: str) -> dict:
        return self.service.get_suggestions(session_id, step)

    def get_goals(self, session_id: str, at: str) -> dict:
        return self.service.present_goals(session_id, at=at)

    def post_provider(self, session_id: str, text: str, suggestion_id, goal_ids, at: str) -> dict:
        return self.service.post_provider_message(
            session_id, text, suggestion_id=suggestion_id, goal_ids=goal_ids, at=at
        )

    def get_record(self, session_id: str) -> dict:
        return self.service.get_record(session_id)


class HttpEndpoint:
    """Same surface over the HTTP API."""

    def __init__(self, base_url: str, timeout: float = 5.0, client: httpx.Client | None = None):
        self.base_url = base_url.rstrip("/")
        self.client = client or httpx.Client(timeout=timeout)

    def _call(self, method: str, path: str, **kwargs) -> dict:
        try:
            response = self.client.request(method, self.base_url + path, **kwargs)
        except (httpx.TimeoutException, httpx.ConnectError, httpx.NetworkError) as exc:
            raise Timeout(f"session endpoint unreachable: {exc}") from exc
        if response.status_code >= 400:
            raise ProtocolError(f"{method} {path} -> {response.status_code}: {response.text}")
        return response.json()

    def create_session(self, profile: dict, condition: str, seed: int, at: str) -> str:
        body = {"profile": profile, "condition": condition, "seed": seed, "at": at}
        return self._call("POST", "/sessions", json=body)["session_id"]

    def post_client(self, session_id: str, text: str, at: str) -> dict:
        return self._call("POST", f"/sessions/{session_id}/client-message", json={"text": text, "at": at})

    def get_state(self, session_id: str) -> dict:
        return self._call("GET", f"/sessions/{session_id}/state")

    def get_suggestions(self, session_id: str, step: str) -> dict:
        return self._call("GET", f"/sessions/{session_id}/suggestions", params={"step": step})

    def get_goals(self, session_id: str, at: str) -> dict:
        return self._call("GET", f"/sessions/{session_id}/goals", params={"at": at})

    def post_provider(self, session_id: str, text: str, suggestion_id, goal_ids, at: str) -> dict:
        body = {"text": text, "suggestion_id": suggestion_id, "goal_ids": goal_ids, "at": at}
        return self._call("POST", f"/sessions/{session_id}/provider-message", json=body)

    def get_record(self, session_id: str) -> dict:
        return self._call("GET", f"/sessions/{session_id}/events")


# -- auto-provider -----------------------------------------------------------

_BASE_REPLY_S = 3.0
_BASE_EMPATHY_S = 4.0
_SCAN_S_PER_ITEM = 0.35
_CLIENT_DELAY_S = 2.0


def _pick_empathic(items: list[dict], gold: str | None, patience: int | None) -> tuple[dict, int]:
    """Returns (chosen item, items read). Default policy reads only the top."""
    if patience is None or gold is None:
        return items[0], 1
    window = items[:patience]
    for position, item in enumerate(window, start=1):
        if item["id"] == gold:
            return item, position
    return items[0], len(window)


def _pick_goals(options: list[dict], gold: tuple[str, str], patience: int | None) -> list[str]:
    ids = [o["id"] for o in options]
    if patience is None:
        return ids[:2]
    window = ids[: max(patience, 2)]
    found = [g for g in ids if g in gold and g in window]
    if len(found) == 2:
        return found
    return ids[:2]


def drive(
    scenario: Scenario,
    endpoint,
    condition: str,
    seed: int,
    patience: int | None = None,
    start: datetime = SIM_START,
) -> dict:
    """Play every client turn, auto-answer as the provider, return the record."""
    rng = prng.stream(seed, prng.STREAM_JITTER)
    clock = start
    profile = {
        "client_id": scenario.client["client_id"],
        "name": scenario.client["name"],
        "linked_symptoms": [],
        "linked_goals": [],
        "linked_solutions": [],
    }
    session_id = endpoint.create_session(profile, condition, seed, at=iso_ms(clock))

    for index, turn in enumerate(scenario.turns):
        clock += timedelta(seconds=round(_CLIENT_DELAY_S + rng.next_unit(), 3))
        endpoint.post_client(session_id, turn.client_text, at=iso_ms(clock))

        state = endpoint.get_state(session_id)
        step = state["selected_step"]
        suggestions = endpoint.get_suggestions(session_id, step)

        suggestion_id = None
        goal_ids = None
        read_cost = 0.0
        if turn.kind == "open_ended":
            empathic = suggestions.get("empathic") or []
            if not empathic:
                raise ProtocolError(f"turn {index}: open-ended turn but no empathic suggestions at step {step}")
            chosen, items_read = _pick_empathic(empathic, turn.empathic_gold, patience)
            suggestion_id = chosen["id"]
            text = chosen["text"]
            read_cost = _BASE_EMPATHY_S - _BASE_REPLY_S + _SCAN_S_PER_ITEM * items_read
        else:
            therapeutic = suggestions.get("therapeutic") or []
            if step == "goal_setting":
                presented = endpoint.get_goals(session_id, at=iso_ms(clock))
                goal_ids = _pick_goals(presented["options"], scenario.goal_gold, patience)
                read_cost = 0.3 * len(presented["options"])
            if not therapeutic:
                raise ProtocolError(f"turn {index}: no sendable therapeutic template at step {step}")
            text = therapeutic[0]["text"]

        clock += timedelta(seconds=round(_BASE_REPLY_S + read_cost + rng.next_unit(), 3))
        endpoint.post_provider(session_id, text, suggestion_id, goal_ids, at=iso_ms(clock))

    state = endpoint.get_state(session_id)
    if not state["finishable"]:
        raise ProtocolError("scenario ended before the policy reached closing")
    return endpoint.get_record(session_id)


def transcript_from_record(record: dict, scenario: Scenario, participant: str | None = None) -> dict:
    """Normalized transcript: self-contained for scoring, stable across reruns."""
    return {
        "scenario": {
            "id": scenario.id,
            "symptom_gold": scenario.symptom_gold,
            "goal_gold": list(scenario.goal_gold),
            "turn_count": len(scenario.turns),
            "open_ended_turns": scenario.open_ended_indexes(),
            "empathic_golds": [t.empathic_gold for t in scenario.turns if t.kind == "open_ended"],
        },
        "participant": participant,
        "condition": record["condition"],
        "seed": record["seed"],
        "profile": record["profile"],
        "events": record["events"],
    }


def score(record: dict, scenario: Scenario) -> AccuracyReport:
    """Pure accuracy/timing scoring of a finished record against its scenario."""
    events = record.get("events", [])
    if not events:
        raise IncompleteRecord("record has no events")

    client_turn = -1
    open_indexes = set(scenario.open_ended_indexes())
    golds = {i: t.empathic_gold for i, t in enumerate(scenario.turns) if t.kind == "open_ended"}
    pending_open: int | None = None
    empathic_correct = 0
    answered_open = 0
    per_turn_rt: list[float] = []
    empathy_turn_rt: list[float] = []
    selected_goals: set[str] = set()
    last_symptom_link: str | None = None

    for event in events:
        kind = event["kind"]
        payload = event.get("payload", {})
        if kind == "message" and event["actor"] == "client":
            client_turn += 1
            if client_turn in open_indexes:
                pending_open = client_turn
        elif kind == "message" and event["actor"] == "provider":
            rt = payload.get("rt_seconds")
            if rt is not None:
                per_turn_rt.append(rt)
            if pending_open is not None:
                answered_open += 1
                if rt is not None:
                    empathy_turn_rt.append(rt)
                if payload.get("suggestion_id") == golds[pending_open]:
                    empathic_correct += 1
                pending_open = None
            if payload.get("goal_ids"):
                selected_goals.update(payload["goal_ids"])
        elif kind == "selection" and payload.get("link") == "symptom":
            last_symptom_link = payload["node"]

    if client_turn + 1 < len(scenario.turns) or answered_open < len(open_indexes):
        raise IncompleteRecord(
            f"record covers {client_turn + 1}/{len(scenario.turns)} turns "
            f"and {answered_open}/{len(open_indexes)} open-ended answers"
        )
    return AccuracyReport(
        empathic_correct=empathic_correct,
        goal_correct=len(selected_goals & set(scenario.goal_gold)),
        symptom_identified=last_symptom_link == scenario.symptom_gold,
        per_turn_rt=per_turn_rt,
        empathy_turn_rt=empathy_turn_rt,
    )


# -- synthetic cohort --------------------------------------------------------


def build_synthetic_cohort(
    runtime: Runtime,
    out_dir: str | Path,
    participants: int = 20,
    experts: int = 11,
    base_seed: int = 1000,
) -> dict:
    """Auto-provider cohort: every participant runs both conditions.

    Control sessions use a per-participant patience bound, so accuracy and
    read time vary with where the gold lands in the shuffled list; the
    resulting dataset exists to exercise the analysis pipeline, not to
    reproduce any human numbers.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    scenarios = {
        "stress": shipped_scenario("stress", runtime),
        "sleep": shipped_scenario("sleep_disturbance", runtime),
    }
    groups: dict[str, str] = {}
    written: list[str] = []
    for i in range(participants):
        participant = f"p{i + 1:02d}"
        groups[participant] = "expert" if i < experts else "non_expert"
        jitter = prng.stream(base_seed + i, prng.STREAM_JITTER)
        patience = 20 + int(jitter.next_unit() * 58)  # 20..77 items before giving up
        first_condition = "intervention" if i % 2 == 0 else "control"
        for j, condition in enumerate([first_condition, _other(first_condition)]):
            scenario = scenarios["stress" if (i + j) % 2 == 0 else "sleep"]
            seed = base_seed + i * 10 + j
            service = SessionService(runtime)
            record = drive(
                scenario,
                InProcessEndpoint(service),
                condition,
                seed,
                patience=patience if condition == "control" else None,
            )
            transcript = transcript_from_record(record, scenario, participant)
            path = out / f"{participant}_{condition}.json"
            path.write_text(json.dumps(transcript, indent=2, sort_keys=True) + "\n")
            written.append(str(path))
    (out / "groups.json").write_text(json.dumps(groups, indent=2, sort_keys=True) + "\n")
    return {"transcripts": written, "groups_file": str(out / "groups.json")}


def _other(condition: str) -> str:
    return "control" if condition == "intervention" else "intervention"
