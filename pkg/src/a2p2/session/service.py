"""Session lifecycle, message exchange, and event-sourced persistence.

Every state change flows through an append-only event list; the live state
is produced by the same reducer that replays a stored log, so a transcript
on disk is always sufficient to reconstruct the conversation. Timestamps
are caller-suppliable (falling back to the wall clock), which lets the
simulator drive sessions on a fixed clock and makes reruns byte-identical.
"""

from __future__ import annotations

import json
import threading
import uuid
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Iterable

from .. import ckg, dialog, empathy, nlg, nlu
from ..errors import (
    MissingSlot,
    NoTurns,
    SessionClosed,
    UnknownGoal,
    UnknownSession,
    UnknownStep,
    ValidationError,
)
from ..prng import STREAM_GOALS, fisher_yates, stream

CONDITIONS = ("control", "intervention")


def iso_ms(dt: datetime) -> str:
    """ISO-8601 UTC with millisecond precision, e.g. 2026-01-01T09:00:00.000Z."""
    dt = dt.astimezone(timezone.utc)
    return dt.strftime("%Y-%m-%dT%H:%M:%S.") + f"{dt.microsecond // 1000:03d}Z"


def parse_ts(value: str) -> datetime:
    return datetime.fromisoformat(value.replace("Z", "+00:00"))


def rt_between(client_ts: str, provider_ts: str) -> float:
    return round((parse_ts(provider_ts) - parse_ts(client_ts)).total_seconds(), 3)


@dataclass
class Runtime:
    """Immutable shared assets: graph, banks, policies, lexicon."""

    graph: ckg.ClinicalGraph
    bank: empathy.ResponseBank
    templates: nlg.TemplateBank
    emotion_lexicon: dict[str, list[str]]
    policies: dict[int, dialog.Policy]

    @classmethod
    def shipped(cls) -> "Runtime":
        graph = ckg.load_shipped_graph()
        return cls(
            graph=graph,
            bank=empathy.load_shipped_bank(set(graph.symptoms)),
            templates=nlg.load_shipped_templates(),
            emotion_lexicon=nlu.load_emotion_lexicon(),
            policies={1: dialog.load_shipped_policy(1), 2: dialog.load_shipped_policy(2)},
        )

    def policy_for(self, session_number: int) -> dialog.Policy:
        return self.policies[1] if session_number <= 1 else self.policies[2]


@dataclass
class LiveSession:
    session_id: str
    runtime: Runtime
    condition: str
    seed: int
    session_number: int
    profile: ckg.ClientProfile
    state: dialog.ConversationState
    events: list[dict] = field(default_factory=list)
    last_client_ts: str | None = None
    last_client_suggested: bool = False
    empathy_items: list[dict] = field(default_factory=list)
    closed: bool = False
    lock: threading.RLock = field(default_factory=threading.RLock)

    @property
    def policy(self) -> dialog.Policy:
        return self.runtime.policy_for(self.session_number)


class SessionService:
    """Holds live sessions; one logical writer per session via its lock."""

    def __init__(self, runtime: Runtime, data_dir: str | Path | None = None):
        self.runtime = runtime
        self.data_dir = Path(data_dir) if data_dir else None
        if self.data_dir:
            self.data_dir.mkdir(parents=True, exist_ok=True)
        self._sessions: dict[str, LiveSession] = {}
        self._listeners: dict[str, list[Callable[[dict], None]]] = {}
        self._registry_lock = threading.Lock()

    # -- lifecycle ---------------------------------------------------------

    def create_session(
        self,
        profile: ckg.ClientProfile | dict,
        condition: str,
        seed: int,
        at: str | None = None,
        session_number: int = 1,
    ) -> str:
        if isinstance(profile, dict):
            profile = ckg.profile_from_dict(profile)
        if condition not in CONDITIONS:
            raise ValidationError(f"unknown condition: {condition}")
        ts = at or iso_ms(datetime.now(timezone.utc))
        session_id = uuid.uuid4().hex[:12]
        state = dialog.init_session(
            profile, session_number, condition, parse_ts(ts), self.runtime.policy_for(session_number), self.runtime.graph
        )
        live = LiveSession(
            session_id=session_id,
            runtime=self.runtime,
            condition=condition,
            seed=seed,
            session_number=session_number,
            profile=profile,
            state=state,
        )
        with self._registry_lock:
            self._sessions[session_id] = live
        self._append(
            live,
            {
                "timestamp": ts,
                "actor": "system",
                "kind": "init",
                "payload": {
                    "profile": ckg.profile_to_dict(profile),
                    "condition": condition,
                    "seed": seed,
                    "session_number": session_number,
                },
            },
        )
        return session_id

    def _get(self, session_id: str) -> LiveSession:
        try:
            return self._sessions[session_id]
        except KeyError:
            raise UnknownSession(f"unknown session: {session_id}") from None

    # -- event plumbing ----------------------------------------------------

    def _stamp(self, live: LiveSession, at: str | None) -> str:
        """Caller-supplied or wall-clock time, clamped so the log never rewinds."""
        ts = at or iso_ms(datetime.now(timezone.utc))
        if live.events and ts < live.events[-1]["timestamp"]:
            ts = live.events[-1]["timestamp"]
        return ts

    def _append(self, live: LiveSession, event: dict) -> dict:
        if live.events and event["timestamp"] < live.events[-1]["timestamp"]:
            # single clock source: never let a late caller rewind the log
            event = dict(event, timestamp=live.events[-1]["timestamp"])
        live.events.append(event)
        _reduce(live, event)
        if self.data_dir:
            path = self.data_dir / f"{live.session_id}.jsonl"
            with path.open("a") as fh:
                fh.write(json.dumps(event, sort_keys=True) + "\n")
        for listener in list(self._listeners.get(live.session_id, ())):
            listener(event)
        return event

    def add_listener(self, session_id: str, callback: Callable[[dict], None]) -> None:
        self._get(session_id)
        self._listeners.setdefault(session_id, []).append(callback)

    def remove_listener(self, session_id: str, callback: Callable[[dict], None]) -> None:
        listeners = self._listeners.get(session_id, [])
        if callback in listeners:
            listeners.remove(callback)

    # -- client side -------------------------------------------------------

    def post_client_message(self, session_id: str, text: str, at: str | None = None) -> dict:
        live = self._get(session_id)
        with live.lock:
            if live.closed:
                raise SessionClosed(f"session {session_id} is closed")
            ts = self._stamp(live, at)
            self._append(
                live,
                {"timestamp": ts, "actor": "client", "kind": "message", "payload": {"text": text}},
            )
            result = nlu.understand(text, self.runtime.graph, self.runtime.emotion_lexicon)
            if result.symptom is not None:
                self._append(
                    live,
                    {
                        "timestamp": ts,
                        "actor": "system",
                        "kind": "selection",
                        "payload": {"link": "symptom", "node": result.symptom},
                    },
                )
            step = live.policy.step(live.state.selected_step)
            if step.empathic:
                if live.condition == "intervention":
                    ranked = empathy.rank(self.runtime.bank, text, result)
                    mode = "ranked"
                else:
                    ranked = empathy.control_order(self.runtime.bank, live.seed)
                    mode = "shuffled"
                self._append(
                    live,
                    {
                        "timestamp": ts,
                        "actor": "system",
                        "kind": "suggestion_list",
                        "payload": {
                            "mode": mode,
                            "items": [
                                {"response": s.response, "score": s.score, "rank": s.rank} for s in ranked
                            ],
                        },
                    },
                )
            return {"delivered_at": live.events[-1]["timestamp"]}

    # -- provider side -----------------------------------------------------

    def get_suggestions(self, session_id: str, step_key: str) -> dict:
        live = self._get(session_id)
        with live.lock:
            policy = live.policy
            step = policy.step(step_key)  # raises UnknownStep
            therapeutic: list[dict] = []
            blocked: list[dict] = []
            for availability in dialog.actions_for_step(live.state, step_key, policy):
                templates = nlg.templates_for_action(self.runtime.templates, availability.action.key)
                for template in templates:
                    if availability.blocked:
                        blocked.append(
                            {
                                "id": template.id,
                                "action": availability.action.key,
                                "template": template.text,
                                "missing": list(availability.missing),
                            }
                        )
                        continue
                    try:
                        text = nlg.fill(template, live.state)
                    except MissingSlot as exc:
                        blocked.append(
                            {
                                "id": template.id,
                                "action": availability.action.key,
                                "template": template.text,
                                "missing": [exc.slot],
                            }
                        )
                        continue
                    therapeutic.append({"id": template.id, "action": availability.action.key, "text": text})
            empathic = list(live.empathy_items) if step.empathic else []
            return {
                "step": step_key,
                "therapeutic": therapeutic,
                "empathic": empathic,
                "blocked": blocked,
            }

    def present_goals(self, session_id: str, at: str | None = None) -> dict:
        live = self._get(session_id)
        with live.lock:
            symptom_id = live.state.symptom_id
            if not symptom_id:
                raise MissingSlot("symptom")
            pair = self.runtime.graph.exclusive_goals(symptom_id)
            if len(pair) != 2:
                raise ValidationError(f"symptom {symptom_id} has no exclusive goal pair")
            if live.condition == "intervention":
                options = list(pair)
            else:
                pool = sorted(
                    g
                    for s in self.runtime.graph.symptoms
                    if s != symptom_id
                    for g in self.runtime.graph.exclusive_goals(s)
                )
                rng = stream(live.seed, STREAM_GOALS)
                distractors = fisher_yates(pool, rng)[:3]
                options = fisher_yates(list(pair) + distractors, rng)
            ts = self._stamp(live, at)
            payload = {
                "mode": live.condition,
                "options": options,
                "correct_pair": list(pair),
            }
            self._append(
                live,
                {"timestamp": ts, "actor": "system", "kind": "goal_options", "payload": payload},
            )
            return {
                "mode": live.condition,
                "options": [
                    {"id": g, "text": self.runtime.graph.goals[g].text} for g in options
                ],
            }

    def post_provider_message(
        self,
        session_id: str,
        text: str,
        suggestion_id: str | None = None,
        goal_ids: list[str] | None = None,
        at: str | None = None,
    ) -> dict:
        live = self._get(session_id)
        with live.lock:
            if live.closed:
                raise SessionClosed(f"session {session_id} is closed")
            if suggestion_id is not None:
                try:
                    self.runtime.bank.by_id(suggestion_id)
                except KeyError:
                    raise ValidationError(f"unknown suggestion id: {suggestion_id}") from None
            if goal_ids:
                for goal_id in goal_ids:
                    if goal_id not in self.runtime.graph.goals:
                        raise UnknownGoal(f"unknown goal: {goal_id}")
            ts = self._stamp(live, at)
            rt = rt_between(live.last_client_ts, ts) if live.last_client_ts else None
            completing = live.state.selected_step
            payload: dict = {"text": text, "rt_seconds": rt, "answers_suggested_turn": live.last_client_suggested}
            if suggestion_id is not None:
                payload["suggestion_id"] = suggestion_id
            if goal_ids:
                payload["goal_ids"] = list(goal_ids)
            self._append(
                live,
                {"timestamp": ts, "actor": "provider", "kind": "message", "payload": payload},
            )
            for link_kind, node in _links_for_provider_turn(live, completing, goal_ids):
                self._append(
                    live,
                    {
                        "timestamp": ts,
                        "actor": "system",
                        "kind": "selection",
                        "payload": {"link": link_kind, "node": node},
                    },
                )
            self._append(
                live,
                {
                    "timestamp": ts,
                    "actor": "system",
                    "kind": "step_complete",
                    "payload": {"step": completing},
                },
            )
            if dialog.is_finishable(live.state, live.policy):
                live.closed = True
            return {
                "rt_seconds": rt,
                "completed_step": completing,
                "selected_step": live.state.selected_step,
                "closed": live.closed,
            }

    def complete_step(self, session_id: str, step_key: str, at: str | None = None) -> dict:
        """Explicit completion, for interfaces that report steps themselves."""
        live = self._get(session_id)
        with live.lock:
            live.policy.step(step_key)  # raises UnknownStep
            ts = self._stamp(live, at)
            self._append(
                live,
                {"timestamp": ts, "actor": "provider", "kind": "step_complete", "payload": {"step": step_key}},
            )
            if dialog.is_finishable(live.state, live.policy):
                live.closed = True
            return {"selected_step": live.state.selected_step, "closed": live.closed}

    # -- reads -------------------------------------------------------------

    def get_state(self, session_id: str) -> dict:
        live = self._get(session_id)
        with live.lock:
            policy = live.policy
            return {
                "session_id": live.session_id,
                "condition": live.condition,
                "seed": live.seed,
                "session_number": live.session_number,
                "selected_step": live.state.selected_step,
                "completed": [s.key for s in policy.steps if s.key in live.state.completed],
                "slots": dict(live.state.slots),
                "finishable": dialog.is_finishable(live.state, policy),
                "closed": live.closed,
                "steps": [
                    {
                        "key": s.key,
                        "label": s.label,
                        "ordinal": s.ordinal,
                        "empathic": s.empathic,
                        "completed": s.key in live.state.completed,
                        "selected": s.key == live.state.selected_step,
                    }
                    for s in policy.steps
                ],
            }

    def get_metrics(self, session_id: str) -> dict:
        live = self._get(session_id)
        with live.lock:
            return metrics_from_events(live.events)

    def get_record(self, session_id: str) -> dict:
        live = self._get(session_id)
        with live.lock:
            return {
                "session_id": live.session_id,
                "condition": live.condition,
                "seed": live.seed,
                "session_number": live.session_number,
                "profile": ckg.profile_to_dict(live.profile),
                "events": [dict(e) for e in live.events],
            }


# -- reducer (shared by live path and replay) -------------------------------


def _links_for_provider_turn(
    live: LiveSession, completing: str, goal_ids: list[str] | None
) -> list[tuple[str, str]]:
    links: list[tuple[str, str]] = []
    if goal_ids:
        links.extend(("goal", g) for g in goal_ids)
    if completing == "solution_brainstorm":
        solution = live.state.solution_id
        if not solution and live.state.goal_ids:
            recs = ckg.recommend_solutions(live.runtime.graph, live.state.goal_ids[0])
            solution = recs[0][0].id if recs else None
        if solution:
            links.append(("solution", solution))
    return links


def _reduce(live: LiveSession, event: dict) -> None:
    """Apply one event to the conversation state; must stay deterministic."""
    kind = event["kind"]
    payload = event.get("payload", {})
    runtime = live.runtime

    if kind == "init":
        return  # state was built at construction; replay handles init itself

    if kind == "message" and event["actor"] == "client":
        text = payload["text"]
        result = nlu.understand(text, runtime.graph, runtime.emotion_lexicon)
        live.state = dialog.absorb(live.state, result, runtime.graph)
        step = live.policy.step(live.state.selected_step)
        if step.empathic and not live.state.slots.get("problem"):
            live.state = dialog.set_slot(live.state, "problem", text)
        live.last_client_ts = event["timestamp"]
        live.last_client_suggested = False
        return

    if kind == "suggestion_list":
        live.empathy_items = [
            {
                "id": item["response"],
                "text": runtime.bank.by_id(item["response"]).text,
                "rank": item["rank"],
                "score": item["score"],
            }
            for item in payload["items"]
        ]
        live.last_client_suggested = True
        return

    if kind == "message" and event["actor"] == "provider":
        goal_ids = payload.get("goal_ids")
        if goal_ids:
            state = live.state
            first = goal_ids[0]
            state = dialog.set_slot(state, "goal", runtime.graph.goals[first].text)
            recs = ckg.recommend_solutions(runtime.graph, first)
            solution_id = recs[0][0].id if recs else None
            if solution_id:
                state = dialog.set_slot(state, "solution", runtime.graph.solutions[solution_id].text)
            live.state = dialog.replace_selection(state, tuple(goal_ids), solution_id)
        live.last_client_ts = None
        return

    if kind == "selection":
        link_kind = payload.get("link")
        if link_kind:
            live.profile = ckg.link_client(
                live.profile, runtime.graph, payload["node"], link_kind, event["timestamp"]
            )
        return

    if kind == "step_complete":
        live.state = dialog.complete_step(live.state, payload["step"], live.policy)
        return

    if kind == "goal_options":
        return


def replay(events: Iterable[dict], runtime: Runtime) -> LiveSession:
    """Rebuild a session purely from its event log."""
    events = list(events)
    if not events or events[0]["kind"] != "init":
        raise ValidationError("event log must start with an init event")
    init = events[0]["payload"]
    profile = ckg.profile_from_dict(init["profile"])
    state = dialog.init_session(
        profile,
        init["session_number"],
        init["condition"],
        parse_ts(events[0]["timestamp"]),
        runtime.policy_for(init["session_number"]),
        runtime.graph,
    )
    live = LiveSession(
        session_id="replay",
        runtime=runtime,
        condition=init["condition"],
        seed=init["seed"],
        session_number=init["session_number"],
        profile=profile,
        state=state,
        events=events,
    )
    for event in events[1:]:
        _reduce(live, event)
        if event["kind"] == "step_complete" and dialog.is_finishable(live.state, live.policy):
            live.closed = True
    return live


def metrics_from_events(events: list[dict]) -> dict:
    """Response-time metrics recomputed from the log alone."""
    per_turn: list[float] = []
    empathy_rts: list[float] = []
    selections: list[dict] = []
    for event in events:
        if event["kind"] == "message" and event["actor"] == "provider":
            payload = event["payload"]
            rt = payload.get("rt_seconds")
            if rt is not None:
                per_turn.append(rt)
                if payload.get("answers_suggested_turn"):
                    empathy_rts.append(rt)
            if payload.get("suggestion_id") or payload.get("goal_ids"):
                selections.append(
                    {
                        "at": event["timestamp"],
                        "suggestion_id": payload.get("suggestion_id"),
                        "goal_ids": payload.get("goal_ids", []),
                    }
                )
    if not per_turn:
        raise NoTurns("session has no provider messages with a response-time anchor")
    return {
        "avg_rt": round(sum(per_turn) / len(per_turn), 3),
        "per_turn_rt": per_turn,
        "empathy_turn_rts": empathy_rts,
        "selections": selections,
    }
