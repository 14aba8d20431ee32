"""Conversation state tracking and the finite-state step policy.

All operations are pure: they take a ConversationState value and return a
new one. The step sequence and the action table are loaded from a policy
JSON file so a different protocol can be dropped in without code changes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from datetime import datetime
from importlib import resources as importlib_resources

from .ckg import ClientProfile, ClinicalGraph
from .errors import ParseError, UnknownStep, ValidationError
from .nlu import NluResult

SLOT_KEYS = ("name", "time_of_day", "emotion", "symptom", "goal", "problem", "solution")


@dataclass(frozen=True)
class PstStep:
    key: str
    label: str
    ordinal: int
    empathic: bool = False


@dataclass(frozen=True)
class DialogAction:
    key: str
    step: str
    requires: frozenset[str]


@dataclass(frozen=True)
class Policy:
    name: str
    steps: tuple[PstStep, ...]
    actions: tuple[DialogAction, ...]

    def step(self, key: str) -> PstStep:
        for s in self.steps:
            if s.key == key:
                return s
        raise UnknownStep(f"unknown step: {key}")

    def step_keys(self) -> tuple[str, ...]:
        return tuple(s.key for s in self.steps)

    def actions_for(self, step_key: str) -> tuple[DialogAction, ...]:
        self.step(step_key)
        return tuple(a for a in self.actions if a.step == step_key)


def load_policy(document: bytes | str) -> Policy:
    try:
        raw = json.loads(document)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise ParseError(f"policy document is not valid JSON: {exc}") from exc
    steps = tuple(
        sorted(
            (PstStep(s["key"], s["label"], s["ordinal"], s.get("empathic", False)) for s in raw["steps"]),
            key=lambda s: s.ordinal,
        )
    )
    if [s.ordinal for s in steps] != list(range(len(steps))):
        raise ValidationError("step ordinals must form a contiguous 0..n-1 sequence")
    keys = {s.key for s in steps}
    if len(keys) != len(steps):
        raise ValidationError("duplicate step key")
    if sum(1 for s in steps if s.empathic) != 2:
        raise ValidationError("policy must contain exactly two empathic steps")
    actions = []
    for a in raw["actions"]:
        if a["step"] not in keys:
            raise ValidationError(f"action {a['key']} belongs to unknown step {a['step']}")
        requires = frozenset(a.get("requires", []))
        if not requires <= set(SLOT_KEYS):
            raise ValidationError(f"action {a['key']} requires unknown slots: {sorted(requires - set(SLOT_KEYS))}")
        actions.append(DialogAction(a["key"], a["step"], requires))
    if len({a.key for a in actions}) != len(actions):
        raise ValidationError("duplicate action key")
    return Policy(raw.get("name", "policy"), steps, tuple(actions))


def load_shipped_policy(session_number: int = 1) -> Policy:
    name = "policy_session1.json" if session_number <= 1 else "policy_session2.json"
    return load_policy(importlib_resources.files("a2p2.data").joinpath(name).read_bytes())


@dataclass(frozen=True)
class ConversationState:
    slots: dict[str, str | None]
    completed: frozenset[str]
    selected_step: str
    session_number: int
    condition: str
    # structured companions to the display slots, used for graph lookups
    symptom_id: str | None = None
    goal_ids: tuple[str, ...] = ()
    solution_id: str | None = None

    def __eq__(self, other):
        if not isinstance(other, ConversationState):
            return NotImplemented
        return (
            self.slots == other.slots
            and self.completed == other.completed
            and self.selected_step == other.selected_step
            and self.session_number == other.session_number
            and self.condition == other.condition
            and self.symptom_id == other.symptom_id
            and self.goal_ids == other.goal_ids
            and self.solution_id == other.solution_id
        )


def time_of_day(clock: datetime) -> str:
    if clock.hour < 12:
        return "Morning"
    if clock.hour < 18:
        return "Afternoon"
    return "Evening"


def init_session(
    profile: ClientProfile,
    session_number: int,
    condition: str,
    clock: datetime,
    policy: Policy,
    graph: ClinicalGraph | None = None,
) -> ConversationState:
    """Fresh state: name and time-of-day pre-filled, prior links imported."""
    if session_number < 1:
        raise ValidationError("session_number must be >= 1")
    if condition not in ("control", "intervention"):
        raise ValidationError(f"unknown condition: {condition}")
    slots: dict[str, str | None] = {k: None for k in SLOT_KEYS}
    slots["name"] = profile.name
    slots["time_of_day"] = time_of_day(clock)

    symptom_id = profile.latest("symptom")
    goal_id = profile.latest("goal")
    solution_id = profile.latest("solution")
    if graph is not None:
        if symptom_id and symptom_id in graph.symptoms:
            slots["symptom"] = graph.symptoms[symptom_id].name.lower()
        if goal_id and goal_id in graph.goals:
            slots["goal"] = graph.goals[goal_id].text
        if solution_id and solution_id in graph.solutions:
            slots["solution"] = graph.solutions[solution_id].text

    return ConversationState(
        slots=slots,
        completed=frozenset(),
        selected_step=policy.steps[0].key,
        session_number=session_number,
        condition=condition,
        symptom_id=symptom_id,
        goal_ids=(goal_id,) if goal_id else (),
        solution_id=solution_id,
    )


def absorb(state: ConversationState, nlu: NluResult, graph: ClinicalGraph | None = None) -> ConversationState:
    """Overwrite symptom/emotion slots with newly detected values; latest wins."""
    if nlu.symptom is None and nlu.emotion is None:
        return state
    slots = dict(state.slots)
    symptom_id = state.symptom_id
    if nlu.symptom is not None:
        symptom_id = nlu.symptom
        slots["symptom"] = (
            graph.symptoms[nlu.symptom].name.lower() if graph and nlu.symptom in graph.symptoms else nlu.symptom
        )
    if nlu.emotion is not None:
        slots["emotion"] = nlu.emotion
    return replace(state, slots=slots, symptom_id=symptom_id)


def set_slot(state: ConversationState, key: str, value: str) -> ConversationState:
    if key not in SLOT_KEYS:
        raise ValidationError(f"unknown slot: {key}")
    slots = dict(state.slots)
    slots[key] = value
    return replace(state, slots=slots)


def replace_selection(
    state: ConversationState, goal_ids: tuple[str, ...], solution_id: str | None
) -> ConversationState:
    return replace(state, goal_ids=goal_ids, solution_id=solution_id)


def complete_step(state: ConversationState, step_key: str, policy: Policy) -> ConversationState:
    policy.step(step_key)
    completed = state.completed | {step_key}
    selected = state.selected_step
    remaining = [s for s in policy.steps if s.key not in completed]
    selected = remaining[0].key if remaining else policy.steps[-1].key
    return replace(state, completed=completed, selected_step=selected)


def select_step(state: ConversationState, step_key: str, policy: Policy) -> ConversationState:
    policy.step(step_key)
    return replace(state, selected_step=step_key)


def is_finishable(state: ConversationState, policy: Policy) -> bool:
    return set(policy.step_keys()) <= state.completed


@dataclass(frozen=True)
class ActionAvailability:
    action: DialogAction
    blocked: bool
    missing: tuple[str, ...]


def actions_for_step(state: ConversationState, step_key: str, policy: Policy) -> list[ActionAvailability]:
    """All of the step's actions, with unmet slot requirements flagged."""
    out = []
    for action in policy.actions_for(step_key):
        missing = tuple(sorted(k for k in action.requires if not state.slots.get(k)))
        out.append(ActionAvailability(action, blocked=bool(missing), missing=missing))
    return out
