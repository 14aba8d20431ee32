import json
from datetime import datetime, timezone

import pytest

from a2p2 import ckg, dialog
from a2p2.errors import UnknownStep, ValidationError
from a2p2.nlu import NluResult


@pytest.fixture(scope="module")
def policy():
    return dialog.load_shipped_policy(1)


def at(hour, minute=0):
    return datetime(2026, 1, 1, hour, minute, tzinfo=timezone.utc)


def fresh(graph, policy, name="Irina", hour=9, profile=None):
    profile = profile or ckg.ClientProfile("c1", name)
    return dialog.init_session(profile, 1, "intervention", at(hour), policy, graph)


def test_policy_shape(policy):
    assert [s.ordinal for s in policy.steps] == list(range(9))
    assert sum(1 for s in policy.steps if s.empathic) == 2
    assert policy.steps[0].key == "greeting"
    assert policy.steps[-1].key == "closing"
    # the session-1 sequence covers the core protocol phases
    keys = policy.step_keys()
    for needed in ("symptom_identification", "problem_exploration", "goal_setting", "solution_brainstorm"):
        assert needed in keys


def test_followup_policy_loads():
    policy2 = dialog.load_shipped_policy(2)
    assert sum(1 for s in policy2.steps if s.empathic) == 2


def test_policy_validation_rejects_gapped_ordinals(policy):
    doc = {
        "steps": [
            {"key": "a", "label": "A", "ordinal": 0, "empathic": True},
            {"key": "b", "label": "B", "ordinal": 2, "empathic": True},
        ],
        "actions": [],
    }
    with pytest.raises(ValidationError, match="contiguous"):
        dialog.load_policy(json.dumps(doc))


def test_policy_requires_two_empathic_steps():
    doc = {
        "steps": [
            {"key": "a", "label": "A", "ordinal": 0, "empathic": True},
            {"key": "b", "label": "B", "ordinal": 1, "empathic": False},
        ],
        "actions": [],
    }
    with pytest.raises(ValidationError, match="empathic"):
        dialog.load_policy(json.dumps(doc))


def test_init_prefills_name_and_morning(graph, policy):
    state = fresh(graph, policy, hour=9)
    assert state.slots["name"] == "Irina"
    assert state.slots["time_of_day"] == "Morning"
    assert state.completed == frozenset()
    assert state.selected_step == "greeting"


@pytest.mark.parametrize("hour,expected", [(0, "Morning"), (11, "Morning"), (12, "Afternoon"), (17, "Afternoon"), (18, "Evening"), (23, "Evening")])
def test_time_of_day_boundaries(graph, policy, hour, expected):
    assert fresh(graph, policy, hour=hour).slots["time_of_day"] == expected


def test_init_without_history_has_empty_symptom(graph, policy):
    state = fresh(graph, policy, hour=20)
    assert state.slots["time_of_day"] == "Evening"
    assert state.slots["symptom"] is None


def test_init_imports_prior_links_last_wins(graph, policy):
    profile = ckg.ClientProfile("c1", "Irina")
    profile = ckg.link_client(profile, graph, "fatigue", "symptom", "t1")
    profile = ckg.link_client(profile, graph, "stress", "symptom", "t2")
    profile = ckg.link_client(profile, graph, "g_journaling", "goal", "t3")
    state = fresh(graph, policy, profile=profile)
    assert state.symptom_id == "stress"
    assert state.slots["symptom"] == "stress"
    assert state.slots["goal"] == graph.goals["g_journaling"].text


def test_init_rejects_bad_session_number(graph, policy):
    with pytest.raises(ValidationError):
        dialog.init_session(ckg.ClientProfile("c", "N"), 0, "control", at(9), policy, graph)
    with pytest.raises(ValidationError):
        dialog.init_session(ckg.ClientProfile("c", "N"), 1, "placebo", at(9), policy, graph)


def test_absorb_sets_symptom_slot(graph, policy):
    state = fresh(graph, policy)
    state = dialog.absorb(state, NluResult(symptom="sleep_disturbance"), graph)
    assert state.symptom_id == "sleep_disturbance"
    assert state.slots["symptom"] == "sleep disturbance"


def test_absorb_of_nothing_is_identity(graph, policy):
    state = fresh(graph, policy)
    assert dialog.absorb(state, NluResult(), graph) == state


def test_absorb_latest_symptom_wins(graph, policy):
    state = fresh(graph, policy)
    state = dialog.absorb(state, NluResult(symptom="fatigue"), graph)
    state = dialog.absorb(state, NluResult(symptom="stress", emotion="stressed"), graph)
    assert state.symptom_id == "stress"
    assert state.slots["emotion"] == "stressed"


def test_complete_step_advances(graph, policy):
    state = fresh(graph, policy)
    state = dialog.complete_step(state, "greeting", policy)
    assert state.selected_step == "symptom_identification"
    assert state.completed == frozenset({"greeting"})


def test_complete_step_idempotent(graph, policy):
    state = fresh(graph, policy)
    once = dialog.complete_step(state, "greeting", policy)
    twice = dialog.complete_step(once, "greeting", policy)
    assert once == twice


def test_exhaustive_walk_terminates_at_last_step(graph, policy):
    state = fresh(graph, policy)
    for step in policy.step_keys():
        assert not dialog.is_finishable(state, policy)
        state = dialog.complete_step(state, step, policy)
    assert dialog.is_finishable(state, policy)
    assert state.selected_step == "closing"
    # completing again keeps the machine parked at the end
    state = dialog.complete_step(state, "closing", policy)
    assert state.selected_step == "closing"


def test_completed_never_shrinks(graph, policy):
    state = fresh(graph, policy)
    seen = set()
    for step in ("problem_exploration", "greeting", "greeting", "closing"):
        state = dialog.complete_step(state, step, policy)
        assert seen <= state.completed
        seen = set(state.completed)


def test_complete_out_of_order_selects_first_uncompleted(graph, policy):
    state = fresh(graph, policy)
    state = dialog.complete_step(state, "problem_exploration", policy)
    assert state.selected_step == "greeting"


def test_unknown_step_raises(graph, policy):
    state = fresh(graph, policy)
    with pytest.raises(UnknownStep):
        dialog.complete_step(state, "warmup", policy)
    with pytest.raises(UnknownStep):
        dialog.select_step(state, "warmup", policy)


def test_select_step_free_navigation(graph, policy):
    state = fresh(graph, policy)
    state = dialog.complete_step(state, "greeting", policy)
    moved = dialog.select_step(state, "greeting", policy)
    assert moved.selected_step == "greeting"
    assert moved.completed == state.completed
    assert moved.slots == state.slots
    assert dialog.select_step(state, state.selected_step, policy) == state


def test_actions_for_step_blocking(graph, policy):
    state = fresh(graph, policy)
    goal_actions = {a.action.key: a for a in dialog.actions_for_step(state, "goal_setting", policy)}
    assert goal_actions["suggest_goal"].blocked
    assert goal_actions["suggest_goal"].missing == ("symptom",)
    state = dialog.absorb(state, NluResult(symptom="stress"), graph)
    goal_actions = {a.action.key: a for a in dialog.actions_for_step(state, "goal_setting", policy)}
    assert not goal_actions["suggest_goal"].blocked
    assert goal_actions["confirm_goal"].blocked  # no goal picked yet


def test_greeting_action_requires_name_and_time(policy):
    greet = {a.key: a for a in policy.actions_for("greeting")}["greet"]
    assert greet.requires == frozenset({"name", "time_of_day"})


def test_actions_for_unknown_step(graph, policy):
    state = fresh(graph, policy)
    with pytest.raises(UnknownStep):
        dialog.actions_for_step(state, "warmup", policy)
