import json
from datetime import datetime, timezone

import pytest
from hypothesis import given, strategies as st

from a2p2 import ckg, dialog, nlg
from a2p2.errors import MissingSlot, UnknownAction, ValidationError


@pytest.fixture(scope="module")
def templates():
    return nlg.load_shipped_templates()


@pytest.fixture(scope="module")
def policy():
    return dialog.load_shipped_policy(1)


def state_with(graph, policy, **slots):
    state = dialog.init_session(
        ckg.ClientProfile("c1", slots.pop("name", "Irina")),
        1,
        "intervention",
        datetime(2026, 1, 1, 9, 0, tzinfo=timezone.utc),
        policy,
        graph,
    )
    for key, value in slots.items():
        state = dialog.set_slot(state, key, value)
    return state


def test_greet_templates_include_canonical_greeting(templates):
    texts = [t.text for t in nlg.templates_for_action(templates, "greet")]
    assert "Good [time of day], [name]!" in texts


def test_unknown_action(templates):
    with pytest.raises(UnknownAction):
        nlg.templates_for_action(templates, "do_magic")


def test_every_action_has_at_least_one_template(templates, raw_templates, policy):
    # oracle: group the raw bank file by action
    by_action = {}
    for entry in raw_templates:
        by_action.setdefault(entry["action"], []).append(entry["id"])
    for action in {a.key for a in policy.actions}:
        assert by_action.get(action), f"action {action} has no template"
        got = [t.id for t in nlg.templates_for_action(templates, action)]
        assert got == by_action[action]  # bank file order preserved


def test_fill_greeting(graph, policy, templates):
    state = state_with(graph, policy)
    template = nlg.templates_for_action(templates, "greet")[0]
    assert nlg.fill(template, state) == "Good Morning, Irina!"


def test_fill_emotion_reflection(graph, policy, templates):
    state = state_with(graph, policy, emotion="worried")
    template = nlg.templates_for_action(templates, "reflect_emotion")[0]
    assert nlg.fill(template, state) == "Earlier you mentioned that you were worried."


def test_fill_spec_worked_example_via_symptom_slot(graph, policy):
    # the slot-template example as printed, with the value stored in the slot
    state = state_with(graph, policy, symptom="worried")
    template = nlg.ResponseTemplate("tx", "reflect_emotion", "Earlier you mentioned that you were [symptom].")
    assert nlg.fill(template, state) == "Earlier you mentioned that you were worried."


def test_fill_without_placeholders_is_identity(graph, policy):
    state = state_with(graph, policy)
    template = nlg.ResponseTemplate("tx", "affirm_plan", "Got it.")
    assert nlg.fill(template, state) == "Got it."


def test_fill_missing_slot(graph, policy, templates):
    state = state_with(graph, policy)  # no emotion yet
    template = nlg.templates_for_action(templates, "reflect_emotion")[0]
    with pytest.raises(MissingSlot) as err:
        nlg.fill(template, state)
    assert err.value.slot == "emotion"


def test_placeholder_case_and_spacing(graph, policy):
    state = state_with(graph, policy)
    template = nlg.ResponseTemplate("tx", "greet", "Good [Time Of Day], [NAME]!")
    assert nlg.fill(template, state) == "Good Morning, Irina!"


def test_unknown_placeholder_rejected_at_load():
    doc = [{"id": "t1", "action": "greet", "text": "Hello [nickname]!"}]
    with pytest.raises(ValidationError, match="unknown slot"):
        nlg.load_template_bank(json.dumps(doc))


def test_duplicate_template_id_rejected():
    doc = [
        {"id": "t1", "action": "greet", "text": "Hi"},
        {"id": "t1", "action": "greet", "text": "Hello"},
    ]
    with pytest.raises(ValidationError, match="duplicate"):
        nlg.load_template_bank(json.dumps(doc))


@given(
    name=st.text(alphabet=st.characters(whitelist_categories=("Lu", "Ll")), min_size=1, max_size=12),
    emotion=st.sampled_from(["worried", "stressed", "overwhelmed", "sad", "tired", "frustrated"]),
)
def test_fill_round_trip_rebuilds_template(graph, policy, name, emotion):
    # substituting the known slot values back out of the output reconstructs
    # the template, provided the values don't collide with the literal text
    state = state_with(graph, policy, name="PLACEHOLDER", emotion=emotion)
    state = dialog.set_slot(state, "name", f"Zz{name}q")
    template = nlg.ResponseTemplate("tx", "greet", "Hello [name], you sounded [emotion] earlier.")
    filled = nlg.fill(template, state)
    rebuilt = filled.replace(f"Zz{name}q", "[name]").replace(emotion, "[emotion]", 1)
    assert rebuilt == template.text
    # idempotency: a filled text treated as a template fills to itself
    assert nlg.fill(nlg.ResponseTemplate("ty", "greet", filled), state) == filled


def test_no_partial_fill(graph, policy):
    state = state_with(graph, policy, emotion="worried")
    template = nlg.ResponseTemplate("tx", "greet", "[name] and [goal]")
    with pytest.raises(MissingSlot):
        nlg.fill(template, state)
