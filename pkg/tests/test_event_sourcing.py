"""Randomized walks over the session API: whatever interleaving of valid
operations a caller produces, replaying the resulting log must rebuild the
live state exactly, timestamps must stay monotone, and metrics from the
log must match the online values."""

import random
from datetime import datetime, timedelta, timezone

import pytest

from a2p2.errors import MissingSlot, NoTurns, SessionClosed, ValidationError
from a2p2.session import SessionService, iso_ms, metrics_from_events, replay

PROFILE = {
    "client_id": "c_walk",
    "name": "Irina",
    "linked_symptoms": [],
    "linked_goals": [],
    "linked_solutions": [],
}

CLIENT_LINES = [
    "Hi, good morning!",
    "I haven't been sleeping well lately",
    "work has been so stressful",
    "I feel so overwhelmed",
    "I kept thinking about my child having an asthma attack.",
    "Thank you, that helps.",
    "Nothing much to add.",
]

PROVIDER_LINES = [
    "Good Morning, Irina!",
    "Tell me more about that.",
    "Got it.",
    "Thank you for sharing all of this with me.",
]


@pytest.mark.parametrize("walk_seed", range(12))
def test_random_walk_replay_equivalence(runtime, walk_seed):
    rng = random.Random(walk_seed)
    service = SessionService(runtime)
    clock = datetime(2026, 1, 1, 9, 0, tzinfo=timezone.utc)
    condition = rng.choice(["control", "intervention"])
    sid = service.create_session(PROFILE, condition, seed=walk_seed, at=iso_ms(clock))
    policy = runtime.policy_for(1)
    goal_pool = list(runtime.graph.goals)

    sent_provider = False
    for _ in range(rng.randint(5, 25)):
        clock += timedelta(seconds=rng.uniform(0.5, 9.0))
        at = iso_ms(clock)
        op = rng.random()
        try:
            if op < 0.35:
                service.post_client_message(sid, rng.choice(CLIENT_LINES), at=at)
            elif op < 0.65:
                goal_ids = None
                suggestion_id = None
                if rng.random() < 0.3:
                    goal_ids = rng.sample(goal_pool, k=rng.randint(1, 2))
                if rng.random() < 0.3:
                    suggestion_id = rng.choice([r.id for r in runtime.bank.responses])
                service.post_provider_message(
                    sid, rng.choice(PROVIDER_LINES), suggestion_id=suggestion_id,
                    goal_ids=goal_ids, at=at,
                )
                sent_provider = True
            elif op < 0.8:
                service.complete_step(sid, rng.choice(policy.step_keys()), at=at)
            elif op < 0.9:
                service.present_goals(sid, at=at)
            else:
                service.get_suggestions(sid, rng.choice(policy.step_keys()))
        except (SessionClosed, MissingSlot, ValidationError):
            continue  # legal refusals; the walk carries on

    record = service.get_record(sid)
    stamps = [e["timestamp"] for e in record["events"]]
    assert stamps == sorted(stamps)

    live = service._sessions[sid]
    rebuilt = replay(record["events"], runtime)
    assert rebuilt.state == live.state
    assert rebuilt.profile == live.profile
    assert rebuilt.closed == live.closed

    def metrics_or_none(compute):
        try:
            return compute()
        except NoTurns:
            return None

    online = metrics_or_none(lambda: service.get_metrics(sid))
    offline = metrics_or_none(lambda: metrics_from_events(record["events"]))
    assert online == offline
    if not sent_provider:
        assert online is None
