"""Statistics over collected transcripts: timing, accuracy, usability.

Everything here is exact or seeded. The permutation test enumerates sign
flips outright (the study sizes make that cheap), the 2x3 Fisher test
enumerates margin-preserving tables with rational arithmetic, and the
Monte Carlo fallback draws from the platform's own deterministic PRNG.
Differences are taken control minus intervention throughout, so positive
values mean the intervention helped.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from pathlib import Path
from statistics import mean, stdev

from . import patientsim, prng
from .errors import (
    BadItemCount,
    DegenerateTable,
    DomainError,
    EmptySample,
    NoData,
    OutOfRange,
    ZeroVariance,
)

EXACT_LIMIT = 20  # 2^20 sign patterns; beyond this use monte_carlo
_BOUNDARY_EPS = 1e-12

STREAM_STATS = 0x53


def percent_reduction(control_mean: float, intervention_mean: float) -> float:
    """100 * (control - intervention) / control, reported to 2 decimals."""
    if control_mean <= 0:
        raise DomainError(f"control mean must be positive, got {control_mean}")
    return round(100.0 * (control_mean - intervention_mean) / control_mean, 2)


@dataclass(frozen=True)
class PairedSample:
    """Per-participant (intervention, control) value pairs."""

    pairs: tuple[tuple[float, float], ...]

    def __post_init__(self):
        for i, c in self.pairs:
            if not (math.isfinite(i) and math.isfinite(c)):
                raise DomainError("sample values must be finite")

    def diffs(self) -> list[float]:
        return [c - i for i, c in self.pairs]

    def __len__(self) -> int:
        return len(self.pairs)


def paired_permutation_test(
    sample: PairedSample,
    mode: str = "exact",
    n_resamples: int = 10000,
    seed: int = 0,
) -> float:
    """Two-sided sign-flip permutation p-value for the mean difference."""
    if len(sample) == 0:
        raise EmptySample("need at least one pair")
    diffs = sample.diffs()
    n = len(diffs)
    observed = abs(sum(diffs))

    if mode == "exact":
        if n > EXACT_LIMIT:
            raise DomainError(f"exact mode enumerates 2^n flips; n={n} exceeds {EXACT_LIMIT}")
        hits = 0
        for signs in range(1 << n):
            total = 0.0
            for j in range(n):
                total += diffs[j] if signs >> j & 1 else -diffs[j]
            if abs(total) >= observed - _BOUNDARY_EPS:
                hits += 1
        return hits / (1 << n)

    if mode == "monte_carlo":
        rng = prng.stream(seed, STREAM_STATS)
        hits = 0
        for _ in range(n_resamples):
            total = 0.0
            bits = rng.next_u64()
            for j in range(n):
                if j % 64 == 0 and j > 0:
                    bits = rng.next_u64()
                total += diffs[j] if bits >> (j % 64) & 1 else -diffs[j]
            if abs(total) >= observed - _BOUNDARY_EPS:
                hits += 1
        return (hits + 1) / (n_resamples + 1)

    raise DomainError(f"unknown mode: {mode}")


def unpaired_permutation_test(
    group_a: list[float],
    group_b: list[float],
    mode: str = "exact",
    n_resamples: int = 10000,
    seed: int = 0,
) -> float:
    """Two-sided label-shuffle permutation p-value for a mean difference
    between independent groups (used for expert vs non-expert contrasts)."""
    if not group_a or not group_b:
        raise EmptySample("both groups need at least one value")
    values = list(group_a) + list(group_b)
    n_a = len(group_a)
    n = len(values)
    total_sum = sum(values)

    def stat_from_sum_a(sum_a: float) -> float:
        mean_a = sum_a / n_a
        mean_b = (total_sum - sum_a) / (n - n_a)
        return abs(mean_a - mean_b)

    observed = stat_from_sum_a(sum(group_a))

    if mode == "exact":
        if n > EXACT_LIMIT:
            raise DomainError(f"exact mode infeasible for n={n} > {EXACT_LIMIT}")
        hits = 0
        count = 0
        for indexes in combinations(range(n), n_a):
            count += 1
            if stat_from_sum_a(sum(values[i] for i in indexes)) >= observed - _BOUNDARY_EPS:
                hits += 1
        return hits / count

    if mode == "monte_carlo":
        rng = prng.stream(seed, STREAM_STATS)
        hits = 0
        for _ in range(n_resamples):
            pool = prng.fisher_yates(values, rng)
            if stat_from_sum_a(sum(pool[:n_a])) >= observed - _BOUNDARY_EPS:
                hits += 1
        return (hits + 1) / (n_resamples + 1)

    raise DomainError(f"unknown mode: {mode}")


@dataclass(frozen=True)
class ContingencyTable2x3:
    """Rows: control, intervention. Columns: zero, one, two correct."""

    control: tuple[int, int, int]
    intervention: tuple[int, int, int]

    def rows(self) -> list[list[int]]:
        return [list(self.control), list(self.intervention)]

    def __post_init__(self):
        for row in (self.control, self.intervention):
            for cell in row:
                if cell < 0 or int(cell) != cell:
                    raise DomainError(f"cells must be non-negative integers, got {cell}")


def fisher_exact_2x3(table: ContingencyTable2x3) -> float:
    return fisher_enumeration(table)["p_value"]


def fisher_enumeration(table: ContingencyTable2x3) -> dict:
    """Freeman-Halton exact test: enumerate every table with the observed
    margins and sum the probabilities of those no more probable than it.

    Probabilities are exact rationals, so the result is bit-stable and the
    enumeration total is exactly 1.
    """
    rows = [sum(table.control), sum(table.intervention)]
    cols = [c + i for c, i in zip(table.control, table.intervention)]
    if 0 in rows or 0 in cols:
        raise DegenerateTable(f"zero margin in table rows={rows} cols={cols}")
    grand = sum(rows)

    margin_product = Fraction(
        math.prod(math.factorial(r) for r in rows) * math.prod(math.factorial(c) for c in cols),
        math.factorial(grand),
    )

    def prob(first_row: tuple[int, int, int]) -> Fraction:
        second_row = tuple(cols[j] - first_row[j] for j in range(3))
        denom = math.prod(math.factorial(x) for x in first_row + second_row)
        return margin_product / denom

    observed = prob(table.control)
    total = Fraction(0)
    p = Fraction(0)
    n_tables = 0
    for a0 in range(min(rows[0], cols[0]) + 1):
        for a1 in range(min(rows[0] - a0, cols[1]) + 1):
            a2 = rows[0] - a0 - a1
            if a2 > cols[2]:
                continue
            candidate = prob((a0, a1, a2))
            total += candidate
            n_tables += 1
            if candidate <= observed:
                p += candidate
    return {
        "p_value": float(p),
        "total_probability": float(total),
        "tables_enumerated": n_tables,
    }


def cohens_d(sample: PairedSample, variant: str = "dz") -> float:
    """Effect size; dz over paired differences, pooled over the two columns."""
    if len(sample) < 2:
        raise EmptySample("need at least two pairs")
    if variant == "dz":
        diffs = sample.diffs()
        sd = stdev(diffs)
        if sd == 0:
            raise ZeroVariance("paired differences have zero dispersion")
        return mean(diffs) / sd
    if variant == "pooled":
        interventions = [i for i, _ in sample.pairs]
        controls = [c for _, c in sample.pairs]
        s_i, s_c = stdev(interventions), stdev(controls)
        n_i, n_c = len(interventions), len(controls)
        pooled = math.sqrt(((n_i - 1) * s_i**2 + (n_c - 1) * s_c**2) / (n_i + n_c - 2))
        if pooled == 0:
            raise ZeroVariance("pooled dispersion is zero")
        return (mean(controls) - mean(interventions)) / pooled
    raise DomainError(f"unknown variant: {variant}")


def sus_score(responses: list[float]) -> float:
    """Standard 0..100 usability score from ten 1..5 items."""
    if len(responses) != 10:
        raise BadItemCount(f"need exactly 10 items, got {len(responses)}")
    for score in responses:
        if not 1 <= score <= 5:
            raise OutOfRange(f"item score {score} outside 1..5")
    odd = sum(responses[i] - 1 for i in range(0, 10, 2))
    even = sum(5 - responses[i] for i in range(1, 10, 2))
    return (odd + even) * 2.5


# -- transcript aggregation ---------------------------------------------------


def _scenario_view(meta: dict) -> patientsim.Scenario:
    """Reconstruct enough of a scenario from transcript metadata to score it."""
    open_indexes = meta["open_ended_turns"]
    golds = dict(zip(open_indexes, meta["empathic_golds"]))
    turns = tuple(
        patientsim.ScenarioTurn(
            client_text="",
            kind="open_ended" if i in golds else "scripted",
            empathic_gold=golds.get(i),
        )
        for i in range(meta["turn_count"])
    )
    return patientsim.Scenario(
        id=meta["id"],
        client={},
        symptom_gold=meta["symptom_gold"],
        goal_gold=tuple(meta["goal_gold"]),
        turns=turns,
    )


def load_transcripts(transcript_dir: str | Path) -> list[dict]:
    directory = Path(transcript_dir)
    if not directory.is_dir():
        raise NoData(f"not a directory: {transcript_dir}")
    transcripts = []
    for path in sorted(directory.glob("*.json")):
        if path.name == "groups.json":
            continue
        raw = json.loads(path.read_text())
        if "events" in raw and "scenario" in raw:
            transcripts.append(raw)
    if not transcripts:
        raise NoData(f"no transcripts found under {transcript_dir}")
    return transcripts


def summarize(transcript_dir: str | Path, groups: dict[str, str] | None = None, seed: int = 0) -> dict:
    """Full evaluation report over a directory of paired transcripts."""
    transcripts = load_transcripts(transcript_dir)

    by_participant: dict[str, dict[str, dict]] = {}
    for transcript in transcripts:
        participant = transcript.get("participant") or "anonymous"
        by_participant.setdefault(participant, {})[transcript["condition"]] = transcript

    participants = []
    for participant, conditions in sorted(by_participant.items()):
        if {"control", "intervention"} - set(conditions):
            continue  # unpaired participant: nothing to compare
        row: dict = {"participant": participant, "group": (groups or {}).get(participant, "unlabeled")}
        for condition, transcript in conditions.items():
            meta = dict(transcript["scenario"])
            meta.setdefault("turn_count", _turn_count_from_events(transcript["events"]))
            report = patientsim.score(transcript, _scenario_view(meta))
            row[condition] = {
                "avg_rt": round(mean(report.per_turn_rt), 3) if report.per_turn_rt else None,
                "empathy_rt": round(mean(report.empathy_turn_rt), 3) if report.empathy_turn_rt else None,
                "empathic_correct": report.empathic_correct,
                "goal_correct": report.goal_correct,
                "symptom_identified": report.symptom_identified,
            }
        participants.append(row)

    if not participants:
        raise NoData("no participant has both a control and an intervention transcript")

    report = {
        "n_participants": len(participants),
        "participants": participants,
        "groups": {},
        "notes": [],
    }
    group_names = sorted({row["group"] for row in participants})
    subsets = {"all": participants}
    for name in group_names:
        members = [row for row in participants if row["group"] == name]
        if members:
            subsets[name] = members
    for name, members in subsets.items():
        report["groups"][name] = _group_summary(members, seed)
    contrast = _group_contrast(participants, seed)
    if contrast is not None:
        report["group_contrast"] = contrast
    if len(participants) == 1:
        report["notes"].append("single participant: permutation test has no resolution at n=1")
    return report


def _relative_reduction(row: dict) -> float | None:
    control = row["control"]["avg_rt"]
    intervention = row["intervention"]["avg_rt"]
    if not control:
        return None
    return (control - intervention) / control


def _group_contrast(participants: list[dict], seed: int) -> dict | None:
    """Expert vs non-expert difference in per-participant relative RT
    reduction, tested with the label-shuffle permutation."""
    expert = [r for r in (_relative_reduction(m) for m in participants if m["group"] == "expert") if r is not None]
    non_expert = [
        r for r in (_relative_reduction(m) for m in participants if m["group"] == "non_expert") if r is not None
    ]
    if not expert or not non_expert:
        return None
    n = len(expert) + len(non_expert)
    mode = "exact" if n <= EXACT_LIMIT else "monte_carlo"
    return {
        "metric": "relative_rt_reduction",
        "expert_mean": round(mean(expert), 4),
        "non_expert_mean": round(mean(non_expert), 4),
        "permutation_p": round(unpaired_permutation_test(expert, non_expert, mode=mode, seed=seed), 3),
    }


def _turn_count_from_events(events: list[dict]) -> int:
    return sum(1 for e in events if e["kind"] == "message" and e["actor"] == "client")


def _group_summary(members: list[dict], seed: int) -> dict:
    rt_pairs = PairedSample(
        tuple((m["intervention"]["avg_rt"], m["control"]["avg_rt"]) for m in members)
    )
    empathy_rt_pairs = PairedSample(
        tuple((m["intervention"]["empathy_rt"], m["control"]["empathy_rt"]) for m in members)
    )
    n = len(members)
    mode = "exact" if n <= EXACT_LIMIT else "monte_carlo"

    def safe_p(sample: PairedSample) -> float | None:
        try:
            return round(paired_permutation_test(sample, mode=mode, seed=seed), 3)
        except (EmptySample, DomainError):
            return None

    def safe_d(sample: PairedSample) -> float | None:
        try:
            return round(cohens_d(sample, "dz"), 3)
        except (EmptySample, ZeroVariance):
            return None

    contingency = ContingencyTable2x3(
        control=_accuracy_histogram(members, "control"),
        intervention=_accuracy_histogram(members, "intervention"),
    )
    try:
        fisher_p = round(fisher_exact_2x3(contingency), 6)
    except DegenerateTable:
        fisher_p = None

    goal_acc = {
        condition: round(mean(m[condition]["goal_correct"] for m in members) / 2.0, 4)
        for condition in ("control", "intervention")
    }
    goal_block = {
        "accuracy": goal_acc,
        "absolute_increase_points": round(100 * (goal_acc["intervention"] - goal_acc["control"]), 2),
        "relative_increase_vs_control_pct": (
            round(100 * (goal_acc["intervention"] - goal_acc["control"]) / goal_acc["control"], 2)
            if goal_acc["control"] > 0
            else None
        ),
    }

    control_rt = mean(m["control"]["avg_rt"] for m in members)
    intervention_rt = mean(m["intervention"]["avg_rt"] for m in members)
    control_emp_rt = mean(m["control"]["empathy_rt"] for m in members)
    intervention_emp_rt = mean(m["intervention"]["empathy_rt"] for m in members)

    return {
        "n": n,
        "response_time": {
            "control_mean": round(control_rt, 3),
            "intervention_mean": round(intervention_rt, 3),
            "reduction_pct": percent_reduction(control_rt, intervention_rt),
            "permutation_p": safe_p(rt_pairs),
            "cohens_dz": safe_d(rt_pairs),
        },
        "empathy_response_time": {
            "control_mean": round(control_emp_rt, 3),
            "intervention_mean": round(intervention_emp_rt, 3),
            "reduction_pct": percent_reduction(control_emp_rt, intervention_emp_rt),
            "permutation_p": safe_p(empathy_rt_pairs),
            "cohens_dz": safe_d(empathy_rt_pairs),
        },
        "empathy_accuracy": {
            "contingency": {
                "control": list(contingency.control),
                "intervention": list(contingency.intervention),
                "columns": ["zero_correct", "one_correct", "two_correct"],
            },
            "fisher_exact_p": fisher_p,
        },
        "goal_selection": goal_block,
        "symptom_identification": {
            condition: round(
                mean(1.0 if m[condition]["symptom_identified"] else 0.0 for m in members), 4
            )
            for condition in ("control", "intervention")
        },
    }


def _accuracy_histogram(members: list[dict], condition: str) -> tuple[int, int, int]:
    counts = [0, 0, 0]
    for m in members:
        counts[m[condition]["empathic_correct"]] += 1
    return tuple(counts)  # type: ignore[return-value]
