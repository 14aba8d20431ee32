"""Clinical knowledge graph: symptoms, goals, solutions, resources.

The graph is loaded once from a JSON document, validated, and then treated
as immutable. Recommendations are plain set scans ordered by id so that
repeated calls always return the same sequence.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from importlib import resources as importlib_resources
from .errors import KindMismatch, ParseError, UnknownNode, ValidationError

LINK_KINDS = ("symptom", "goal", "solution")


@dataclass(frozen=True)
class Symptom:
    id: str
    name: str
    lexicon: tuple[str, ...]


@dataclass(frozen=True)
class Goal:
    id: str
    text: str
    addresses: frozenset[str]


@dataclass(frozen=True)
class Solution:
    id: str
    text: str
    helps_with: frozenset[str]
    resource: str


@dataclass(frozen=True)
class Resource:
    id: str
    title: str
    uri: str


@dataclass(frozen=True)
class ClientProfile:
    """A client's identity plus their linkage history into the graph.

    Each linked list holds (node_id, iso_timestamp) pairs ordered by link
    time. Re-linking a node moves it to the end with the new timestamp.
    """

    client_id: str
    name: str
    linked_symptoms: tuple[tuple[str, str], ...] = ()
    linked_goals: tuple[tuple[str, str], ...] = ()
    linked_solutions: tuple[tuple[str, str], ...] = ()

    def latest(self, kind: str) -> str | None:
        entries = getattr(self, f"linked_{kind}s")
        return entries[-1][0] if entries else None


@dataclass
class ClinicalGraph:
    symptoms: dict[str, Symptom]
    goals: dict[str, Goal]
    solutions: dict[str, Solution]
    resources: dict[str, Resource]
    _exclusive: dict[str, tuple[str, ...]] = field(init=False, repr=False)

    def __post_init__(self):
        by_symptom: dict[str, list[str]] = {s: [] for s in self.symptoms}
        for goal in self.goals.values():
            if len(goal.addresses) == 1:
                (symptom,) = goal.addresses
                by_symptom[symptom].append(goal.id)
        self._exclusive = {s: tuple(sorted(g)) for s, g in by_symptom.items()}

    def stats(self) -> dict[str, int]:
        return {
            "symptoms": len(self.symptoms),
            "goals": len(self.goals),
            "solutions": len(self.solutions),
            "resources": len(self.resources),
            "symptom_goal_edges": sum(len(g.addresses) for g in self.goals.values()),
            "goal_solution_edges": sum(len(s.helps_with) for s in self.solutions.values()),
            "resources_per_solution": 1,
        }

    def kind_of(self, node_id: str) -> str | None:
        if node_id in self.symptoms:
            return "symptom"
        if node_id in self.goals:
            return "goal"
        if node_id in self.solutions:
            return "solution"
        if node_id in self.resources:
            return "resource"
        return None

    def exclusive_goals(self, symptom_id: str) -> tuple[str, ...]:
        """Goal ids whose addresses are exactly {symptom_id}."""
        if symptom_id not in self.symptoms:
            raise UnknownNode(f"unknown symptom: {symptom_id}")
        return self._exclusive[symptom_id]

    def symptom_by_name(self, name: str) -> Symptom | None:
        folded = name.strip().casefold()
        for symptom in self.symptoms.values():
            if symptom.name.casefold() == folded:
                return symptom
        return None


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise ValidationError(message)


def load_graph(document: bytes | str) -> ClinicalGraph:
    """Parse and validate a graph document; raises on the first violation."""
    try:
        raw = json.loads(document)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise ParseError(f"graph document is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ParseError("graph document must be a JSON object")
    for section in ("symptoms", "goals", "solutions", "resources"):
        if not isinstance(raw.get(section), list):
            raise ParseError(f"graph document missing list section: {section}")

    symptoms: dict[str, Symptom] = {}
    for entry in raw["symptoms"]:
        node = Symptom(entry["id"], entry["name"], tuple(entry["lexicon"]))
        _require(node.id not in symptoms, f"duplicate symptom id: {node.id}")
        _require(bool(node.name), f"symptom {node.id} has empty name")
        _require(bool(node.lexicon), f"symptom {node.id} has empty lexicon")
        symptoms[node.id] = node

    resources: dict[str, Resource] = {}
    for entry in raw["resources"]:
        node = Resource(entry["id"], entry["title"], entry.get("uri", ""))
        _require(node.id not in resources, f"duplicate resource id: {node.id}")
        _require(bool(node.title), f"resource {node.id} has empty title")
        resources[node.id] = node

    goals: dict[str, Goal] = {}
    for entry in raw["goals"]:
        node = Goal(entry["id"], entry["text"], frozenset(entry["addresses"]))
        _require(node.id not in goals, f"duplicate goal id: {node.id}")
        _require(bool(node.addresses), f"goal {node.id} addresses no symptoms")
        for symptom_id in node.addresses:
            _require(
                symptom_id in symptoms,
                f"dangling edge: goal {node.id} addresses unknown symptom {symptom_id}",
            )
        goals[node.id] = node

    solutions: dict[str, Solution] = {}
    for entry in raw["solutions"]:
        resource_ref = entry.get("resource")
        _require(
            isinstance(resource_ref, str) and bool(resource_ref),
            f"solution {entry['id']} must have exactly one resource",
        )
        node = Solution(entry["id"], entry["text"], frozenset(entry["helps_with"]), resource_ref)
        _require(node.id not in solutions, f"duplicate solution id: {node.id}")
        _require(bool(node.helps_with), f"solution {node.id} helps with no goals")
        for goal_id in node.helps_with:
            _require(
                goal_id in goals,
                f"dangling edge: solution {node.id} helps unknown goal {goal_id}",
            )
        _require(
            node.resource in resources,
            f"dangling edge: solution {node.id} references unknown resource {node.resource}",
        )
        solutions[node.id] = node

    _require(bool(symptoms), "graph must be nonempty: no symptoms")
    _require(bool(goals), "graph must be nonempty: no goals")
    _require(bool(solutions), "graph must be nonempty: no solutions")
    return ClinicalGraph(symptoms, goals, solutions, resources)


def load_shipped_graph() -> ClinicalGraph:
    data = importlib_resources.files("a2p2.data").joinpath("ckg.json").read_bytes()
    return load_graph(data)


def recommend_goals(graph: ClinicalGraph, symptom_id: str) -> list[Goal]:
    """Every goal addressing the symptom, ordered by id."""
    if symptom_id not in graph.symptoms:
        raise UnknownNode(f"unknown symptom: {symptom_id}")
    matches = [g for g in graph.goals.values() if symptom_id in g.addresses]
    return sorted(matches, key=lambda g: g.id)


def recommend_solutions(graph: ClinicalGraph, goal_id: str) -> list[tuple[Solution, Resource]]:
    """Every solution helping the goal, each with its single resource, ordered by id."""
    if goal_id not in graph.goals:
        raise UnknownNode(f"unknown goal: {goal_id}")
    matches = [s for s in graph.solutions.values() if goal_id in s.helps_with]
    matches.sort(key=lambda s: s.id)
    return [(s, graph.resources[s.resource]) for s in matches]


def link_client(
    profile: ClientProfile, graph: ClinicalGraph, node_id: str, kind: str, at: str
) -> ClientProfile:
    """Link a node into the profile history; idempotent per (node, kind)."""
    if kind not in LINK_KINDS:
        raise KindMismatch(f"unknown link kind: {kind}")
    actual = graph.kind_of(node_id)
    if actual is None:
        raise UnknownNode(f"unknown node: {node_id}")
    if actual != kind:
        raise KindMismatch(f"node {node_id} is a {actual}, not a {kind}")
    attr = f"linked_{kind}s"
    entries = [e for e in getattr(profile, attr) if e[0] != node_id]
    entries.append((node_id, at))
    return replace(profile, **{attr: tuple(entries)})


def profile_to_dict(profile: ClientProfile) -> dict:
    return {
        "client_id": profile.client_id,
        "name": profile.name,
        "linked_symptoms": [list(e) for e in profile.linked_symptoms],
        "linked_goals": [list(e) for e in profile.linked_goals],
        "linked_solutions": [list(e) for e in profile.linked_solutions],
    }


def profile_from_dict(raw: dict) -> ClientProfile:
    def pairs(key: str) -> tuple[tuple[str, str], ...]:
        return tuple((str(a), str(b)) for a, b in raw.get(key, []))

    return ClientProfile(
        client_id=raw["client_id"],
        name=raw["name"],
        linked_symptoms=pairs("linked_symptoms"),
        linked_goals=pairs("linked_goals"),
        linked_solutions=pairs("linked_solutions"),
    )
