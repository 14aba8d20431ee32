"""Template retrieval and slot filling.

Placeholders use square brackets exactly as they appear in the provider
interface, e.g. "Good [time of day], [name]!". A placeholder is resolved
case-insensitively and interior spaces map to underscores, so
"[time of day]" reads the time_of_day slot.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from importlib import resources as importlib_resources

from .dialog import SLOT_KEYS, ConversationState
from .errors import MissingSlot, ParseError, UnknownAction, ValidationError

_PLACEHOLDER = re.compile(r"\[([^\[\]]+)\]")


@dataclass(frozen=True)
class ResponseTemplate:
    id: str
    action: str
    text: str

    def slot_keys(self) -> tuple[str, ...]:
        return tuple(_slot_key(m.group(1)) for m in _PLACEHOLDER.finditer(self.text))


def _slot_key(raw: str) -> str:
    return raw.strip().lower().replace(" ", "_")


@dataclass(frozen=True)
class TemplateBank:
    templates: tuple[ResponseTemplate, ...]

    def actions(self) -> tuple[str, ...]:
        seen = []
        for t in self.templates:
            if t.action not in seen:
                seen.append(t.action)
        return tuple(seen)


def load_template_bank(document: bytes | str) -> TemplateBank:
    try:
        raw = json.loads(document)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise ParseError(f"template bank is not valid JSON: {exc}") from exc
    templates = []
    seen_ids = set()
    for entry in raw:
        template = ResponseTemplate(entry["id"], entry["action"], entry["text"])
        if template.id in seen_ids:
            raise ValidationError(f"duplicate template id: {template.id}")
        seen_ids.add(template.id)
        for key in template.slot_keys():
            if key not in SLOT_KEYS:
                raise ValidationError(f"template {template.id} references unknown slot [{key}]")
        templates.append(template)
    return TemplateBank(tuple(templates))


def load_shipped_templates() -> TemplateBank:
    return load_template_bank(importlib_resources.files("a2p2.data").joinpath("templates.json").read_bytes())


def templates_for_action(bank: TemplateBank, action: str) -> list[ResponseTemplate]:
    """All templates for the action, in bank file order."""
    matches = [t for t in bank.templates if t.action == action]
    if not matches:
        raise UnknownAction(f"unknown action: {action}")
    return matches


def fill(template: ResponseTemplate, state: ConversationState) -> str:
    """Replace every [slot] placeholder; raises MissingSlot on the first empty one."""

    def substitute(match: re.Match) -> str:
        key = _slot_key(match.group(1))
        value = state.slots.get(key)
        if not value:
            raise MissingSlot(key)
        return value

    return _PLACEHOLDER.sub(substitute, template.text)
