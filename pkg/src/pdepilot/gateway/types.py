"""Request/response plumbing shared by every agent backend."""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from enum import Enum

from ..errors import MalformedResponseError
from ..planning import SolverPlan


class AgentRole(str, Enum):
    FORMULATOR = "formulator"
    PLANNER = "planner"
    FEATURE = "feature"
    SELECTOR = "selector"
    CODER = "coder"
    CRITIC = "critic"
    REASONER = "reasoner"


@dataclass(frozen=True)
class AgentRequest:
    role: AgentRole
    prompt: str
    attachments: dict = field(default_factory=dict)


@dataclass(frozen=True)
class AgentResponse:
    role: AgentRole
    text: str
    payload: object
    tokens: dict | None = None
    latency: float = 0.0


_FENCE = re.compile(r"```[ \t]*(\w*)[ \t]*\n(.*?)```", re.DOTALL)

_CODE_ROLES = (AgentRole.CODER, AgentRole.CRITIC)
_PLAN_LIST_ROLES = (AgentRole.PLANNER,)
_JSON_ROLES = (AgentRole.FORMULATOR, AgentRole.FEATURE, AgentRole.SELECTOR)


def extract_blocks(raw: str) -> list[tuple[str, str]]:
    return [(lang.lower(), body) for lang, body in _FENCE.findall(raw)]


def _single_block(raw: str, role: AgentRole) -> str:
    blocks = extract_blocks(raw)
    if len(blocks) != 1:
        raise MalformedResponseError(
            f"{role.value} reply must carry exactly one fenced block, found {len(blocks)}"
        )
    return blocks[0][1]


def _json_payload(raw: str, role: AgentRole):
    blocks = [b for lang, b in extract_blocks(raw) if lang in ("", "json")]
    text = blocks[0] if len(blocks) == 1 else raw
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise MalformedResponseError(f"{role.value} reply is not parseable JSON: {exc}") from None


def parse_agent_response(role: AgentRole, raw: str):
    """Extract the structured payload a role is contracted to return."""
    if not raw or not raw.strip():
        raise MalformedResponseError(f"empty {role.value} reply")
    if role in _CODE_ROLES:
        source = _single_block(raw, role)
        if not source.strip():
            raise MalformedResponseError(f"{role.value} reply carries an empty code block")
        return source
    if role in _PLAN_LIST_ROLES:
        data = _json_payload(raw, role)
        if not isinstance(data, list) or not data:
            raise MalformedResponseError("planner reply must be a non-empty JSON list")
        try:
            return [SolverPlan.from_description(d) for d in data]
        except (KeyError, ValueError, TypeError) as exc:
            raise MalformedResponseError(f"bad plan entry: {exc}") from None
    if role in _JSON_ROLES:
        return _json_payload(raw, role)
    return raw.strip()  # reasoner: prose
