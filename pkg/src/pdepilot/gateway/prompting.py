"""Prompt rendering: one template file per role, plain string substitution."""

from __future__ import annotations

import json
from pathlib import Path
from string import Template

from ..errors import TemplateError
from .types import AgentRole

_PROMPT_DIR = Path(__file__).parent / "prompts"
_cache: dict = {}


def _template(role: AgentRole) -> Template:
    if role not in _cache:
        path = _PROMPT_DIR / f"{role.value}.txt"
        try:
            _cache[role] = Template(path.read_text())
        except FileNotFoundError:
            raise TemplateError(f"no prompt template for role {role.value!r}") from None
    return _cache[role]


def render_prompt(role: AgentRole, context: dict) -> str:
    """Deterministic prompt text; dict/list context values are JSON-encoded."""
    flat = {
        k: json.dumps(v, indent=2, sort_keys=True) if isinstance(v, (dict, list)) else str(v)
        for k, v in context.items()
    }
    try:
        return _template(role).substitute(flat)
    except KeyError as exc:
        raise TemplateError(f"{role.value} template needs missing field {exc.args[0]!r}") from None
