"""Uniform agent interface: deterministic rules, remote endpoint, replay."""

from .backends import (
    DeterministicBackend,
    RemoteBackend,
    ReplayBackend,
    emit_program,
    invoke_agent,
    set_transport_hook,
)
from .prompting import render_prompt
from .transcripts import TranscriptStore
from .types import AgentRequest, AgentResponse, AgentRole, parse_agent_response

__all__ = [
    "AgentRequest",
    "AgentResponse",
    "AgentRole",
    "DeterministicBackend",
    "RemoteBackend",
    "ReplayBackend",
    "TranscriptStore",
    "emit_program",
    "invoke_agent",
    "parse_agent_response",
    "render_prompt",
    "set_transport_hook",
]
