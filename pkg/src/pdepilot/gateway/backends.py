"""Agent backends: deterministic rules, remote chat completion, replay.

All three speak the same contract: ``complete(request) -> raw text`` whose
payload is extracted by :func:`parse_agent_response`.  The deterministic
backend wraps the in-package rule implementations so the pipeline runs
fully offline; the remote backend talks to a chat-completion endpoint; the
replay backend feeds back a recorded transcript verbatim.
"""

from __future__ import annotations

import json
import os
import time
from dataclasses import dataclass

from ..errors import AuthError, MalformedResponseError, ReplayMissError, TransportError
from ..planning import SolverPlan, extract_features, generate_plans, select_top_k
from ..problem import classify_problem, parse_spec, validate_spec
from .transcripts import TranscriptStore
from .types import AgentRequest, AgentResponse, AgentRole, parse_agent_response

# Tests (and offline guarantees) hook the transport here: when set, every
# remote HTTP exchange goes through the hook instead of the network.
_transport_hook = None


def set_transport_hook(fn) -> None:
    global _transport_hook
    _transport_hook = fn


def _http_post(url: str, payload: dict, headers: dict, timeout: float) -> dict:
    if _transport_hook is not None:
        return _transport_hook(url, payload, headers)
    import requests

    try:
        resp = requests.post(url, json=payload, headers=headers, timeout=timeout)
    except requests.RequestException as exc:
        raise TransportError(f"agent endpoint unreachable: {exc}") from None
    if resp.status_code in (401, 403):
        raise AuthError(f"agent endpoint rejected credentials (HTTP {resp.status_code})")
    if resp.status_code >= 400:
        raise TransportError(f"agent endpoint returned HTTP {resp.status_code}")
    try:
        return resp.json()
    except ValueError as exc:
        raise TransportError(f"agent endpoint returned non-JSON body: {exc}") from None


def _fenced(lang: str, body: str) -> str:
    if not body.endswith("\n"):
        body += "\n"
    return f"```{lang}\n{body}```"


def emit_program(plan_desc: dict) -> str:
    """Source text for a candidate: a thin shell around the solver runtime."""
    method = plan_desc["method"]
    variant = plan_desc.get("variant", "")
    integrator = plan_desc.get("integrator", "")
    return (
        f"# candidate solver: {plan_desc.get('plan_id', method)}\n"
        "from pdepilot import runtime\n"
        "\n"
        "raise SystemExit(runtime.main(\n"
        f"    method={method!r},\n"
        f"    variant={variant!r},\n"
        f"    integrator={integrator!r},\n"
        "))\n"
    )


class DeterministicBackend:
    """Rule-based agent: no network, no randomness, same reply every time."""

    name = "deterministic"

    def complete(self, request: AgentRequest) -> str:
        role, ctx = request.role, request.attachments
        if role == AgentRole.FORMULATOR:
            spec = parse_spec(ctx["spec"])
            klass = classify_problem(spec)
            findings = [f"{f.severity}: {f.message}" for f in validate_spec(spec)]
            body = {
                "classification": {
                    "dim": klass.dim,
                    "type_class": klass.type_class.value,
                    "linearity": klass.linearity.value,
                    "stiffness": klass.stiffness.value,
                    "bc_kind": klass.bc_kind.value,
                    "shock_risk": klass.shock_risk,
                    "steady": klass.steady,
                    "n_fields": klass.n_fields,
                },
                "findings": findings,
            }
            return _fenced("json", json.dumps(body, indent=2, sort_keys=True))
        if role == AgentRole.PLANNER:
            spec = parse_spec(ctx["spec"])
            plans = generate_plans(spec, int(ctx.get("n_candidates", 10)))
            return _fenced("json", json.dumps([p.describe() for p in plans], indent=2))
        if role == AgentRole.FEATURE:
            spec = parse_spec(ctx["spec"])
            plans = [SolverPlan.from_description(d) for d in ctx["plans"]]
            rows = [extract_features(spec, p).describe() for p in plans]
            return _fenced("json", json.dumps(rows, indent=2))
        if role == AgentRole.SELECTOR:
            spec = parse_spec(ctx["spec"])
            plans = [SolverPlan.from_description(d) for d in ctx["plans"]]
            slate = select_top_k(spec, plans, int(ctx.get("top_k", 5)))
            body = {
                "scored": [p.describe() for p in slate.scored],
                "selected": [p.plan_id for p in slate.selected],
                "rejected": [[p.plan_id, why] for p, why in slate.rejected],
            }
            return _fenced("json", json.dumps(body, indent=2))
        if role == AgentRole.CODER:
            return _fenced("python", emit_program(ctx["plan"]))
        if role == AgentRole.CRITIC:
            # rule backend has no bug-fixing smarts: hand the source back
            return _fenced("python", ctx["code"])
        if role == AgentRole.REASONER:
            lines = []
            for o in ctx.get("outcomes", []):
                err = o.get("error")
                shown = f"{err:.3e}" if isinstance(err, float) else "n/a"
                lines.append(
                    f"{o['plan_id']}: error {shown}, "
                    f"{o.get('wall_time', 0.0):.1f}s, verified={o.get('verified')}"
                )
            winner = ctx.get("chosen")
            if winner:
                lines.append(f"Adopt {winner}: best verified error at acceptable cost.")
            return "\n".join(lines) or "No outcomes to reason over."
        raise MalformedResponseError(f"deterministic backend has no rule for {role}")


@dataclass
class RemoteBackend:
    """Chat-completion endpoint, configured from the environment."""

    base_url: str = ""
    model: str = ""
    api_key: str = ""
    timeout: float = 120.0
    name = "remote"

    @classmethod
    def from_env(cls) -> "RemoteBackend":
        base = os.environ.get("AGENT_BASE_URL", "")
        model = os.environ.get("AGENT_MODEL", "")
        key = os.environ.get("AGENT_API_KEY", "")
        if not base or not model:
            raise AuthError("remote backend needs AGENT_BASE_URL and AGENT_MODEL set")
        return cls(base_url=base, model=model, api_key=key)

    def complete(self, request: AgentRequest) -> str:
        if not self.base_url or not self.model:
            raise AuthError("remote backend is not configured")
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        data = _http_post(
            self.base_url.rstrip("/") + "/chat/completions",
            {
                "model": self.model,
                "messages": [{"role": "user", "content": request.prompt}],
                "temperature": 0,
            },
            headers,
            self.timeout,
        )
        try:
            return data["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError):
            raise MalformedResponseError("endpoint reply lacks choices[0].message.content") from None


class ReplayBackend:
    """Feeds back a recorded transcript in order; any drift is a miss."""

    name = "replay"

    def __init__(self, store: TranscriptStore):
        self.entries = store.entries()
        self.cursor = 0

    def complete(self, request: AgentRequest) -> str:
        # next recorded entry of the requested role; steps for stages the
        # replaying pipeline does not re-drive (coder/critic) are skipped
        for i in range(self.cursor, len(self.entries)):
            if self.entries[i].role == request.role:
                self.cursor = i + 1
                return self.entries[i].response_text
        if self.cursor < len(self.entries):
            entry = self.entries[self.cursor]
            raise ReplayMissError(
                f"step {entry.step} was recorded for {entry.role.value}, "
                f"pipeline asked for {request.role.value} and no later step has it"
            )
        raise ReplayMissError(
            f"transcript exhausted at step {self.cursor + 1} ({request.role.value})"
        )


def invoke_agent(
    request: AgentRequest,
    backend,
    *,
    store: TranscriptStore | None = None,
    retries: int = 2,
) -> AgentResponse:
    """Complete, parse, persist; malformed replies retry up to the codegen limit."""
    last: MalformedResponseError | None = None
    for attempt in range(1, max(1, retries) + 1):
        t0 = time.perf_counter()
        raw = backend.complete(request)
        latency = time.perf_counter() - t0
        try:
            payload = parse_agent_response(request.role, raw)
        except MalformedResponseError as exc:
            last = exc
            if store is not None:
                store.record(request, AgentResponse(request.role, raw, None), attempt)
            continue
        response = AgentResponse(request.role, raw, payload, latency=latency)
        if store is not None:
            store.record(request, response, attempt)
        return response
    raise last if last is not None else MalformedResponseError("agent produced nothing")
