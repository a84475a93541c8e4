"""Prompt rendering, payload parsing, and the three agent backends."""

import json

import pytest

from pdepilot.errors import (
    AuthError,
    MalformedResponseError,
    ReplayMissError,
    TemplateError,
    TransportError,
)
from pdepilot.gateway import (
    AgentRequest,
    AgentRole,
    DeterministicBackend,
    RemoteBackend,
    ReplayBackend,
    TranscriptStore,
    emit_program,
    invoke_agent,
    parse_agent_response,
    render_prompt,
    set_transport_hook,
)
from pdepilot.planning import SolverPlan
from pdepilot.problem import parse_spec, serialize_spec


@pytest.fixture(autouse=True)
def _no_network():
    def refuse(url, payload, headers):
        raise AssertionError(f"network call attempted: {url}")

    set_transport_hook(refuse)
    yield
    set_transport_hook(None)


def advection_doc():
    return {
        "name": "advection2d",
        "domain": {"dim": 2, "bounds": [[0.0, 1.0], [0.0, 1.0]], "time_horizon": 1.0},
        "pde": {"unknowns": ["u"],
                "terms": [{"coeff": "1", "derivs": ["t"]},
                          {"coeff": "0.3", "derivs": ["x"]},
                          {"coeff": "0.2", "derivs": ["y"]}],
                "source": "0", "type_class": "hyperbolic", "linearity": "linear"},
        "boundary": [{"axis": a, "side": s, "kind": "periodic"}
                     for a in (0, 1) for s in ("low", "high")],
        "initial": {"u": "sin(2*pi*x)*cos(2*pi*y)"},
        "reference": {"class": "explicit_analytic",
                      "expression": "sin(2*pi*(x-0.3*t))*cos(2*pi*(y-0.2*t))"},
    }


# -- prompts ----------------------------------------------------------------------


def test_planner_prompt_carries_candidate_count_and_stability_rule():
    text = render_prompt(AgentRole.PLANNER, {
        "spec": advection_doc(), "classification": {}, "n_candidates": 10,
    })
    assert "10" in text
    assert "stability" in text.lower()
    assert "central differencing" in text


def test_critic_prompt_quotes_error_verbatim():
    log = 'Traceback (most recent call last):\n  File "program.py", line 3\nZeroDivisionError'
    text = render_prompt(AgentRole.CRITIC, {"code": "print(1/0)", "error_log": log})
    assert log in text


def test_coder_prompt_contains_snapshot_stride_instruction():
    text = render_prompt(AgentRole.CODER, {"spec": advection_doc(), "plan": {}})
    assert "snapshot_stride" in text
    assert "sparse intervals" in text


def test_missing_context_field_raises_template_error():
    with pytest.raises(TemplateError, match="classification"):
        render_prompt(AgentRole.PLANNER, {"spec": {}, "n_candidates": 10})


def test_rendering_is_deterministic():
    ctx = {"spec": advection_doc(), "classification": {"a": 1}, "n_candidates": 10}
    assert render_prompt(AgentRole.PLANNER, ctx) == render_prompt(AgentRole.PLANNER, ctx)


# -- response parsing ----------------------------------------------------------------


def test_single_code_block_extracted():
    raw = "Here you go:\n```python\nprint('hi')\n```\nGood luck!"
    assert parse_agent_response(AgentRole.CODER, raw) == "print('hi')\n"


def test_two_code_blocks_is_ambiguous():
    raw = "```python\na = 1\n```\nor maybe\n```python\na = 2\n```"
    with pytest.raises(MalformedResponseError, match="exactly one"):
        parse_agent_response(AgentRole.CODER, raw)


def test_prose_without_fence_is_malformed_for_coder():
    with pytest.raises(MalformedResponseError):
        parse_agent_response(AgentRole.CODER, "I would use a spectral method.")


def test_planner_payload_parses_into_plans():
    entries = [
        {"spatial_method": "fourier_spectral", "variant": "spectral",
         "time_integrator": "rk4", "resolution_tier": "high"},
        {"spatial_method": "finite_difference", "variant": "weno3",
         "time_integrator": "rk3", "resolution_tier": "high"},
    ]
    raw = "```json\n" + json.dumps(entries) + "\n```"
    plans = parse_agent_response(AgentRole.PLANNER, raw)
    assert [p.plan_id for p in plans] == [
        "fourier_spectral:spectral:rk4:high",
        "finite_difference:weno3:rk3:high",
    ]


def test_planner_garbage_rejected():
    with pytest.raises(MalformedResponseError):
        parse_agent_response(AgentRole.PLANNER, "```json\n{\"not\": \"a list\"}\n```")
    with pytest.raises(MalformedResponseError):
        parse_agent_response(AgentRole.PLANNER, "no json here at all")


# -- deterministic backend ------------------------------------------------------------


def test_deterministic_planner_heads_with_spectral():
    req = AgentRequest(AgentRole.PLANNER, "ignored", {"spec": advection_doc(),
                                                      "n_candidates": 10})
    resp = invoke_agent(req, DeterministicBackend())
    plans = resp.payload
    assert len(plans) == 10
    assert plans[0].spatial_method.value == "fourier_spectral"


def test_deterministic_selector_reproduces_published_scores():
    backend = DeterministicBackend()
    doc = advection_doc()
    planner = invoke_agent(
        AgentRequest(AgentRole.PLANNER, "", {"spec": doc, "n_candidates": 10}), backend
    )
    selector = invoke_agent(
        AgentRequest(AgentRole.SELECTOR, "", {
            "spec": doc,
            "plans": [p.describe() for p in planner.payload],
            "top_k": 5,
        }),
        backend,
    )
    scored = selector.payload["scored"]
    assert [p["score"] for p in scored] == [90, 85, 80, 75, 70, 60, 55, 50, 50, 45]
    assert len(selector.payload["selected"]) == 5


def test_deterministic_formulator_classifies():
    resp = invoke_agent(
        AgentRequest(AgentRole.FORMULATOR, "", {"spec": advection_doc()}),
        DeterministicBackend(),
    )
    klass = resp.payload["classification"]
    assert klass["type_class"] == "hyperbolic"
    assert klass["bc_kind"] == "periodic"
    assert klass["steady"] is False


def test_deterministic_coder_emits_runnable_shell():
    plan = SolverPlan.from_description({
        "method": "fourier_spectral", "variant": "spectral",
        "integrator": "etdrk4", "tier": "medium",
    })
    resp = invoke_agent(
        AgentRequest(AgentRole.CODER, "", {"plan": plan.describe()}),
        DeterministicBackend(),
    )
    src = resp.payload
    assert "runtime.main" in src and "'etdrk4'" in src
    compile(src, "<candidate>", "exec")


def test_deterministic_critic_returns_source_unchanged():
    code = "print('same bytes')\n"
    resp = invoke_agent(
        AgentRequest(AgentRole.CRITIC, "", {"code": code, "error_log": "boom"}),
        DeterministicBackend(),
    )
    assert resp.payload == code


def test_emit_program_covers_all_fields():
    src = emit_program({"plan_id": "a:b:c:d", "method": "finite_volume",
                        "variant": "muscl", "integrator": "rk2"})
    assert "'finite_volume'" in src and "'muscl'" in src and "'rk2'" in src


# -- remote backend (through the transport hook; the autouse fixture proves the
#    deterministic paths above never touched it) ------------------------------------


def test_remote_backend_round_trip():
    seen = {}

    def fake(url, payload, headers):
        seen["url"] = url
        seen["model"] = payload["model"]
        seen["auth"] = headers.get("Authorization")
        return {"choices": [{"message": {"content": "```python\nx = 1\n```"}}]}

    set_transport_hook(fake)
    backend = RemoteBackend(base_url="https://agents.example/v1", model="m-1",
                            api_key="sk-test")
    resp = invoke_agent(AgentRequest(AgentRole.CODER, "write code", {}), backend)
    assert resp.payload == "x = 1\n"
    assert seen["url"] == "https://agents.example/v1/chat/completions"
    assert seen["model"] == "m-1"
    assert seen["auth"] == "Bearer sk-test"


def test_remote_malformed_retries_then_escalates(tmp_path):
    calls = {"n": 0}

    def proseonly(url, payload, headers):
        calls["n"] += 1
        return {"choices": [{"message": {"content": "no fence, sorry"}}]}

    set_transport_hook(proseonly)
    backend = RemoteBackend(base_url="https://x", model="m")
    store = TranscriptStore(tmp_path / "run")
    with pytest.raises(MalformedResponseError):
        invoke_agent(AgentRequest(AgentRole.CODER, "p", {}), backend,
                     store=store, retries=2)
    assert calls["n"] == 2
    requests = [p for p in (tmp_path / "run").glob("step-*-coder-*.txt")
                if not p.name.endswith(".out.txt")]
    assert len(requests) == 2


def test_remote_requires_configuration(monkeypatch):
    monkeypatch.delenv("AGENT_BASE_URL", raising=False)
    monkeypatch.delenv("AGENT_MODEL", raising=False)
    with pytest.raises(AuthError):
        RemoteBackend.from_env()


def test_remote_maps_auth_failures():
    class FakeResp:
        status_code = 401

    def reject(url, payload, headers):
        raise AuthError("agent endpoint rejected credentials (HTTP 401)")

    set_transport_hook(reject)
    backend = RemoteBackend(base_url="https://x", model="m", api_key="bad")
    with pytest.raises(AuthError):
        backend.complete(AgentRequest(AgentRole.CODER, "p", {}))


# -- transcripts and replay -----------------------------------------------------------


def test_record_and_replay_bit_identical(tmp_path):
    store = TranscriptStore(tmp_path / "run")
    backend = DeterministicBackend()
    doc = advection_doc()
    live = invoke_agent(
        AgentRequest(AgentRole.PLANNER, "prompt-text", {"spec": doc, "n_candidates": 10}),
        backend, store=store,
    )
    replay = ReplayBackend(TranscriptStore(tmp_path / "run"))
    again = invoke_agent(
        AgentRequest(AgentRole.PLANNER, "prompt-text", {"spec": doc, "n_candidates": 10}),
        replay,
    )
    assert again.text == live.text
    assert [p.plan_id for p in again.payload] == [p.plan_id for p in live.payload]


def test_replay_role_mismatch_is_a_miss(tmp_path):
    store = TranscriptStore(tmp_path / "run")
    invoke_agent(
        AgentRequest(AgentRole.PLANNER, "p", {"spec": advection_doc(),
                                              "n_candidates": 10}),
        DeterministicBackend(), store=store,
    )
    replay = ReplayBackend(TranscriptStore(tmp_path / "run"))
    with pytest.raises(ReplayMissError, match="recorded for planner"):
        replay.complete(AgentRequest(AgentRole.CODER, "p", {}))


def test_replay_exhaustion_is_a_miss(tmp_path):
    replay = ReplayBackend(TranscriptStore(tmp_path / "empty"))
    with pytest.raises(ReplayMissError, match="exhausted"):
        replay.complete(AgentRequest(AgentRole.PLANNER, "p", {}))


def test_transcript_files_follow_naming_scheme(tmp_path):
    store = TranscriptStore(tmp_path / "run")
    invoke_agent(
        AgentRequest(AgentRole.FORMULATOR, "p", {"spec": advection_doc()}),
        DeterministicBackend(), store=store,
    )
    invoke_agent(
        AgentRequest(AgentRole.PLANNER, "p", {"spec": advection_doc(),
                                              "n_candidates": 10}),
        DeterministicBackend(), store=store,
    )
    names = sorted(p.name for p in (tmp_path / "run").glob("step-*"))
    assert names == [
        "step-0001-formulator-1.out.txt",
        "step-0001-formulator-1.txt",
        "step-0002-planner-1.out.txt",
        "step-0002-planner-1.txt",
    ]


def test_spec_serialization_round_trip():
    doc = advection_doc()
    spec = parse_spec(doc)
    again = parse_spec(serialize_spec(spec))
    assert again == spec
