from __future__ import annotations

import json
import re

import httpx
import pytest

from agentforum.personas import AgentPersona, default_catalog
from agentforum.providers import (
    Composition,
    HttpProvider,
    MockProvider,
    PlanMode,
    ProviderUnavailable,
    ToolName,
    ToolRequest,
    TurnPlan,
)


@pytest.fixture(scope="module")
def persona() -> AgentPersona:
    catalog = default_catalog()
    return next(iter(catalog.values()))


@pytest.fixture(scope="module")
def mock() -> MockProvider:
    return MockProvider()


PLAN_CONTEXT = {
    "allowed_acts": ["CLAIM", "SUPPORT", "QUESTION"],
    "thread": "Should homework be graded automatically?",
    "tools": ["graph_query", "paper_search"],
}


def test_plan_is_deterministic(mock, persona):
    first = mock.plan(persona, PLAN_CONTEXT)
    second = mock.plan(persona, dict(PLAN_CONTEXT))
    assert first == second
    assert first.intended_act in PLAN_CONTEXT["allowed_acts"]


def test_plan_varies_with_context(mock, persona):
    base = mock.plan(persona, PLAN_CONTEXT)
    changed = dict(PLAN_CONTEXT, thread="A different thread entirely about fish")
    plans = {base, mock.plan(persona, changed)}
    shifted = dict(PLAN_CONTEXT, extra="salt")
    plans.add(mock.plan(persona, shifted))
    assert len(plans) > 1


def test_plan_requires_allowed_acts(mock, persona):
    with pytest.raises(ValueError, match="allowed_acts"):
        mock.plan(persona, {"thread": "x"})


def test_plan_without_tools_never_requests_one(mock, persona):
    for i in range(30):
        plan = mock.plan(persona, dict(PLAN_CONTEXT, tools=[], salt=i))
        assert plan.mode is PlanMode.RESPOND_DIRECTLY
        assert plan.tool_request is None


def test_plan_sometimes_uses_each_state(mock, persona):
    modes = {
        mock.plan(persona, dict(PLAN_CONTEXT, salt=i)).mode for i in range(40)
    }
    assert modes == {PlanMode.RESPOND_DIRECTLY, PlanMode.USE_TOOL}


def test_plan_tool_requests_come_from_offered_tools(mock, persona):
    for i in range(40):
        plan = mock.plan(persona, dict(PLAN_CONTEXT, tools=["add_paper"], salt=i))
        if plan.tool_request is not None:
            assert plan.tool_request.tool is ToolName.ADD_PAPER
            assert plan.tool_request.query.strip()


def test_reflect_keeps_plan_on_useful_observation(mock, persona):
    plan = TurnPlan(mode=PlanMode.RESPOND_DIRECTLY, intended_act="CLAIM")
    kept = mock.reflect(persona, plan, {"tool_status": "ok", "allowed_acts": ["CLAIM"]})
    assert kept == plan


def test_reflect_replans_on_empty_observation(mock, persona):
    plan = TurnPlan(
        mode=PlanMode.USE_TOOL,
        intended_act="CLAIM",
        tool_request=ToolRequest(tool=ToolName.GRAPH_QUERY, query="a b"),
        draft_points=("consider a",),
    )
    modes = set()
    for i in range(40):
        context = {
            "tool_status": "empty",
            "allowed_acts": ["CLAIM", "QUESTION"],
            "tools": ["paper_search"],
            "salt": i,
        }
        revised = mock.reflect(persona, plan, context)
        assert revised.draft_points == plan.draft_points
        modes.add(revised.mode)
    assert PlanMode.RESPOND_DIRECTLY in modes


def test_turn_plan_mode_and_request_agree():
    with pytest.raises(ValueError):
        TurnPlan(mode=PlanMode.USE_TOOL, intended_act="CLAIM")
    with pytest.raises(ValueError):
        TurnPlan(
            mode=PlanMode.RESPOND_DIRECTLY,
            intended_act="CLAIM",
            tool_request=ToolRequest(tool=ToolName.GRAPH_QUERY, query="q"),
        )


def test_compose_requires_act(mock, persona):
    with pytest.raises(ValueError, match="act"):
        mock.compose(persona, {"thread": "x"})


def test_compose_deterministic_and_nonempty(mock, persona):
    context = {"act": "CLAIM", "thread": "Grading policies for project courses"}
    first = mock.compose(persona, context)
    second = mock.compose(persona, dict(context))
    assert first == second
    assert first.body.strip()
    assert first.rationale.strip()


def test_compose_cites_only_for_argumentative_acts(mock, persona):
    menu = ("p1", "p2", "p3")
    for act in ("CLAIM", "SUPPORT", "REBUT"):
        hit = False
        for i in range(20):
            comp = mock.compose(
                persona,
                {"act": act, "available_citations": menu, "salt": i, "thread": "t"},
            )
            if comp.citations:
                hit = True
                assert set(comp.citations) <= set(menu)
                assert 1 <= len(comp.citations) <= 2
                for key in comp.citations:
                    assert f"[cite:{key}]" in comp.body
        assert hit, act
    for act in ("ISSUE", "QUESTION"):
        for i in range(20):
            comp = mock.compose(
                persona,
                {"act": act, "available_citations": menu, "salt": i, "thread": "t"},
            )
            assert comp.citations == ()
            assert "[cite:" not in comp.body


def test_distill_caps_and_refines(mock, persona):
    existing = ("s1", "s2", "s3")
    saw_refine = False
    for i in range(30):
        drafts = mock.distill(
            persona,
            {"recent": ["a claim about testing"], "existing_snippets": existing, "salt": i},
        )
        assert 1 <= len(drafts) <= 2
        for draft in drafts:
            assert draft.text.strip()
            assert set(draft.refines) <= set(existing)
            if draft.refines:
                saw_refine = True
    assert saw_refine


def test_distill_without_existing_never_refines(mock, persona):
    for i in range(10):
        for draft in mock.distill(persona, {"recent": ["x"], "salt": i}):
            assert draft.refines == ()


def test_suggest_threads_returns_three(mock):
    suggestions = mock.suggest_threads({"title": "Fair grading", "proposal": "..."})
    assert len(suggestions) == 3
    assert len({s.title for s in suggestions}) >= 2
    for s in suggestions:
        assert s.title and s.description


def test_label_uses_body_words(mock):
    body = "Automated grading reduces turnaround time for large project courses substantially"
    label = mock.label({"body": body})
    assert label.endswith(".")
    assert label.split()[0].lower() == "automated"
    assert len(label.split()) <= 10


def test_label_deterministic(mock):
    context = {"body": "Short note"}
    assert mock.label(context) == mock.label(dict(context))


# ---------------------------------------------------------------------------
# HttpProvider against a canned transport


def transport_returning(payloads: dict[str, dict], status: int = 200) -> httpx.MockTransport:
    def handler(request: httpx.Request) -> httpx.Response:
        kind = request.url.path.rsplit("/", 1)[-1]
        if status != 200:
            return httpx.Response(status)
        return httpx.Response(200, json=payloads[kind])

    return httpx.MockTransport(handler)


def http_provider(payloads: dict[str, dict], status: int = 200, **kwargs) -> HttpProvider:
    client = httpx.Client(transport=transport_returning(payloads, status))
    return HttpProvider("http://model.test", client=client, **kwargs)


def test_http_plan_round_trip(persona):
    provider = http_provider(
        {
            "plan": {
                "mode": "use_tool",
                "intended_act": "SUPPORT",
                "tool_request": {"tool": "paper_search", "query": "crispr"},
                "draft_points": ["check prior art"],
            }
        }
    )
    plan = provider.plan(persona, {"allowed_acts": ["SUPPORT"]})
    assert plan.mode is PlanMode.USE_TOOL
    assert plan.tool_request == ToolRequest(tool=ToolName.PAPER_SEARCH, query="crispr")
    assert plan.draft_points == ("check prior art",)


def test_http_compose_and_label(persona):
    provider = http_provider(
        {
            "compose": {"body": "B", "rationale": "R", "citations": ["p1"]},
            "label": {"summary": "Summed up."},
        }
    )
    comp = provider.compose(persona, {"act": "CLAIM"})
    assert comp == Composition(body="B", rationale="R", citations=("p1",))
    assert provider.label({"body": "x"}) == "Summed up."


def test_http_sends_persona_and_api_key(persona):
    seen: dict = {}

    def handler(request: httpx.Request) -> httpx.Response:
        seen["headers"] = dict(request.headers)
        seen["body"] = json.loads(request.content)
        return httpx.Response(200, json={"summary": "ok."})

    client = httpx.Client(transport=httpx.MockTransport(handler))
    provider = HttpProvider("http://model.test/", client=client, api_key="sekret")
    provider.label({"body": "x"})
    assert seen["headers"]["x-api-key"] == "sekret"
    assert seen["body"]["persona"] is None
    assert seen["body"]["context"] == {"body": "x"}

    def handler2(request: httpx.Request) -> httpx.Response:
        seen["body"] = json.loads(request.content)
        return httpx.Response(
            200, json={"body": "B", "rationale": "R", "citations": []}
        )

    provider2 = HttpProvider(
        "http://model.test", client=httpx.Client(transport=httpx.MockTransport(handler2))
    )
    provider2.compose(persona, {"act": "CLAIM"})
    assert seen["body"]["persona"]["agent_id"] == persona.agent_id


def test_http_errors_raise_provider_unavailable(persona):
    provider = http_provider({}, status=500)
    with pytest.raises(ProviderUnavailable):
        provider.label({"body": "x"})

    def refuse(request: httpx.Request) -> httpx.Response:
        raise httpx.ConnectError("no route", request=request)

    down = HttpProvider(
        "http://model.test", client=httpx.Client(transport=httpx.MockTransport(refuse))
    )
    with pytest.raises(ProviderUnavailable):
        down.plan(persona, {"allowed_acts": ["CLAIM"]})


def test_http_rejects_malformed_json(persona):
    def garbled(request: httpx.Request) -> httpx.Response:
        return httpx.Response(200, text="not json")

    provider = HttpProvider(
        "http://model.test", client=httpx.Client(transport=httpx.MockTransport(garbled))
    )
    with pytest.raises(ProviderUnavailable):
        provider.label({"body": "x"})
