"""Agent turns: plan, optional tool rounds, reflect, compose, distill.

A turn starts from the move being answered. The provider plans an
intended act (filtered to those legal for the parent) and may request a
tool: ``graph_query`` over the project knowledge graph, ``paper_search``
against the configured literature sources (hits are inserted into the
graph as they arrive), or ``add_paper`` to pull one specific paper in. An
empty observation lets the agent pivot once; two empty rounds in a row,
or the two-round cap, force a direct response. Only the final rationale
and a summary of tool calls persist on the posted move.

Citations are constrained to papers retrieved this turn or already in the
graph; markers for anything else are stripped before the move is built.
After a posted turn the agent distills up to three memory snippets from
the last ten moves.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence

from .forum import PreviewDraft, WhatIfRequest
from .memory import AgentMemory, MemoryError, MemorySnippet
from .personas import AgentPersona
from .protocol import (
    LEGAL_TARGETS,
    Act,
    AuthorKind,
    DeliberationMove,
    ThreadState,
    thread_digest,
)
from .providers import (
    LanguageModelProvider,
    PlanMode,
    ThreadSuggestion,
    ToolName,
    ToolRequest,
    TurnPlan,
)
from .retrieval import CITE_RE, KnowledgeGraph, SearchClient, search_papers

MAX_TOOL_ROUNDS = 2
DISTILL_WINDOW = 10
DISTILL_CAP = 3
MEMORY_K = 5
CITATION_MENU_CAP = 12

#: reply acts in a fixed presentation order (ISSUE only ever opens threads)
_REPLY_ACTS = (Act.CLAIM, Act.SUPPORT, Act.REBUT, Act.QUESTION)


class ToolUnavailable(RuntimeError):
    """The plan requested a tool this deployment does not offer."""


class EmptyResult(RuntimeError):
    """A tool call returned nothing; the reflect step may pivot."""

    def __init__(self, tool: str, query: str):
        super().__init__(f"{tool} returned nothing for {query!r}")
        self.tool = tool
        self.query = query


class CompositionFailed(RuntimeError):
    """Provider produced no usable rationale even after one retry."""


@dataclass(frozen=True)
class ToolResult:
    tool: str
    query: str
    summary: str
    paper_ids: tuple[str, ...] = ()
    snippet_ids: tuple[str, ...] = ()


@dataclass(frozen=True)
class ToolRound:
    tool: str
    query: str
    status: str  # "ok" | "empty" | "unavailable"
    summary: str


@dataclass(frozen=True)
class TurnOutcome:
    move: DeliberationMove
    plan: TurnPlan
    rounds: tuple[ToolRound, ...] = ()
    retrieved: tuple[str, ...] = ()


@dataclass(frozen=True)
class Toolkit:
    """What a turn may touch besides the provider."""

    graph: KnowledgeGraph
    search_clients: tuple[SearchClient, ...] = ()
    search_limit: int = 8
    query_k: int = 5
    tools: tuple[str, ...] = (ToolName.GRAPH_QUERY.value, ToolName.PAPER_SEARCH.value)


def allowed_reply_acts(
    state: ThreadState, parent: DeliberationMove, author: str
) -> tuple[Act, ...]:
    """Acts the author may legally attach to the parent right now."""
    acts = [
        act for act in _REPLY_ACTS if parent.target_kind in LEGAL_TARGETS[act]
    ]
    if Act.REBUT in acts and parent.author == author:
        store = state.stores.get(author)
        if store is not None and parent.move_id in store.active_sources():
            acts.remove(Act.REBUT)
    return tuple(acts)


def execute_tool(
    request: ToolRequest, toolkit: Toolkit, agent_id: str
) -> ToolResult:
    """Run one tool call; raises EmptyResult when nothing comes back."""
    tool = request.tool.value
    if tool not in toolkit.tools:
        raise ToolUnavailable(f"tool {tool!r} is not enabled")

    if request.tool is ToolName.GRAPH_QUERY:
        hits = toolkit.graph.query(request.query, k=toolkit.query_k)
        if not hits:
            raise EmptyResult(tool, request.query)
        lines = "; ".join(f"{h.text} (from {h.trace})" for h in hits[:3])
        return ToolResult(
            tool=tool,
            query=request.query,
            summary=f"Graph returned {len(hits)} snippets for '{request.query}': {lines}",
            paper_ids=tuple(dict.fromkeys(h.trace for h in hits)),
            snippet_ids=tuple(h.snippet_id for h in hits),
        )

    if request.tool is ToolName.PAPER_SEARCH:
        records = search_papers(
            request.query, toolkit.search_clients, limit=toolkit.search_limit
        )
        if not records:
            raise EmptyResult(tool, request.query)
        inserted = tuple(
            toolkit.graph.insert_paper(r, contributed_by=agent_id).paper_id
            for r in records
        )
        titles = "; ".join(r.title for r in records[:3])
        return ToolResult(
            tool=tool,
            query=request.query,
            summary=(
                f"Search found {len(records)} papers for '{request.query}', "
                f"including: {titles}"
            ),
            paper_ids=inserted,
        )

    if request.tool is ToolName.ADD_PAPER:
        records = search_papers(request.query, toolkit.search_clients, limit=1)
        if not records:
            raise EmptyResult(tool, request.query)
        delta = toolkit.graph.insert_paper(records[0], contributed_by=agent_id)
        verb = "Added" if delta.created else "Already tracked"
        return ToolResult(
            tool=tool,
            query=request.query,
            summary=f"{verb} paper '{records[0].title}' as {delta.paper_id}",
            paper_ids=(delta.paper_id,),
        )

    raise ToolUnavailable(f"unknown tool {tool!r}")


def _coerce_act(plan: TurnPlan, allowed: Sequence[Act]) -> TurnPlan:
    """Force the intended act into the legal set (first entry on misses)."""
    values = [a.value for a in allowed]
    if plan.intended_act in values:
        return plan
    return replace(plan, intended_act=values[0])


def _memory_context(memory: AgentMemory | None, k: int) -> list[dict]:
    if memory is None:
        return []
    return [
        {"kind": s.kind.value, "text": s.text}
        for s in memory.conditioning_set(k)
    ]


def _base_context(
    state: ThreadState,
    parent: DeliberationMove,
    allowed: Sequence[Act],
    memory: AgentMemory | None,
    toolkit: Toolkit,
    tools_enabled: bool,
    trigger_text: str,
) -> dict:
    root = state.root
    recent = [
        {"author": m.author, "act": m.act.value if m.act else None, "body": m.body}
        for m in state.moves[-5:]
    ]
    return {
        "thread_id": state.thread_id,
        "thread_digest": thread_digest(state),
        "topic": root.body if root else "",
        "target_body": parent.body,
        "target_act": parent.act.value if parent.act else None,
        "target_author": parent.author,
        "trigger_text": trigger_text,
        "recent": recent,
        "memories": _memory_context(memory, MEMORY_K),
        "allowed_acts": [a.value for a in allowed],
        "tools": list(toolkit.tools) if tools_enabled else [],
    }


def _citation_menu(retrieved: Sequence[str], graph: KnowledgeGraph) -> tuple[str, ...]:
    menu = list(dict.fromkeys(retrieved))
    for paper_id in graph.paper_ids():
        if paper_id not in menu:
            menu.append(paper_id)
        if len(menu) >= CITATION_MENU_CAP:
            break
    return tuple(menu[:CITATION_MENU_CAP])


def strip_unknown_citations(
    body: str, citations: Sequence[str], available: Sequence[str]
) -> tuple[str, tuple[str, ...]]:
    """Drop markers and citation entries not in the available set."""
    allowed = set(available)
    kept = tuple(c for c in citations if c in allowed)
    body = CITE_RE.sub(
        lambda m: m.group(0) if m.group(1) in allowed else "", body
    )
    return " ".join(body.split()), kept


def plan_turn(
    persona: AgentPersona,
    context: dict,
    provider: LanguageModelProvider,
    allowed: Sequence[Act],
    forced_act: Act | None = None,
) -> TurnPlan:
    """Provider plan with the legality filter (and what-if forcing) applied."""
    if not context.get("target_body") and not context.get("topic"):
        raise ValueError("thread context must be non-empty")
    plan = provider.plan(persona, context)
    if forced_act is not None:
        plan = replace(plan, intended_act=forced_act.value)
        return plan
    return _coerce_act(plan, allowed)


def take_turn(
    persona: AgentPersona,
    state: ThreadState,
    parent: DeliberationMove,
    memory: AgentMemory | None,
    toolkit: Toolkit,
    provider: LanguageModelProvider,
    move_id: str,
    trigger_text: str = "",
    forced_act: Act | None = None,
    tools_enabled: bool = True,
    max_tool_rounds: int = MAX_TOOL_ROUNDS,
) -> TurnOutcome:
    """One full agent turn; returns the composed move without applying it.

    With ``forced_act`` set (what-if previews) the act is fixed and tools
    stay off, so previewing leaves no trace anywhere.
    """
    if forced_act is not None:
        allowed: tuple[Act, ...] = (forced_act,)
        tools_enabled = False
    else:
        allowed = allowed_reply_acts(state, parent, persona.agent_id)

    base = _base_context(
        state, parent, allowed, memory, toolkit, tools_enabled, trigger_text
    )
    plan = plan_turn(persona, base, provider, allowed, forced_act)

    rounds: list[ToolRound] = []
    retrieved: list[str] = []
    empty_streak = 0
    while plan.mode is PlanMode.USE_TOOL and tools_enabled:
        if len(rounds) >= max_tool_rounds:
            plan = plan.respond_directly()
            break
        request = plan.tool_request
        assert request is not None
        status = "ok"
        summary = ""
        try:
            result = execute_tool(request, toolkit, persona.agent_id)
            summary = result.summary
            retrieved.extend(result.paper_ids)
        except EmptyResult as exc:
            status = "empty"
            summary = str(exc)
        except ToolUnavailable as exc:
            status = "unavailable"
            summary = str(exc)
        rounds.append(
            ToolRound(tool=request.tool.value, query=request.query, status=status, summary=summary)
        )
        reflect_context = dict(
            base,
            tool_status=status,
            tool=request.tool.value,
            tool_query=request.query,
            observation=summary,
            round=len(rounds),
        )
        plan = _coerce_act(provider.reflect(persona, plan, reflect_context), allowed)
        if forced_act is not None:
            plan = replace(plan, intended_act=forced_act.value)
        if status == "ok":
            # useful observation: compose now
            plan = plan.respond_directly()
            break
        empty_streak += 1
        if empty_streak >= 2:
            plan = plan.respond_directly()
            break

    act = Act(plan.intended_act)
    menu = _citation_menu(retrieved, toolkit.graph)
    compose_context = dict(
        base,
        act=act.value,
        draft_points=list(plan.draft_points),
        tool_summaries=[r.summary for r in rounds],
        available_citations=list(menu),
        attempt=1,
    )
    composition = provider.compose(persona, compose_context)
    if not composition.rationale.strip():
        compose_context["attempt"] = 2
        composition = provider.compose(persona, compose_context)
        if not composition.rationale.strip():
            raise CompositionFailed(
                f"{persona.agent_id} produced an empty rationale twice"
            )

    body, citations = strip_unknown_citations(
        composition.body, composition.citations, menu
    )
    tool_summary = " | ".join(r.summary for r in rounds) or None
    move = DeliberationMove(
        move_id=move_id,
        author=persona.agent_id,
        author_kind=AuthorKind.AGENT,
        act=act,
        target=parent.move_id,
        body=body,
        rationale=composition.rationale,
        citations=citations,
        tool_summary=tool_summary,
        timestamp=state.next_timestamp(),
    )
    return TurnOutcome(
        move=move,
        plan=plan,
        rounds=tuple(rounds),
        retrieved=tuple(dict.fromkeys(retrieved)),
    )


def preview_turn(
    persona: AgentPersona,
    state: ThreadState,
    request: WhatIfRequest,
    memory: AgentMemory | None,
    toolkit: Toolkit,
    provider: LanguageModelProvider,
    preview_id: str,
) -> PreviewDraft:
    """Ephemeral what-if draft; identical inputs give an identical draft."""
    parent = state.find(request.target_move)
    if parent is None:
        raise KeyError(f"target move {request.target_move!r} not found")
    outcome = take_turn(
        persona,
        state,
        parent,
        memory,
        toolkit,
        provider,
        move_id=preview_id,
        trigger_text=f"what-if:{request.stance.value}",
        forced_act=request.act,
    )
    return PreviewDraft(
        preview_id=preview_id,
        request=request,
        act=request.act,
        body=outcome.move.body,
        rationale=outcome.move.rationale,
        citations=outcome.move.citations,
    )


def distill_after_turn(
    persona: AgentPersona,
    memory: AgentMemory,
    state: ThreadState,
    provider: LanguageModelProvider,
    created_at: int,
    window: int = DISTILL_WINDOW,
) -> tuple[MemorySnippet, ...]:
    """Distill up to three snippets from the last posted moves."""
    recent = state.moves[-window:]
    if not recent:
        return ()
    context = {
        "thread_id": state.thread_id,
        "window": [
            {"author": m.author, "act": m.act.value if m.act else None, "body": m.body}
            for m in recent
        ],
        "existing_snippets": [s.snippet_id for s in memory.stream_view()],
    }
    drafts = provider.distill(persona, context)
    cap = min(DISTILL_CAP, len(recent))
    source_window = (recent[0].move_id, recent[-1].move_id)
    snippets: list[MemorySnippet] = []
    for draft in drafts[:cap]:
        try:
            snippets.append(memory.add_draft(draft, source_window, created_at))
        except MemoryError:
            # a misbehaving provider must not void the posted move
            continue
    return tuple(snippets)


def suggest_threads(
    proposal_sections: dict,
    provider: LanguageModelProvider,
) -> tuple[ThreadSuggestion, ...]:
    """1-5 draft thread ideas from the proposal; drafts, nothing persisted."""
    if not proposal_sections.get("Motivation", "").strip():
        raise ValueError("proposal Motivation section must be non-empty")
    context = {"proposal": dict(proposal_sections)}
    suggestions = provider.suggest_threads(context)
    return tuple(suggestions[:5])
