"""Language model providers behind the agent runtime.

The runtime talks to a provider through six structured request kinds:

* ``plan``: pick an intended act and decide whether to consult a tool.
* ``reflect``: after a tool observation, keep or revise the plan.
* ``compose``: produce the reply (body, rationale, citation ids).
* ``distill``: extract memory snippets from recent turns.
* ``suggest_threads``: propose follow-up discussion threads.
* ``label``: summarize one post for the mind map.

``MockProvider`` is fully deterministic: every output is derived from a
sha256 seed over (persona digest, context digest, request kind), so a
scripted session replays byte for byte. ``HttpProvider`` forwards the same
structured requests to an external endpoint and raises
``ProviderUnavailable`` when it cannot.
"""

from __future__ import annotations

import random
import re
from abc import ABC, abstractmethod
from dataclasses import dataclass, replace
from enum import Enum
from typing import Mapping

import httpx

from .digests import digest, seed_int
from .personas import AgentPersona


class PlanMode(str, Enum):
    RESPOND_DIRECTLY = "respond_directly"
    USE_TOOL = "use_tool"


class ToolName(str, Enum):
    GRAPH_QUERY = "graph_query"
    PAPER_SEARCH = "paper_search"
    ADD_PAPER = "add_paper"


READ_TOOLS = (ToolName.GRAPH_QUERY.value, ToolName.PAPER_SEARCH.value)


class ProviderUnavailable(RuntimeError):
    """The configured provider cannot serve requests."""


@dataclass(frozen=True)
class ToolRequest:
    tool: ToolName
    query: str

    def to_dict(self) -> dict:
        return {"tool": self.tool.value, "query": self.query}


@dataclass(frozen=True)
class TurnPlan:
    mode: PlanMode
    intended_act: str
    tool_request: ToolRequest | None = None
    draft_points: tuple[str, ...] = ()

    def __post_init__(self):
        has_request = self.tool_request is not None
        if (self.mode is PlanMode.USE_TOOL) != has_request:
            raise ValueError("tool_request present iff mode is use_tool")

    def to_dict(self) -> dict:
        return {
            "mode": self.mode.value,
            "intended_act": self.intended_act,
            "tool_request": self.tool_request.to_dict() if self.tool_request else None,
            "draft_points": list(self.draft_points),
        }

    def respond_directly(self) -> "TurnPlan":
        return replace(self, mode=PlanMode.RESPOND_DIRECTLY, tool_request=None)


@dataclass(frozen=True)
class Composition:
    body: str
    rationale: str
    citations: tuple[str, ...] = ()


@dataclass(frozen=True)
class SnippetDraft:
    kind: str
    text: str
    refines: tuple[str, ...] = ()


@dataclass(frozen=True)
class ThreadSuggestion:
    title: str
    description: str


class LanguageModelProvider(ABC):
    """Structured request interface the runtime depends on."""

    name: str = "provider"
    deterministic: bool = False

    @abstractmethod
    def plan(self, persona: AgentPersona, context: Mapping) -> TurnPlan: ...

    @abstractmethod
    def reflect(
        self, persona: AgentPersona, plan: TurnPlan, context: Mapping
    ) -> TurnPlan: ...

    @abstractmethod
    def compose(self, persona: AgentPersona, context: Mapping) -> Composition: ...

    @abstractmethod
    def distill(
        self, persona: AgentPersona, context: Mapping
    ) -> tuple[SnippetDraft, ...]: ...

    @abstractmethod
    def suggest_threads(self, context: Mapping) -> tuple[ThreadSuggestion, ...]: ...

    @abstractmethod
    def label(self, context: Mapping) -> str: ...


_WORD_RE = re.compile(r"[A-Za-z][A-Za-z\-]{3,}")
_STOPWORDS = frozenset(
    "this that with from have about should would could which there their "
    "what when where were will does been being other more than into over "
    "because while against between through".split()
)
_FALLBACK_VOCAB = (
    "evidence",
    "tradeoffs",
    "adoption",
    "measurement",
    "incentives",
    "validity",
    "deployment",
    "oversight",
)

_BODY_TEMPLATES: dict[str, tuple[str, ...]] = {
    "ISSUE": (
        "How should we weigh {a} against {b} when it comes to {c}?",
        "What would responsible progress on {a} and {b} look like for {c}?",
    ),
    "CLAIM": (
        "The strongest reading of the {a} evidence is that {b} drives the {c} outcomes.",
        "On balance, {a} matters more for {b} here than {c} does.",
        "I would argue the {a} concern is secondary: {b} is the binding constraint on {c}.",
    ),
    "SUPPORT": (
        "That point holds up: findings on {a} corroborate the link between {b} and {c}.",
        "Agreed, and the {a} literature gives independent grounds for the {b} reading of {c}.",
        "This is consistent with what we see in {a} work, where {b} tracks {c} closely.",
    ),
    "REBUT": (
        "That overstates the case: {a} results cut against the assumed {b}-{c} connection.",
        "I disagree; the {a} evidence is confounded, so the {b} conclusion about {c} does not follow.",
        "The inference breaks at {a}: without it, {b} tells us little about {c}.",
    ),
    "QUESTION": (
        "What evidence connects {a} to {b} in the {c} setting?",
        "Can you spell out how {a} was measured before leaning on it for the {b} claim about {c}?",
        "Which populations does the {a} result cover, and does that extend to {b} under {c}?",
    ),
}

_RATIONALE_TEMPLATES = (
    "Drawing on {area} practice, the decisive factor is {a} rather than {b}.",
    "From a {area} standpoint, {a} is the load-bearing assumption and {b} needs checking.",
    "My {area} experience says {a} generalizes poorly, which is why {b} matters here.",
)

_SNIPPET_TEMPLATES: dict[str, str] = {
    "hypothesis": "Working hypothesis: {a} mediates the effect of {b} on {c}.",
    "question": "Open question: how robust is the {a} evidence once {b} is controlled?",
    "rationale_shift": "Shifted position: {a} now seems more decisive than {b} for {c}.",
    "methodological_consideration": "Method note: measuring {a} requires separating {b} from {c}.",
}

_SNIPPET_KINDS = tuple(_SNIPPET_TEMPLATES)


def _harvest_strings(value, out: list[str]) -> None:
    if isinstance(value, str):
        out.append(value)
    elif isinstance(value, Mapping):
        for key in sorted(value):
            _harvest_strings(value[key], out)
    elif isinstance(value, (list, tuple)):
        for item in value:
            _harvest_strings(item, out)


def _vocabulary(context: Mapping) -> list[str]:
    texts: list[str] = []
    _harvest_strings(dict(context), texts)
    seen: list[str] = []
    for token in _WORD_RE.findall(" ".join(texts)):
        word = token.lower()
        if word in _STOPWORDS or word in seen:
            continue
        seen.append(word)
        if len(seen) >= 40:
            break
    return seen or list(_FALLBACK_VOCAB)


class MockProvider(LanguageModelProvider):
    """Deterministic offline provider.

    Every decision comes from a ``random.Random`` seeded with
    (persona digest, context digest, request kind), so identical inputs
    always produce identical outputs.
    """

    name = "mock"
    deterministic = True

    def _rng(
        self, persona: AgentPersona | None, context: Mapping, kind: str
    ) -> random.Random:
        pdigest = persona.digest if persona is not None else "none"
        return random.Random(seed_int(pdigest, digest(dict(context)), kind))

    def _words(self, rng: random.Random, context: Mapping, n: int) -> list[str]:
        vocab = _vocabulary(context)
        return [rng.choice(vocab) for _ in range(n)]

    def plan(self, persona: AgentPersona, context: Mapping) -> TurnPlan:
        rng = self._rng(persona, context, "plan")
        allowed = tuple(context.get("allowed_acts", ()))
        if not allowed:
            raise ValueError("plan context carries no allowed_acts")
        intended_act = rng.choice(list(allowed))
        points = tuple(
            f"consider {w}" for w in dict.fromkeys(self._words(rng, context, 2))
        )
        tools = tuple(context.get("tools", READ_TOOLS))
        if tools and rng.random() < 0.5:
            a, b = self._words(rng, context, 2)
            return TurnPlan(
                mode=PlanMode.USE_TOOL,
                intended_act=intended_act,
                tool_request=ToolRequest(tool=ToolName(rng.choice(list(tools))), query=f"{a} {b}"),
                draft_points=points,
            )
        return TurnPlan(
            mode=PlanMode.RESPOND_DIRECTLY,
            intended_act=intended_act,
            draft_points=points,
        )

    def reflect(
        self, persona: AgentPersona, plan: TurnPlan, context: Mapping
    ) -> TurnPlan:
        if context.get("tool_status") != "empty":
            # useful observation: keep the plan as drafted
            return plan
        rng = self._rng(persona, context, "reflect")
        allowed = tuple(context.get("allowed_acts", (plan.intended_act,)))
        intended_act = rng.choice(list(allowed))
        tools = tuple(context.get("tools", READ_TOOLS))
        if tools and rng.random() < 0.5:
            a, b = self._words(rng, context, 2)
            return TurnPlan(
                mode=PlanMode.USE_TOOL,
                intended_act=intended_act,
                tool_request=ToolRequest(tool=ToolName(rng.choice(list(tools))), query=f"{b} {a}"),
                draft_points=plan.draft_points,
            )
        return TurnPlan(
            mode=PlanMode.RESPOND_DIRECTLY,
            intended_act=intended_act,
            draft_points=plan.draft_points,
        )

    def compose(self, persona: AgentPersona, context: Mapping) -> Composition:
        rng = self._rng(persona, context, "compose")
        act = context.get("act")
        if not act:
            raise ValueError("compose context carries no act")
        a, b, c = self._words(rng, context, 3)
        body = rng.choice(_BODY_TEMPLATES[act]).format(a=a, b=b, c=c)
        rationale = rng.choice(_RATIONALE_TEMPLATES).format(
            area=persona.research_area.lower(), a=a, b=b
        )
        available = tuple(context.get("available_citations", ()))
        citations: tuple[str, ...] = ()
        if available and act in ("CLAIM", "SUPPORT", "REBUT"):
            count = min(len(available), 1 + (rng.random() < 0.4))
            keys = rng.sample(list(available), count)
            citations = tuple(keys)
            markers = " ".join(f"[cite:{key}]" for key in keys)
            body += f" Prior work bears this out {markers}."
        return Composition(body=body, rationale=rationale, citations=citations)

    def distill(
        self, persona: AgentPersona, context: Mapping
    ) -> tuple[SnippetDraft, ...]:
        rng = self._rng(persona, context, "distill")
        existing = tuple(context.get("existing_snippets", ()))
        drafts: list[SnippetDraft] = []
        for _ in range(1 + (rng.random() < 0.35)):
            kind = rng.choice(_SNIPPET_KINDS)
            a, b, c = self._words(rng, context, 3)
            refines: tuple[str, ...] = ()
            if existing and rng.random() < 0.6:
                parent = rng.choice(list(existing))
                refines = (parent,)
                extras = [s for s in existing if s != parent]
                if extras and rng.random() < 0.25:
                    refines = (parent, rng.choice(extras))
            drafts.append(
                SnippetDraft(
                    kind=kind,
                    text=_SNIPPET_TEMPLATES[kind].format(a=a, b=b, c=c),
                    refines=refines,
                )
            )
        return tuple(drafts)

    def suggest_threads(self, context: Mapping) -> tuple[ThreadSuggestion, ...]:
        rng = self._rng(None, context, "suggest_threads")
        suggestions: list[ThreadSuggestion] = []
        for _ in range(3):
            a, b, c = self._words(rng, context, 3)
            suggestions.append(
                ThreadSuggestion(
                    title=f"Examine {a} and {b}",
                    description=(
                        f"Discuss how {a} interacts with {b}, and whether the open "
                        f"points about {c} change the proposal."
                    ),
                )
            )
        return tuple(suggestions)

    def label(self, context: Mapping) -> str:
        rng = self._rng(None, context, "label")
        body = str(context.get("body", ""))
        words = _WORD_RE.findall(body) or self._words(rng, context, 6)
        head = " ".join(words[:10])
        return head[0].upper() + head[1:] + "."


class HttpProvider(LanguageModelProvider):
    """Forwards structured requests to an external model endpoint.

    Expects ``POST {base_url}/provider/{kind}`` to answer with the JSON
    shape of the matching result type. Network or protocol failures
    surface as ``ProviderUnavailable`` so callers can fall back.
    """

    name = "http"
    deterministic = False

    def __init__(
        self,
        base_url: str,
        timeout: float = 30.0,
        client: httpx.Client | None = None,
        api_key: str = "",
    ):
        self.base_url = base_url.rstrip("/")
        self._client = client or httpx.Client(timeout=timeout)
        self._headers = {"x-api-key": api_key} if api_key else {}

    def _call(self, kind: str, persona: AgentPersona | None, payload: dict) -> dict:
        body = {"persona": persona.to_dict() if persona is not None else None}
        body.update(payload)
        try:
            response = self._client.post(
                f"{self.base_url}/provider/{kind}", json=body, headers=self._headers
            )
            response.raise_for_status()
            return response.json()
        except (httpx.HTTPError, ValueError) as exc:
            raise ProviderUnavailable(f"{kind} request failed: {exc}") from exc

    @staticmethod
    def _plan_from(data: Mapping) -> TurnPlan:
        request = data.get("tool_request")
        return TurnPlan(
            mode=PlanMode(data["mode"]),
            intended_act=data["intended_act"],
            tool_request=(
                ToolRequest(tool=ToolName(request["tool"]), query=request["query"])
                if request
                else None
            ),
            draft_points=tuple(data.get("draft_points", ())),
        )

    def plan(self, persona: AgentPersona, context: Mapping) -> TurnPlan:
        return self._plan_from(self._call("plan", persona, {"context": dict(context)}))

    def reflect(
        self, persona: AgentPersona, plan: TurnPlan, context: Mapping
    ) -> TurnPlan:
        data = self._call(
            "reflect", persona, {"plan": plan.to_dict(), "context": dict(context)}
        )
        return self._plan_from(data)

    def compose(self, persona: AgentPersona, context: Mapping) -> Composition:
        data = self._call("compose", persona, {"context": dict(context)})
        return Composition(
            body=data["body"],
            rationale=data.get("rationale", ""),
            citations=tuple(data.get("citations", ())),
        )

    def distill(
        self, persona: AgentPersona, context: Mapping
    ) -> tuple[SnippetDraft, ...]:
        data = self._call("distill", persona, {"context": dict(context)})
        return tuple(
            SnippetDraft(
                kind=item["kind"],
                text=item["text"],
                refines=tuple(item.get("refines", ())),
            )
            for item in data.get("snippets", ())
        )

    def suggest_threads(self, context: Mapping) -> tuple[ThreadSuggestion, ...]:
        data = self._call("suggest_threads", None, {"context": dict(context)})
        return tuple(
            ThreadSuggestion(title=item["title"], description=item["description"])
            for item in data.get("suggestions", ())
        )

    def label(self, context: Mapping) -> str:
        data = self._call("label", None, {"context": dict(context)})
        return str(data["summary"])
