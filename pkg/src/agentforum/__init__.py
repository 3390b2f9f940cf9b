"""Deliberation forum where human users steer panels of expert agents.

Humans open threads, @-mention agents into argumentative replies,
preview stance-forced what-if responses, branch tangents into fresh
threads, and read the whole discussion as an act-labeled mind map.
Agent turns run a plan / tool / compose loop over a shared knowledge
graph, distill per-agent memory, and persist through an event log.
"""

from __future__ import annotations

from .config import Settings, build_provider, build_search_clients, load_settings
from .events import CorruptPayload, Event, EventKind, EventLog, GapInLog, load_events
from .forum import (
    PROPOSAL_SECTIONS,
    BranchLink,
    Mention,
    PreviewDraft,
    ProposalDocument,
    ProposalRevision,
    SectionUnknown,
    StaleEdit,
    Stance,
    UnknownAgent,
    UnknownMove,
    WhatIfRequest,
    parse_mentions,
    resolve_responders,
    responder_preview,
)
from .memory import AgentMemory, MemoryError, MemorySnippet, SnippetKind
from .mindmap import (
    LabelCache,
    MindMapEdge,
    MindMapGraph,
    MindMapNode,
    ZoomLevel,
    build_graph,
    from_node_link,
    from_text,
    label_at,
    rationale_of,
    source_of,
    to_node_link,
    to_text,
)
from .personas import AgentPersona, PersonaError, default_catalog, load_catalog
from .protocol import (
    Act,
    AuthorKind,
    DeliberationMove,
    IllegalActForTarget,
    ProtocolError,
    RootMustBeIssue,
    SelfRebuttal,
    ThreadState,
    UnknownTarget,
    apply_move,
    new_thread,
    replay_moves,
    thread_from_jsonl,
    thread_to_jsonl,
    validate_move,
    verify_thread,
)
from .providers import (
    Composition,
    HttpProvider,
    LanguageModelProvider,
    MockProvider,
    PlanMode,
    ProviderUnavailable,
    ThreadSuggestion,
    ToolName,
    ToolRequest,
    TurnPlan,
)
from .retrieval import (
    AllProvidersFailed,
    KnowledgeGraph,
    PaperRecord,
    UnknownPaper,
    extract_citation_keys,
    format_citations,
    search_papers,
)
from .runtime import (
    CompositionFailed,
    EmptyResult,
    Toolkit,
    ToolUnavailable,
    allowed_reply_acts,
    take_turn,
)
from .scripting import AssertionFailed, ScriptError, SessionScript, load_script, run_script
from .service import (
    ForumService,
    ProjectState,
    UnknownPreview,
    UnknownProject,
    UnknownThread,
)

__version__ = "0.1.0"

__all__ = [
    "Act",
    "AgentMemory",
    "AgentPersona",
    "AllProvidersFailed",
    "AssertionFailed",
    "AuthorKind",
    "BranchLink",
    "Composition",
    "CompositionFailed",
    "CorruptPayload",
    "DeliberationMove",
    "EmptyResult",
    "Event",
    "EventKind",
    "EventLog",
    "ForumService",
    "GapInLog",
    "HttpProvider",
    "IllegalActForTarget",
    "KnowledgeGraph",
    "LabelCache",
    "LanguageModelProvider",
    "Mention",
    "MemoryError",
    "MemorySnippet",
    "MindMapEdge",
    "MindMapGraph",
    "MindMapNode",
    "MockProvider",
    "PROPOSAL_SECTIONS",
    "PaperRecord",
    "PersonaError",
    "PlanMode",
    "PreviewDraft",
    "ProjectState",
    "ProposalDocument",
    "ProposalRevision",
    "ProtocolError",
    "ProviderUnavailable",
    "RootMustBeIssue",
    "ScriptError",
    "SectionUnknown",
    "SelfRebuttal",
    "SessionScript",
    "Settings",
    "SnippetKind",
    "StaleEdit",
    "Stance",
    "ThreadState",
    "ThreadSuggestion",
    "ToolName",
    "ToolRequest",
    "Toolkit",
    "ToolUnavailable",
    "TurnPlan",
    "UnknownAgent",
    "UnknownMove",
    "UnknownPaper",
    "UnknownPreview",
    "UnknownProject",
    "UnknownTarget",
    "UnknownThread",
    "WhatIfRequest",
    "ZoomLevel",
    "allowed_reply_acts",
    "apply_move",
    "build_graph",
    "build_provider",
    "build_search_clients",
    "default_catalog",
    "extract_citation_keys",
    "format_citations",
    "from_node_link",
    "from_text",
    "label_at",
    "load_catalog",
    "load_events",
    "load_script",
    "load_settings",
    "new_thread",
    "parse_mentions",
    "rationale_of",
    "replay_moves",
    "resolve_responders",
    "responder_preview",
    "run_script",
    "search_papers",
    "source_of",
    "take_turn",
    "thread_from_jsonl",
    "thread_to_jsonl",
    "to_node_link",
    "to_text",
    "validate_move",
    "verify_thread",
]
