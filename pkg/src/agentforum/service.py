"""Project orchestration: threads, replies, previews, branches, replay.

One :class:`ForumService` holds any number of projects. Every state
change appends to the project's event log before the call returns, so a
project rebuilt from its log (or any prefix of it, after a crash)
matches the live one. Agent turns are never re-run on replay; their
outputs travel inside event payloads.

Replies stream: the caller gets the human move first, then one item per
responding agent, each either a posted move or an error entry. A failed
agent never blocks the others.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Sequence

from .config import Settings, build_provider, build_search_clients
from .digests import digest
from .events import CorruptPayload, Event, EventKind, EventLog, GapInLog
from .forum import (
    PROPOSAL_SECTIONS,
    BranchLink,
    PreviewDraft,
    ProposalDocument,
    ProposalRevision,
    Stance,
    UnknownAgent,
    UnknownMove,
    WhatIfRequest,
    branch_root_body,
    parse_mentions,
    resolve_responders,
    verify_branch_links,
)
from .memory import AgentMemory
from .mindmap import LabelCache, MindMapGraph, build_graph
from .personas import AgentPersona, default_catalog, roster_personas
from .protocol import (
    Act,
    AuthorKind,
    DeliberationMove,
    ProtocolError,
    ThreadState,
    apply_move,
    new_thread,
    thread_snapshot,
    thread_to_jsonl,
    validate_move,
    verify_thread,
)
from .providers import LanguageModelProvider, ProviderUnavailable, ThreadSuggestion
from .retrieval import (
    KnowledgeGraph,
    PaperRecord,
    RenderedCitations,
    SearchClient,
    format_citations,
)
from .runtime import (
    CompositionFailed,
    Toolkit,
    distill_after_turn,
    preview_turn,
    suggest_threads,
    take_turn,
)

HUMAN_AUTHOR = "user"


class UnknownProject(KeyError):
    pass


class UnknownThread(KeyError):
    pass


class UnknownPreview(KeyError):
    pass


@dataclass
class ProjectState:
    """Everything one project owns, rebuilt verbatim from its event log."""

    project_id: str
    title: str
    roster: list[str]
    personas: dict[str, AgentPersona]
    proposal: ProposalDocument
    log: EventLog
    threads: dict[str, ThreadState] = field(default_factory=dict)
    thread_titles: dict[str, str] = field(default_factory=dict)
    branch_links: list[BranchLink] = field(default_factory=list)
    memories: dict[str, AgentMemory] = field(default_factory=dict)
    graph: KnowledgeGraph = field(default_factory=KnowledgeGraph)
    move_counter: int = 0
    thread_counter: int = 0
    preview_counter: int = 0
    previews: dict[str, PreviewDraft] = field(default_factory=dict)
    preview_by_target: dict[str, str] = field(default_factory=dict)
    idempotency: dict[str, list[dict]] = field(default_factory=dict)
    lock: threading.RLock = field(default_factory=threading.RLock)

    def next_move_id(self) -> str:
        self.move_counter += 1
        return f"m{self.move_counter}"

    def next_thread_id(self) -> str:
        self.thread_counter += 1
        return f"t{self.thread_counter}"

    def next_preview_id(self) -> str:
        self.preview_counter += 1
        return f"w{self.preview_counter}"

    def thread(self, thread_id: str) -> ThreadState:
        if thread_id not in self.threads:
            raise UnknownThread(f"no thread {thread_id!r}")
        return self.threads[thread_id]

    def memory_for(self, agent_id: str) -> AgentMemory:
        if agent_id not in self.memories:
            self.memories[agent_id] = AgentMemory(agent_id)
        return self.memories[agent_id]

    def _bump_counters(self, move_id: str | None = None, thread_id: str | None = None) -> None:
        if move_id and move_id.startswith("m") and move_id[1:].isdigit():
            self.move_counter = max(self.move_counter, int(move_id[1:]))
        if thread_id and thread_id.startswith("t") and thread_id[1:].isdigit():
            self.thread_counter = max(self.thread_counter, int(thread_id[1:]))


class ForumService:
    """Facade the HTTP layer, the CLI, and scripts all drive."""

    def __init__(
        self,
        settings: Settings | None = None,
        provider: LanguageModelProvider | None = None,
        search_clients: Sequence[SearchClient] | None = None,
        catalog: Mapping[str, AgentPersona] | None = None,
    ):
        self.settings = settings or Settings()
        self.provider = provider or build_provider(self.settings)
        self.search_clients = tuple(
            search_clients
            if search_clients is not None
            else build_search_clients(self.settings)
        )
        self.catalog = dict(catalog) if catalog is not None else default_catalog()
        self.projects: dict[str, ProjectState] = {}
        self._label_cache = LabelCache()
        self._project_counter = 0

    # ------------------------------------------------------------------
    # event helpers

    def _event_path(self, project_id: str):
        if not self.settings.data_dir:
            return None
        from pathlib import Path

        directory = Path(self.settings.data_dir)
        directory.mkdir(parents=True, exist_ok=True)
        return directory / f"{project_id}.events.jsonl"

    def _toolkit(self, project: ProjectState) -> Toolkit:
        return Toolkit(
            graph=project.graph,
            search_clients=self.search_clients,
            search_limit=self.settings.search_limit,
            query_k=self.settings.graph_query_k,
        )

    # ------------------------------------------------------------------
    # projects

    def project(self, project_id: str) -> ProjectState:
        if project_id not in self.projects:
            raise UnknownProject(f"no project {project_id!r}")
        return self.projects[project_id]

    def create_project(
        self,
        title: str,
        roster: Sequence[str],
        proposal_sections: Mapping[str, str] | None = None,
        project_id: str | None = None,
    ) -> ProjectState:
        if project_id is None:
            self._project_counter += 1
            project_id = f"p{self._project_counter}"
        if project_id in self.projects:
            raise ValueError(f"duplicate project id {project_id!r}")
        personas = roster_personas(self.catalog, roster)
        project = ProjectState(
            project_id=project_id,
            title=title,
            roster=list(roster),
            personas=dict(personas),
            proposal=ProposalDocument(proposal_sections),
            log=EventLog(self._event_path(project_id)),
        )
        project.log.append(
            EventKind.PROJECT_CREATED,
            {
                "project_id": project_id,
                "title": title,
                "roster": list(roster),
                "proposal_sections": project.proposal.sections(),
                "personas": {a: p.to_dict() for a, p in personas.items()},
            },
        )
        self.projects[project_id] = project
        return project

    # ------------------------------------------------------------------
    # threads

    def create_thread(
        self,
        project_id: str,
        title: str,
        body: str,
        author: str = HUMAN_AUTHOR,
        branch_of: tuple[str, str] | None = None,
    ) -> tuple[str, DeliberationMove]:
        """Open a thread; the opening post is an ISSUE move by the human."""
        project = self.project(project_id)
        with project.lock:
            thread_id = project.next_thread_id()
            state = new_thread(thread_id)
            root = DeliberationMove(
                move_id=project.next_move_id(),
                author=author,
                author_kind=AuthorKind.HUMAN,
                act=Act.ISSUE,
                target=None,
                body=body,
                timestamp=1,
            )
            state = apply_move(state, root)
            project.threads[thread_id] = state
            project.thread_titles[thread_id] = title
            link = None
            if branch_of is not None:
                link = BranchLink(
                    thread_id=thread_id,
                    source_thread_id=branch_of[0],
                    source_move_id=branch_of[1],
                )
                project.branch_links.append(link)
            project.log.append(
                EventKind.THREAD_CREATED,
                {
                    "thread_id": thread_id,
                    "title": title,
                    "root": root.to_record(),
                    "branch_of": link.to_record() if link else None,
                },
            )
            return thread_id, root

    def branch_thread(
        self,
        project_id: str,
        source_thread_id: str,
        source_move_id: str,
        title: str | None = None,
    ) -> tuple[str, DeliberationMove]:
        """Fork the discussion from one move into a fresh thread."""
        project = self.project(project_id)
        source_state = project.thread(source_thread_id)
        source = source_state.find(source_move_id)
        if source is None:
            raise UnknownMove(
                f"move {source_move_id!r} not in thread {source_thread_id}"
            )
        body = branch_root_body(source, source_thread_id)
        if title is None:
            title = f"Branch of {source_thread_id} at {source_move_id}"
        return self.create_thread(
            project_id,
            title,
            body,
            branch_of=(source_thread_id, source_move_id),
        )

    def suggest_threads(self, project_id: str) -> tuple[ThreadSuggestion, ...]:
        project = self.project(project_id)
        return suggest_threads(project.proposal.sections(), self.provider)

    # ------------------------------------------------------------------
    # replies

    def responder_preview(
        self, project_id: str, thread_id: str, parent_move_id: str, text: str
    ) -> dict:
        """What the composer shows: cleaned text, mentions, responders."""
        project = self.project(project_id)
        state = project.thread(thread_id)
        parent = state.find(parent_move_id)
        if parent is None:
            raise UnknownMove(f"move {parent_move_id!r} not in thread {thread_id}")
        cleaned, mentions = parse_mentions(text, project.roster)
        responders = resolve_responders(
            parent, mentions, project.roster, cap=self.settings.responder_cap
        )
        return {
            "cleaned_text": cleaned,
            "mentions": [
                {"agent_id": m.agent_id, "span": list(m.span)} for m in mentions
            ],
            "responders": list(responders),
        }

    def _post_agent_turn(
        self,
        project: ProjectState,
        thread_id: str,
        parent: DeliberationMove,
        agent_id: str,
        trigger_text: str,
        idempotency_key: str | None,
    ) -> dict:
        """Run one agent's turn, persist it, and shape the stream item."""
        persona = project.personas[agent_id]
        state = project.thread(thread_id)
        memory = project.memory_for(agent_id)
        toolkit = self._toolkit(project)
        project.graph.start_journal()
        try:
            outcome = take_turn(
                persona,
                state,
                parent,
                memory,
                toolkit,
                self.provider,
                move_id=project.next_move_id(),
                trigger_text=trigger_text,
                max_tool_rounds=self.settings.tool_round_cap,
            )
        finally:
            # graph growth survives a failed turn, so log it either way
            for record, contributed_by in project.graph.drain_journal():
                project.log.append(
                    EventKind.PAPER_INSERTED,
                    {"record": record, "contributed_by": contributed_by},
                )
        validate_move(state, outcome.move)
        project.threads[thread_id] = apply_move(state, outcome.move)
        project.log.append(
            EventKind.MOVE_POSTED,
            {
                "thread_id": thread_id,
                "move": outcome.move.to_record(),
                "idempotency_key": idempotency_key,
            },
        )
        snippets = distill_after_turn(
            persona,
            memory,
            project.threads[thread_id],
            self.provider,
            created_at=project.log.last_seq,
            window=self.settings.distill_window,
        )
        if snippets:
            project.log.append(
                EventKind.MEMORY_DISTILLED,
                {
                    "agent_id": agent_id,
                    "snippets": [s.to_record() for s in snippets],
                },
            )
        item = {"kind": "agent_move", "thread_id": thread_id, "move": outcome.move.to_record()}
        if outcome.move.citations:
            rendered = self.render_move_citations(project, outcome.move)
            item["bibliography"] = [e.to_record() for e in rendered.bibliography]
        return item

    def post_reply(
        self,
        project_id: str,
        thread_id: str,
        parent_move_id: str,
        text: str,
        author: str = HUMAN_AUTHOR,
        idempotency_key: str | None = None,
    ) -> Iterator[dict]:
        """Post a human reply, then stream each triggered agent response.

        Retrying with a previously seen idempotency key replays the stored
        items instead of posting anything twice.
        """
        project = self.project(project_id)
        with project.lock:
            if idempotency_key and idempotency_key in project.idempotency:
                yield from project.idempotency[idempotency_key]
                return
            state = project.thread(thread_id)
            parent = state.find(parent_move_id)
            if parent is None:
                raise UnknownMove(
                    f"move {parent_move_id!r} not in thread {thread_id}"
                )
            cleaned, mentions = parse_mentions(text, project.roster)
            responders = resolve_responders(
                parent, mentions, project.roster, cap=self.settings.responder_cap
            )
            user_move = DeliberationMove(
                move_id=project.next_move_id(),
                author=author,
                author_kind=AuthorKind.HUMAN,
                act=None,
                target=parent_move_id,
                body=cleaned,
                timestamp=state.next_timestamp(),
            )
            validate_move(state, user_move)
            project.threads[thread_id] = apply_move(state, user_move)
            project.log.append(
                EventKind.MOVE_POSTED,
                {
                    "thread_id": thread_id,
                    "move": user_move.to_record(),
                    "idempotency_key": idempotency_key,
                },
            )
            items: list[dict] = [
                {"kind": "user_move", "thread_id": thread_id, "move": user_move.to_record()}
            ]
            if idempotency_key:
                project.idempotency[idempotency_key] = items
            yield items[0]

            wave = [(agent_id, user_move) for agent_id in responders]
            rounds = 0
            while wave:
                next_wave: list[tuple[str, DeliberationMove]] = []
                for agent_id, parent_move in wave:
                    try:
                        item = self._post_agent_turn(
                            project,
                            thread_id,
                            parent_move,
                            agent_id,
                            trigger_text=cleaned,
                            idempotency_key=idempotency_key,
                        )
                    except (ProviderUnavailable, CompositionFailed, ProtocolError) as exc:
                        item = {
                            "kind": "agent_error",
                            "agent_id": agent_id,
                            "error": type(exc).__name__,
                            "detail": str(exc),
                        }
                    else:
                        posted = project.thread(thread_id).find(item["move"]["move_id"])
                        if (
                            self.settings.follow_on_rounds
                            and rounds == 0
                            and posted is not None
                            and parent.is_agent
                            and parent.author != agent_id
                        ):
                            # the agent the human answered gets one comeback
                            next_wave.append((parent.author, posted))
                    items.append(item)
                    yield item
                rounds += 1
                wave = next_wave if rounds < 2 else []

    def post_reply_items(self, *args, **kwargs) -> list[dict]:
        """Non-streaming convenience wrapper around post_reply."""
        return list(self.post_reply(*args, **kwargs))

    # ------------------------------------------------------------------
    # what-if previews

    def what_if_preview(
        self,
        project_id: str,
        thread_id: str,
        target_move_id: str,
        agent_id: str,
        stance: Stance | str,
    ) -> PreviewDraft:
        """Draft how an agent would respond under a stance; nothing persists."""
        project = self.project(project_id)
        with project.lock:
            if agent_id not in project.roster:
                raise UnknownAgent(f"{agent_id!r} is not on the roster")
            state = project.thread(thread_id)
            if state.find(target_move_id) is None:
                raise UnknownMove(f"move {target_move_id!r} not in thread {thread_id}")
            request = WhatIfRequest(
                target_move=target_move_id,
                agent_id=agent_id,
                stance=Stance(stance),
            )
            preview_id = project.next_preview_id()
            draft = preview_turn(
                project.personas[agent_id],
                state,
                request,
                # read-only: drafting must not create a memory entry
                project.memories.get(agent_id),
                self._toolkit(project),
                self.provider,
                preview_id,
            )
            # only the latest draft per target stays postable
            stale = project.preview_by_target.get(target_move_id)
            if stale is not None:
                project.previews.pop(stale, None)
            project.preview_by_target[target_move_id] = preview_id
            project.previews[preview_id] = draft
            return draft

    def post_preview(
        self, project_id: str, thread_id: str, preview_id: str
    ) -> Iterator[dict]:
        """Turn an accepted what-if draft into a real move; then distill."""
        project = self.project(project_id)
        with project.lock:
            if preview_id not in project.previews:
                raise UnknownPreview(f"no active preview {preview_id!r}")
            draft = project.previews[preview_id]
            state = project.thread(thread_id)
            agent_id = draft.request.agent_id
            move = DeliberationMove(
                move_id=project.next_move_id(),
                author=agent_id,
                author_kind=AuthorKind.AGENT,
                act=draft.act,
                target=draft.request.target_move,
                body=draft.body,
                rationale=draft.rationale,
                citations=draft.citations,
                timestamp=state.next_timestamp(),
            )
            # legality is checked now, not at preview time
            validate_move(state, move)
            project.threads[thread_id] = apply_move(state, move)
            project.log.append(
                EventKind.MOVE_POSTED,
                {"thread_id": thread_id, "move": move.to_record(), "idempotency_key": None},
            )
            del project.previews[preview_id]
            project.preview_by_target.pop(draft.request.target_move, None)
            snippets = distill_after_turn(
                project.personas[agent_id],
                project.memory_for(agent_id),
                project.threads[thread_id],
                self.provider,
                created_at=project.log.last_seq,
                window=self.settings.distill_window,
            )
            if snippets:
                project.log.append(
                    EventKind.MEMORY_DISTILLED,
                    {
                        "agent_id": agent_id,
                        "snippets": [s.to_record() for s in snippets],
                    },
                )
            item = {"kind": "agent_move", "thread_id": thread_id, "move": move.to_record()}
            if move.citations:
                rendered = self.render_move_citations(project, move)
                item["bibliography"] = [e.to_record() for e in rendered.bibliography]
            yield item

    # ------------------------------------------------------------------
    # proposal and personas

    def edit_proposal(
        self,
        project_id: str,
        section: str,
        new_text: str,
        base_digest: str | None = None,
    ) -> ProposalRevision | None:
        project = self.project(project_id)
        with project.lock:
            revision = project.proposal.record_edit(
                section, new_text, base_digest, timestamp=project.log.last_seq + 1
            )
            if revision is not None:
                project.log.append(
                    EventKind.PROPOSAL_EDITED,
                    {
                        "section": section,
                        "new_text": new_text,
                        "revision": revision.to_record(),
                    },
                )
            return revision

    def append_note(self, project_id: str, note: str) -> ProposalRevision | None:
        project = self.project(project_id)
        with project.lock:
            merged = project.proposal.section_text("Notes")
            merged = f"{merged}\n{note}" if merged else note
            return self.edit_proposal(project_id, "Notes", merged)

    def edit_persona(
        self, project_id: str, agent_id: str, persona_data: Mapping
    ) -> AgentPersona:
        """Replace a roster member's persona card mid-project."""
        project = self.project(project_id)
        with project.lock:
            if agent_id not in project.roster:
                raise UnknownAgent(f"{agent_id!r} is not on the roster")
            persona = AgentPersona.from_dict(persona_data)
            if persona.agent_id != agent_id:
                raise ValueError(
                    f"persona agent_id {persona.agent_id!r} does not match {agent_id!r}"
                )
            project.personas[agent_id] = persona
            project.log.append(
                EventKind.PERSONA_EDITED,
                {"agent_id": agent_id, "persona": persona.to_dict()},
            )
            return persona

    # ------------------------------------------------------------------
    # reads

    def thread_tree(self, project_id: str, thread_id: str) -> dict:
        project = self.project(project_id)
        state = project.thread(thread_id)
        children: dict[str, list[DeliberationMove]] = {}
        for move in state.moves:
            if move.target is not None:
                children.setdefault(move.target, []).append(move)

        def node(move: DeliberationMove) -> dict:
            return {
                "move": move.to_record(),
                "children": [node(c) for c in children.get(move.move_id, [])],
            }

        root = state.root
        return {
            "thread_id": thread_id,
            "title": project.thread_titles.get(thread_id, ""),
            "tree": node(root) if root else None,
        }

    def mindmap(self, project_id: str) -> MindMapGraph:
        project = self.project(project_id)
        return build_graph(
            [project.threads[t] for t in project.threads],
            project.thread_titles,
            self.provider,
            cache=self._label_cache,
            branch_links=project.branch_links,
        )

    def memory_views(self, project_id: str, agent_id: str) -> dict:
        project = self.project(project_id)
        memory = project.memory_for(agent_id)
        return {
            "stream": [s.to_record() for s in memory.stream_view()],
            "lineage": [n.to_record() for n in memory.lineage_view()],
        }

    def render_move_citations(
        self, project: ProjectState, move: DeliberationMove
    ) -> RenderedCitations:
        return format_citations(move.body, project.graph.papers_by_id())

    def bibliography(self, project_id: str, thread_id: str, move_id: str) -> dict:
        project = self.project(project_id)
        move = project.thread(thread_id).find(move_id)
        if move is None:
            raise UnknownMove(f"move {move_id!r} not in thread {thread_id}")
        rendered = self.render_move_citations(project, move)
        return {
            "move_id": move_id,
            "body": rendered.body,
            "bibliography": [e.to_record() for e in rendered.bibliography],
        }

    def paper(self, project_id: str, paper_id: str) -> PaperRecord:
        return self.project(project_id).graph.get_paper(paper_id)

    def state_digest(self, project_id: str) -> str:
        """Deterministic fingerprint of everything a project holds."""
        project = self.project(project_id)
        snapshot = {
            "project_id": project.project_id,
            "title": project.title,
            "roster": list(project.roster),
            "personas": {a: p.to_dict() for a, p in sorted(project.personas.items())},
            "proposal": project.proposal.to_snapshot(),
            "threads": {
                t: thread_snapshot(state) for t, state in project.threads.items()
            },
            "thread_titles": dict(project.thread_titles),
            "branch_links": [b.to_record() for b in project.branch_links],
            "memories": {
                a: m.to_records() for a, m in sorted(project.memories.items())
            },
            "graph": project.graph.to_snapshot(),
            "last_seq": project.log.last_seq,
        }
        return digest(snapshot)

    def verify_project(self, project_id: str) -> list[str]:
        """Every module invariant, checked in one sweep."""
        project = self.project(project_id)
        problems: list[str] = []
        for thread_id, state in project.threads.items():
            for issue in verify_thread(state):
                problems.append(f"{thread_id}: {issue}")
            for move in state.moves:
                for key in move.citations:
                    if not project.graph.has_paper(key):
                        problems.append(
                            f"{thread_id}/{move.move_id}: cites unknown paper {key!r}"
                        )
        problems.extend(project.proposal.verify())
        for agent_id, memory in project.memories.items():
            for issue in memory.verify():
                problems.append(f"memory[{agent_id}]: {issue}")
        problems.extend(project.graph.verify())
        problems.extend(verify_branch_links(project.branch_links))
        for link in project.branch_links:
            if link.thread_id not in project.threads:
                problems.append(f"branch link to unknown thread {link.thread_id}")
            elif link.source_thread_id not in project.threads:
                problems.append(
                    f"branch source thread {link.source_thread_id} unknown"
                )
            elif project.threads[link.source_thread_id].find(link.source_move_id) is None:
                problems.append(
                    f"branch source move {link.source_move_id} unknown"
                )
        problems.extend(project.log.verify())
        return problems

    def export_project(self, project_id: str) -> str:
        """One plain-text document: proposal, revisions, transcripts, graph."""
        project = self.project(project_id)
        lines: list[str] = [f"# project {project.project_id}: {project.title}", ""]
        lines.append("## roster")
        for agent_id in project.roster:
            persona = project.personas[agent_id]
            lines.append(f"- {agent_id}: {persona.research_area}")
        lines.append("")
        for section in PROPOSAL_SECTIONS:
            lines.append(f"## proposal / {section}")
            lines.append(project.proposal.section_text(section))
            lines.append("")
        lines.append("## proposal revisions")
        for revision in project.proposal.revisions:
            lines.append(
                f"- r{revision.seq} {revision.section}: "
                f"{revision.before_digest[:12]} -> {revision.after_digest[:12]}"
            )
        lines.append("")
        for thread_id, state in project.threads.items():
            title = project.thread_titles.get(thread_id, "")
            lines.append(f"## thread {thread_id}: {title}")
            lines.append("```jsonl")
            lines.append(thread_to_jsonl(state).rstrip("\n"))
            lines.append("```")
            lines.append("")
        if project.branch_links:
            lines.append("## branch provenance")
            for link in project.branch_links:
                lines.append(
                    f"- {link.thread_id} grew from "
                    f"{link.source_thread_id}/{link.source_move_id}"
                )
            lines.append("")
        lines.append("## knowledge graph")
        for record in project.graph.papers():
            lines.append(
                f"- {record.paper_id}: {record.title} "
                f"({record.first_author}, {record.year})"
            )
        lines.append("")
        lines.append(f"state digest: {self.state_digest(project_id)}")
        return "\n".join(lines) + "\n"

    # ------------------------------------------------------------------
    # replay

    def _apply_event(self, project_id: str, event: Event) -> None:
        kind = event.kind
        payload = event.payload
        try:
            if kind is EventKind.PROJECT_CREATED:
                project = ProjectState(
                    project_id=payload["project_id"],
                    title=payload["title"],
                    roster=list(payload["roster"]),
                    personas={
                        a: AgentPersona.from_dict(p)
                        for a, p in payload["personas"].items()
                    },
                    proposal=ProposalDocument(payload["proposal_sections"]),
                    log=EventLog(),
                )
                self.projects[project.project_id] = project
                return
            project = self.project(project_id)
            if kind is EventKind.THREAD_CREATED:
                thread_id = payload["thread_id"]
                root = DeliberationMove.from_record(payload["root"])
                state = apply_move(new_thread(thread_id), root)
                project.threads[thread_id] = state
                project.thread_titles[thread_id] = payload["title"]
                if payload.get("branch_of"):
                    b = payload["branch_of"]
                    project.branch_links.append(
                        BranchLink(
                            thread_id=b["thread_id"],
                            source_thread_id=b["source_thread_id"],
                            source_move_id=b["source_move_id"],
                        )
                    )
                project._bump_counters(move_id=root.move_id, thread_id=thread_id)
            elif kind is EventKind.MOVE_POSTED:
                thread_id = payload["thread_id"]
                move = DeliberationMove.from_record(payload["move"])
                project.threads[thread_id] = apply_move(
                    project.thread(thread_id), move
                )
                project._bump_counters(move_id=move.move_id)
                key = payload.get("idempotency_key")
                if key:
                    project.idempotency.setdefault(key, []).append(
                        {
                            "kind": "agent_move" if move.is_agent else "user_move",
                            "thread_id": thread_id,
                            "move": move.to_record(),
                        }
                    )
            elif kind is EventKind.PROPOSAL_EDITED:
                revision = project.proposal.record_edit(
                    payload["section"],
                    payload["new_text"],
                    timestamp=payload["revision"]["timestamp"],
                )
                expected = payload["revision"]["after_digest"]
                if revision is None or revision.after_digest != expected:
                    raise CorruptPayload(
                        f"event {event.seq}: proposal edit digest mismatch"
                    )
            elif kind is EventKind.PERSONA_EDITED:
                project.personas[payload["agent_id"]] = AgentPersona.from_dict(
                    payload["persona"]
                )
            elif kind is EventKind.MEMORY_DISTILLED:
                memory = project.memory_for(payload["agent_id"])
                for record in payload["snippets"]:
                    memory.add_record(record)
            elif kind is EventKind.PAPER_INSERTED:
                record = PaperRecord.from_record(payload["record"])
                project.graph.insert_paper(
                    record, contributed_by=payload.get("contributed_by")
                )
        except CorruptPayload:
            raise
        except (KeyError, TypeError, ValueError, ProtocolError) as exc:
            raise CorruptPayload(f"event {event.seq} ({kind.value}): {exc}") from exc

    def load_project(self, events: Iterable[Event]) -> ProjectState:
        """Rebuild one project from its event sequence (crash recovery)."""
        events = list(events)
        if not events:
            raise ValueError("cannot load a project from an empty event list")
        first = events[0]
        if first.kind is not EventKind.PROJECT_CREATED:
            raise CorruptPayload("event 1 must be project_created")
        project_id = first.payload.get("project_id", "")
        expected = 0
        for event in events:
            expected += 1
            if event.seq != expected:
                raise GapInLog(expected, event.seq)
            self._apply_event(project_id, event)
        project = self.project(project_id)
        project.log = EventLog(self._event_path(project_id))
        project.log.extend_replayed(events)
        self._project_counter = max(
            self._project_counter,
            int(project_id[1:]) if project_id[1:].isdigit() else 0,
        )
        return project
