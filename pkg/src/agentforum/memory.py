"""Per-agent working memory built from distilled discussion snippets.

After each posted turn an agent distills short snippets from the recent
moves. A snippet may refine earlier snippets of the same agent; the first
entry in ``refines`` is its primary parent and any further entries are
cross-links. Because a snippet can only refine snippets that already
exist, the lineage is acyclic by construction.

Two read views over the same snippet set:

* stream: chronological list, newest last.
* lineage: forest rooted at snippets with no parent, children ordered by
  creation, cross-links carried on the node.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Iterator, Mapping

from .providers import SnippetDraft


class SnippetKind(str, Enum):
    HYPOTHESIS = "hypothesis"
    QUESTION = "question"
    RATIONALE_SHIFT = "rationale_shift"
    METHODOLOGICAL_CONSIDERATION = "methodological_consideration"


class MemoryError(ValueError):
    """Snippet violates lineage rules."""


@dataclass(frozen=True)
class MemorySnippet:
    snippet_id: str
    agent_id: str
    kind: SnippetKind
    text: str
    refines: tuple[str, ...] = ()
    created_at: int = 0
    source_window: tuple[str, str] = ("", "")

    @property
    def primary_parent(self) -> str | None:
        return self.refines[0] if self.refines else None

    @property
    def cross_links(self) -> tuple[str, ...]:
        return self.refines[1:]

    def to_record(self) -> dict:
        return {
            "snippet_id": self.snippet_id,
            "agent_id": self.agent_id,
            "kind": self.kind.value,
            "text": self.text,
            "refines": list(self.refines),
            "created_at": self.created_at,
            "source_window": list(self.source_window),
        }

    @classmethod
    def from_record(cls, record: Mapping) -> "MemorySnippet":
        window = tuple(record.get("source_window", ("", "")))
        if len(window) != 2:
            raise MemoryError(f"source_window must have two move ids, got {window!r}")
        return cls(
            snippet_id=record["snippet_id"],
            agent_id=record["agent_id"],
            kind=SnippetKind(record["kind"]),
            text=record["text"],
            refines=tuple(record.get("refines", ())),
            created_at=int(record.get("created_at", 0)),
            source_window=window,  # type: ignore[arg-type]
        )


@dataclass(frozen=True)
class MemoryNode:
    snippet: MemorySnippet
    children: tuple["MemoryNode", ...] = ()

    def to_record(self) -> dict:
        return {
            "snippet": self.snippet.to_record(),
            "children": [c.to_record() for c in self.children],
        }


class AgentMemory:
    """Snippet store for one agent within one project."""

    def __init__(self, agent_id: str):
        self.agent_id = agent_id
        self._snippets: dict[str, MemorySnippet] = {}
        self._counter = 0

    def __len__(self) -> int:
        return len(self._snippets)

    def __contains__(self, snippet_id: str) -> bool:
        return snippet_id in self._snippets

    def get(self, snippet_id: str) -> MemorySnippet:
        return self._snippets[snippet_id]

    def add_draft(
        self,
        draft: SnippetDraft,
        source_window: tuple[str, str],
        created_at: int,
    ) -> MemorySnippet:
        self._counter += 1
        snippet = MemorySnippet(
            snippet_id=f"{self.agent_id}-s{self._counter}",
            agent_id=self.agent_id,
            kind=SnippetKind(draft.kind),
            text=draft.text,
            refines=tuple(draft.refines),
            created_at=created_at,
            source_window=source_window,
        )
        return self._insert(snippet)

    def add_record(self, record: Mapping) -> MemorySnippet:
        """Re-insert a snippet from its event record (replay path)."""
        snippet = MemorySnippet.from_record(record)
        inserted = self._insert(snippet)
        # keep the id counter ahead of replayed ids
        tail = snippet.snippet_id.rsplit("-s", 1)[-1]
        if tail.isdigit():
            self._counter = max(self._counter, int(tail))
        return inserted

    def _insert(self, snippet: MemorySnippet) -> MemorySnippet:
        if snippet.snippet_id in self._snippets:
            raise MemoryError(f"duplicate snippet id {snippet.snippet_id!r}")
        if snippet.agent_id != self.agent_id:
            raise MemoryError(
                f"snippet {snippet.snippet_id!r} belongs to {snippet.agent_id!r}, "
                f"store is for {self.agent_id!r}"
            )
        seen: set[str] = set()
        for ref in snippet.refines:
            if ref == snippet.snippet_id:
                raise MemoryError(f"snippet {snippet.snippet_id!r} refines itself")
            if ref in seen:
                raise MemoryError(f"snippet {snippet.snippet_id!r} repeats refine {ref!r}")
            if ref not in self._snippets:
                raise MemoryError(
                    f"snippet {snippet.snippet_id!r} refines unknown snippet {ref!r}"
                )
            seen.add(ref)
        self._snippets[snippet.snippet_id] = snippet
        return snippet

    def stream_view(self) -> tuple[MemorySnippet, ...]:
        return tuple(
            sorted(self._snippets.values(), key=lambda s: (s.created_at, s.snippet_id))
        )

    def lineage_view(self) -> tuple[MemoryNode, ...]:
        children: dict[str | None, list[MemorySnippet]] = {}
        for snippet in self.stream_view():
            children.setdefault(snippet.primary_parent, []).append(snippet)

        def build(snippet: MemorySnippet) -> MemoryNode:
            kids = tuple(build(c) for c in children.get(snippet.snippet_id, ()))
            return MemoryNode(snippet=snippet, children=kids)

        return tuple(build(root) for root in children.get(None, ()))

    def recent(self, k: int = 5) -> tuple[MemorySnippet, ...]:
        stream = self.stream_view()
        return stream[-k:] if k > 0 else ()

    def conditioning_set(self, k: int = 5) -> tuple[MemorySnippet, ...]:
        """Most recent k snippets plus their lineage ancestors, stream order."""
        picked = {s.snippet_id for s in self.recent(k)}
        frontier = list(picked)
        while frontier:
            snippet = self._snippets[frontier.pop()]
            for ref in snippet.refines:
                if ref in self._snippets and ref not in picked:
                    picked.add(ref)
                    frontier.append(ref)
        return tuple(s for s in self.stream_view() if s.snippet_id in picked)

    def to_records(self) -> list[dict]:
        return [s.to_record() for s in self.stream_view()]

    def verify(self) -> list[str]:
        """Lineage invariants; empty list when sound."""
        problems: list[str] = []
        order = {s.snippet_id: i for i, s in enumerate(self.stream_view())}
        for snippet in self._snippets.values():
            for ref in snippet.refines:
                if ref not in self._snippets:
                    problems.append(f"{snippet.snippet_id}: dangling refine {ref}")
                elif order[ref] >= order[snippet.snippet_id]:
                    problems.append(
                        f"{snippet.snippet_id}: refine {ref} does not precede it"
                    )
        stream_ids = {s.snippet_id for s in self.stream_view()}
        forest_ids = {n.snippet.snippet_id for n in iter_forest(self.lineage_view())}
        if stream_ids != forest_ids:
            problems.append("stream and lineage views cover different snippets")
        return problems


def iter_forest(roots: tuple[MemoryNode, ...]) -> Iterator[MemoryNode]:
    stack = list(reversed(roots))
    while stack:
        node = stack.pop()
        yield node
        stack.extend(reversed(node.children))
