"""Act-labeled argument graph derived from forum state.

One node per move; the root move's node doubles as the thread node (its
``source`` is the thread id). Every non-root move contributes exactly one
edge to its target's node, labeled with the move's act, or with the
neutral ``REPLY`` marker for human free-text posts, and carrying the
move's rationale verbatim.

Labels come in three zoom levels. ``summary`` is one or two sentences
from the label provider (falling back to the first 60 characters of the
body when the provider is down); ``keyword`` is the first six words of
the summary, so its length never exceeds the summary's; ``overview``
collapses move nodes entirely and shows thread titles only. Labels are
cached by body digest and recomputed only when the source move changes.

Two interchangeable exports round-trip the graph: node-link JSON and a
plain line-oriented description (``mindmap v1``).
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Mapping, Sequence

from .digests import text_digest
from .forum import BranchLink
from .protocol import ThreadState
from .providers import LanguageModelProvider, ProviderUnavailable

REPLY_MARKER = "REPLY"
KEYWORD_WORDS = 6
FALLBACK_CHARS = 60


class ZoomLevel(str, Enum):
    OVERVIEW = "overview"
    KEYWORD = "keyword"
    SUMMARY = "summary"


@dataclass(frozen=True)
class MindMapNode:
    node_id: str
    thread_id: str
    source: str  # thread_id for the root node, move_id otherwise
    keyword: str
    summary: str
    title: str = ""  # thread title, set on root nodes only

    @property
    def is_root(self) -> bool:
        return self.source == self.thread_id


@dataclass(frozen=True)
class MindMapEdge:
    source: str  # node of the replying move
    target: str  # node of the move it answers
    act: str  # one of the five acts, or REPLY for human posts
    rationale: str


@dataclass(frozen=True)
class Locator:
    thread_id: str
    move_id: str | None


@dataclass(frozen=True)
class MindMapGraph:
    nodes: tuple[MindMapNode, ...] = ()
    edges: tuple[MindMapEdge, ...] = ()
    #: cross-thread provenance, kept apart from act edges (hidden by default)
    branch_links: tuple[BranchLink, ...] = ()

    def node(self, node_id: str) -> MindMapNode:
        for node in self.nodes:
            if node.node_id == node_id:
                return node
        raise KeyError(f"no mind-map node {node_id!r}")


def _first_words(text: str, n: int) -> str:
    return " ".join(text.split()[:n])


def _fallback_summary(body: str) -> str:
    body = " ".join(body.split())
    if len(body) <= FALLBACK_CHARS:
        return body
    return body[:FALLBACK_CHARS].rstrip() + "..."


class LabelCache:
    """Summary labels keyed by (source id, body digest)."""

    def __init__(self):
        self._cache: dict[tuple[str, str], str] = {}

    def summary_for(
        self, source_id: str, body: str, provider: LanguageModelProvider
    ) -> str:
        key = (source_id, text_digest(body))
        if key not in self._cache:
            try:
                summary = provider.label({"body": body})
            except ProviderUnavailable:
                summary = _fallback_summary(body)
            self._cache[key] = summary
        return self._cache[key]


def build_graph(
    threads: Sequence[ThreadState],
    titles: Mapping[str, str],
    provider: LanguageModelProvider,
    cache: LabelCache | None = None,
    branch_links: Iterable[BranchLink] = (),
) -> MindMapGraph:
    """Pure derivation: same forum state, same graph."""
    cache = cache or LabelCache()
    nodes: list[MindMapNode] = []
    edges: list[MindMapEdge] = []
    for state in threads:
        title = titles.get(state.thread_id, "")
        for move in state.moves:
            is_root = move.target is None
            if is_root:
                body_summary = cache.summary_for(move.move_id, move.body, provider)
                summary = f"{title}. {body_summary}" if title else body_summary
                keyword = title or _first_words(summary, KEYWORD_WORDS)
            else:
                summary = cache.summary_for(move.move_id, move.body, provider)
                keyword = _first_words(summary, KEYWORD_WORDS)
            nodes.append(
                MindMapNode(
                    node_id=move.move_id,
                    thread_id=state.thread_id,
                    source=state.thread_id if is_root else move.move_id,
                    keyword=keyword,
                    summary=summary,
                    title=title if is_root else "",
                )
            )
            if not is_root:
                edges.append(
                    MindMapEdge(
                        source=move.move_id,
                        target=move.target,
                        act=move.act.value if move.act else REPLY_MARKER,
                        rationale=move.rationale,
                    )
                )
    return MindMapGraph(
        nodes=tuple(nodes), edges=tuple(edges), branch_links=tuple(branch_links)
    )


def label_at(node: MindMapNode, zoom: ZoomLevel | str) -> str:
    """The node's text at a zoom level; move nodes collapse at overview."""
    zoom = ZoomLevel(zoom)
    if zoom is ZoomLevel.OVERVIEW:
        return node.title if node.is_root else ""
    if zoom is ZoomLevel.KEYWORD:
        return node.keyword
    return node.summary


def rationale_of(edge: MindMapEdge) -> str:
    """The posting agent's reasoning, verbatim; empty for human replies."""
    return edge.rationale


def source_of(node: MindMapNode) -> Locator:
    """Where a click lands: the thread for root nodes, else the move."""
    if node.is_root:
        return Locator(thread_id=node.thread_id, move_id=None)
    return Locator(thread_id=node.thread_id, move_id=node.source)


def to_node_link(graph: MindMapGraph) -> dict:
    return {
        "directed": True,
        "nodes": [
            {
                "id": n.node_id,
                "thread_id": n.thread_id,
                "source": n.source,
                "keyword": n.keyword,
                "summary": n.summary,
                "title": n.title,
            }
            for n in graph.nodes
        ],
        "links": [
            {
                "source": e.source,
                "target": e.target,
                "act": e.act,
                "rationale": e.rationale,
            }
            for e in graph.edges
        ],
        "branch_links": [b.to_record() for b in graph.branch_links],
    }


def from_node_link(data: Mapping) -> MindMapGraph:
    nodes = tuple(
        MindMapNode(
            node_id=n["id"],
            thread_id=n["thread_id"],
            source=n["source"],
            keyword=n["keyword"],
            summary=n["summary"],
            title=n.get("title", ""),
        )
        for n in data.get("nodes", ())
    )
    edges = tuple(
        MindMapEdge(
            source=e["source"],
            target=e["target"],
            act=e["act"],
            rationale=e.get("rationale", ""),
        )
        for e in data.get("links", ())
    )
    links = tuple(
        BranchLink(
            thread_id=b["thread_id"],
            source_thread_id=b["source_thread_id"],
            source_move_id=b["source_move_id"],
        )
        for b in data.get("branch_links", ())
    )
    return MindMapGraph(nodes=nodes, edges=edges, branch_links=links)


_TEXT_HEADER = "mindmap v1"


def to_text(graph: MindMapGraph) -> str:
    """Plain line format for desk inspection; round-trips via from_text."""
    lines = [_TEXT_HEADER]
    for n in graph.nodes:
        lines.append(
            f"node {n.node_id} thread={n.thread_id} source={n.source} "
            f"title={json.dumps(n.title, ensure_ascii=False)} "
            f"keyword={json.dumps(n.keyword, ensure_ascii=False)} "
            f"summary={json.dumps(n.summary, ensure_ascii=False)}"
        )
    for e in graph.edges:
        lines.append(
            f"edge {e.source} -> {e.target} act={e.act} "
            f"rationale={json.dumps(e.rationale, ensure_ascii=False)}"
        )
    for b in graph.branch_links:
        lines.append(f"branch {b.thread_id} source={b.source_thread_id}/{b.source_move_id}")
    return "\n".join(lines) + "\n"


_NODE_RE = re.compile(r"^node (\S+) thread=(\S+) source=(\S+) title=")
_EDGE_RE = re.compile(r"^edge (\S+) -> (\S+) act=(\S+) rationale=")
_BRANCH_RE = re.compile(r"^branch (\S+) source=([^/\s]+)/(\S+)$")
_DECODER = json.JSONDecoder()


def _take_json_string(line: str, key: str, start: int) -> tuple[str, int]:
    marker = f"{key}="
    at = line.index(marker, start) + len(marker)
    value, end = _DECODER.raw_decode(line, at)
    return value, end


def from_text(text: str) -> MindMapGraph:
    lines = text.splitlines()
    if not lines or lines[0] != _TEXT_HEADER:
        raise ValueError(f"not a {_TEXT_HEADER!r} document")
    nodes: list[MindMapNode] = []
    edges: list[MindMapEdge] = []
    branch_links: list[BranchLink] = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        if line.startswith("node "):
            match = _NODE_RE.match(line)
            if not match:
                raise ValueError(f"line {lineno}: malformed node")
            title, end = _take_json_string(line, "title", match.end(3))
            keyword, end = _take_json_string(line, "keyword", end)
            summary, _ = _take_json_string(line, "summary", end)
            nodes.append(
                MindMapNode(
                    node_id=match.group(1),
                    thread_id=match.group(2),
                    source=match.group(3),
                    keyword=keyword,
                    summary=summary,
                    title=title,
                )
            )
        elif line.startswith("edge "):
            match = _EDGE_RE.match(line)
            if not match:
                raise ValueError(f"line {lineno}: malformed edge")
            rationale, _ = _take_json_string(line, "rationale", match.end(3))
            edges.append(
                MindMapEdge(
                    source=match.group(1),
                    target=match.group(2),
                    act=match.group(3),
                    rationale=rationale,
                )
            )
        elif line.startswith("branch "):
            match = _BRANCH_RE.match(line)
            if not match:
                raise ValueError(f"line {lineno}: malformed branch link")
            branch_links.append(
                BranchLink(
                    thread_id=match.group(1),
                    source_thread_id=match.group(2),
                    source_move_id=match.group(3),
                )
            )
        else:
            raise ValueError(f"line {lineno}: unknown record {line.split()[0]!r}")
    return MindMapGraph(
        nodes=tuple(nodes), edges=tuple(edges), branch_links=tuple(branch_links)
    )
