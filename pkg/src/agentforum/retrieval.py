"""Literature search, the shared knowledge graph, and citation rendering.

Search runs against pluggable clients (bundled fixture corpora stand in
for live scholarly APIs). Results from multiple sources are deduplicated
by DOI first, then by normalized title, and interleaved round-robin so no
single source dominates. One failing source is tolerated and logged; the
search only errors when every source fails.

Retrieved papers feed a per-project knowledge graph holding paper nodes,
sentence snippets split from abstracts, and keyword entities. Every
snippet carries one citation-trace edge back to its paper; entity edges
link snippets to the terms they mention. Queries rank snippets by token
overlap and return each snippet with its trace.

Reply bodies cite papers with ``[cite:<paper_id>]`` markers;
``format_citations`` renumbers them ``[1]..[n]`` in order of first
appearance and builds the matching bibliography.
"""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Iterable, Mapping, Protocol

logger = logging.getLogger(__name__)


class SourceProvider(str, Enum):
    SCHOLAR_API_A = "scholar_api_A"
    SCHOLAR_API_B = "scholar_api_B"
    MANUAL = "manual"


class UnknownPaper(ValueError):
    """Body cites a paper the project has never seen."""


class AllProvidersFailed(RuntimeError):
    """Every search source errored for a query."""


@dataclass(frozen=True)
class PaperRecord:
    paper_id: str
    title: str
    authors: tuple[str, ...]
    year: int
    abstract: str = ""
    external_ids: Mapping[str, str] = field(default_factory=dict)
    provider: SourceProvider = SourceProvider.MANUAL

    @property
    def doi(self) -> str | None:
        return self.external_ids.get("doi")

    @property
    def first_author(self) -> str:
        return self.authors[0] if self.authors else "Unknown"

    def to_record(self) -> dict:
        return {
            "paper_id": self.paper_id,
            "title": self.title,
            "authors": list(self.authors),
            "year": self.year,
            "abstract": self.abstract,
            "external_ids": dict(self.external_ids),
            "provider": self.provider.value,
        }

    @classmethod
    def from_record(cls, record: Mapping) -> "PaperRecord":
        return cls(
            paper_id=record["paper_id"],
            title=record["title"],
            authors=tuple(record.get("authors", ())),
            year=int(record["year"]),
            abstract=record.get("abstract", ""),
            external_ids=dict(record.get("external_ids", {})),
            provider=SourceProvider(record.get("provider", "manual")),
        )


_TOKEN_RE = re.compile(r"[a-z0-9]+")
_SENTENCE_RE = re.compile(r"(?<=[.!?])\s+")
_STOP_TOKENS = frozenset(
    "with from that this these those their there into over under about "
    "between against towards through while where which".split()
)


def tokenize(text: str) -> tuple[str, ...]:
    return tuple(_TOKEN_RE.findall(text.lower()))


def normalized_title(title: str) -> str:
    return " ".join(tokenize(title))


def split_sentences(text: str) -> tuple[str, ...]:
    return tuple(s.strip() for s in _SENTENCE_RE.split(text.strip()) if s.strip())


def make_paper_id(title: str, authors: Iterable[str], year: int) -> str:
    """Stable id for manually added papers."""
    authors = tuple(authors)
    surname = "anon"
    if authors:
        parts = tokenize(authors[0])
        if parts:
            surname = parts[-1]
    title_words = [w for w in tokenize(title) if len(w) > 3]
    head = title_words[0] if title_words else "untitled"
    return f"{surname}{year}{head}"


def record_from_raw(raw: Mapping, provider: SourceProvider) -> PaperRecord:
    external_ids = dict(raw.get("external_ids", {}))
    for key in ("doi", "venue"):
        if raw.get(key):
            external_ids.setdefault(key, raw[key])
    paper_id = raw.get("paper_id") or make_paper_id(
        raw["title"], raw.get("authors", ()), int(raw["year"])
    )
    return PaperRecord(
        paper_id=paper_id,
        title=raw["title"],
        authors=tuple(raw.get("authors", ())),
        year=int(raw["year"]),
        abstract=raw.get("abstract", ""),
        external_ids=external_ids,
        provider=provider,
    )


class SearchClient(Protocol):
    provider: SourceProvider

    def search(self, query: str, limit: int = 5) -> tuple[PaperRecord, ...]: ...


class FixtureSearchClient:
    """Token-overlap search over a bundled JSON corpus."""

    def __init__(self, provider: SourceProvider, corpus_path: Path | str):
        self.provider = provider
        with open(corpus_path, "r", encoding="utf-8") as fh:
            raw_records = json.load(fh)
        self._records = tuple(record_from_raw(r, provider) for r in raw_records)

    def __len__(self) -> int:
        return len(self._records)

    def search(self, query: str, limit: int = 5) -> tuple[PaperRecord, ...]:
        query_tokens = set(tokenize(query))
        if not query_tokens:
            return ()
        scored: list[tuple[int, str, PaperRecord]] = []
        for record in self._records:
            doc_tokens = set(tokenize(record.title)) | set(tokenize(record.abstract))
            score = len(query_tokens & doc_tokens)
            if score > 0:
                scored.append((score, record.paper_id, record))
        scored.sort(key=lambda item: (-item[0], item[1]))
        return tuple(record for _, _, record in scored[:limit])


class HttpSearchClient:
    """Search against a live scholarly endpoint returning JSON records."""

    def __init__(
        self,
        provider: SourceProvider,
        base_url: str,
        api_key: str = "",
        client=None,
    ):
        import httpx

        self.provider = provider
        self._base_url = base_url.rstrip("/")
        self._api_key = api_key
        self._client = client or httpx.Client(timeout=20.0)

    def search(self, query: str, limit: int = 5) -> tuple[PaperRecord, ...]:
        headers = {"x-api-key": self._api_key} if self._api_key else {}
        response = self._client.get(
            f"{self._base_url}/search",
            params={"query": query, "limit": limit},
            headers=headers,
        )
        response.raise_for_status()
        payload = response.json()
        raw_records = payload["results"] if isinstance(payload, dict) else payload
        return tuple(record_from_raw(r, self.provider) for r in raw_records[:limit])


def merge_results(
    per_client: Iterable[tuple[PaperRecord, ...]], limit: int
) -> tuple[PaperRecord, ...]:
    """Round-robin interleave with DOI-then-title dedup, first hit wins."""
    queues = [list(results) for results in per_client]
    merged: list[PaperRecord] = []
    seen_dois: set[str] = set()
    seen_titles: set[str] = set()
    while len(merged) < limit and any(queues):
        for queue in queues:
            if not queue:
                continue
            record = queue.pop(0)
            doi = record.doi.strip().lower() if record.doi else None
            title_key = normalized_title(record.title)
            if (doi and doi in seen_dois) or title_key in seen_titles:
                continue
            if doi:
                seen_dois.add(doi)
            seen_titles.add(title_key)
            merged.append(record)
            if len(merged) >= limit:
                break
    return tuple(merged)


def search_papers(
    query: str, providers: Iterable[SearchClient], limit: int = 8
) -> tuple[PaperRecord, ...]:
    if not query.strip():
        raise ValueError("query must be non-empty")
    if limit < 1:
        raise ValueError("limit must be at least 1")
    providers = tuple(providers)
    per_client: list[tuple[PaperRecord, ...]] = []
    failures = 0
    for client in providers:
        try:
            per_client.append(client.search(query, limit))
        except Exception as exc:
            failures += 1
            logger.warning("search source %s failed: %s", client.provider.value, exc)
    if providers and failures == len(providers):
        raise AllProvidersFailed(f"all {failures} search sources failed for {query!r}")
    return merge_results(per_client, limit)


@dataclass(frozen=True)
class GraphEntity:
    entity_id: str
    label: str
    kind: str = "keyword"


@dataclass(frozen=True)
class GraphSnippet:
    snippet_id: str
    paper_id: str
    text: str


@dataclass(frozen=True)
class GraphEdge:
    kind: str  # "trace" (snippet -> paper) or "mentions" (snippet -> entity)
    source: str
    target: str


@dataclass(frozen=True)
class GraphDelta:
    paper_id: str
    created: bool
    snippets: tuple[str, ...] = ()
    entities: tuple[str, ...] = ()
    edges: tuple[GraphEdge, ...] = ()

    @property
    def empty(self) -> bool:
        return not (self.created or self.snippets or self.entities or self.edges)


@dataclass(frozen=True)
class GraphHit:
    snippet_id: str
    text: str
    trace: str  # paper_id the snippet came from
    score: int


def _entity_terms(text: str) -> tuple[str, ...]:
    """Keyword entities: distinctive long tokens, first few per snippet."""
    terms: list[str] = []
    for token in tokenize(text):
        if len(token) >= 6 and token not in _STOP_TOKENS and token not in terms:
            terms.append(token)
        if len(terms) >= 3:
            break
    return tuple(terms)


class KnowledgeGraph:
    """Project-local graph of papers, abstract snippets, and keyword entities."""

    def __init__(self):
        self._papers: dict[str, PaperRecord] = {}
        self._snippets: dict[str, GraphSnippet] = {}
        self._entities: dict[str, GraphEntity] = {}
        self._edges: list[GraphEdge] = []
        self._by_doi: dict[str, str] = {}
        self._by_title: dict[str, str] = {}
        self._collections: dict[str, list[str]] = {}
        self._journal: list[tuple[dict, str | None]] | None = None

    def start_journal(self) -> None:
        """Record subsequent insert attempts (for event capture)."""
        self._journal = []

    def drain_journal(self) -> list[tuple[dict, str | None]]:
        entries = self._journal or []
        self._journal = None
        return entries

    def __len__(self) -> int:
        return len(self._papers)

    def paper_ids(self) -> tuple[str, ...]:
        return tuple(self._papers)

    def has_paper(self, paper_id: str) -> bool:
        return paper_id in self._papers

    def get_paper(self, paper_id: str) -> PaperRecord:
        if paper_id not in self._papers:
            raise UnknownPaper(f"paper {paper_id!r} not in graph")
        return self._papers[paper_id]

    def papers(self) -> tuple[PaperRecord, ...]:
        return tuple(self._papers.values())

    def papers_by_id(self) -> dict[str, PaperRecord]:
        return dict(self._papers)

    def snippets(self) -> tuple[GraphSnippet, ...]:
        return tuple(self._snippets.values())

    def entities(self) -> tuple[GraphEntity, ...]:
        return tuple(self._entities.values())

    def edges(self) -> tuple[GraphEdge, ...]:
        return tuple(self._edges)

    def collection_view(self, agent_id: str) -> tuple[str, ...]:
        """Paper ids contributed during the given agent's turns."""
        return tuple(self._collections.get(agent_id, ()))

    def resolve(self, record: PaperRecord) -> str | None:
        """Id of an already-inserted duplicate, if any."""
        if record.doi:
            found = self._by_doi.get(record.doi.strip().lower())
            if found:
                return found
        return self._by_title.get(normalized_title(record.title))

    def insert_paper(
        self, record: PaperRecord, contributed_by: str | None = None
    ) -> GraphDelta:
        """Insert once; re-inserting a known paper yields an empty delta."""
        if not record.title:
            raise ValueError("paper title must be non-empty")
        if self._journal is not None:
            self._journal.append((record.to_record(), contributed_by))
        existing = self.resolve(record)
        if existing is not None:
            self._note_contribution(existing, contributed_by)
            return GraphDelta(paper_id=existing, created=False)
        paper_id = record.paper_id
        if paper_id in self._papers:
            # distinct paper collided on an id; disambiguate deterministically
            suffix = 2
            while f"{paper_id}-{suffix}" in self._papers:
                suffix += 1
            paper_id = f"{paper_id}-{suffix}"
            record = replace(record, paper_id=paper_id)
        self._papers[paper_id] = record
        if record.doi:
            self._by_doi[record.doi.strip().lower()] = paper_id
        self._by_title[normalized_title(record.title)] = paper_id
        self._note_contribution(paper_id, contributed_by)

        new_snippets: list[str] = []
        new_entities: list[str] = []
        new_edges: list[GraphEdge] = []
        for i, sentence in enumerate(split_sentences(record.abstract), start=1):
            sid = f"{paper_id}#s{i}"
            self._snippets[sid] = GraphSnippet(
                snippet_id=sid, paper_id=paper_id, text=sentence
            )
            new_snippets.append(sid)
            trace = GraphEdge(kind="trace", source=sid, target=paper_id)
            self._edges.append(trace)
            new_edges.append(trace)
            for term in _entity_terms(sentence):
                eid = f"kw:{term}"
                if eid not in self._entities:
                    self._entities[eid] = GraphEntity(entity_id=eid, label=term)
                    new_entities.append(eid)
                mention = GraphEdge(kind="mentions", source=sid, target=eid)
                self._edges.append(mention)
                new_edges.append(mention)
        return GraphDelta(
            paper_id=paper_id,
            created=True,
            snippets=tuple(new_snippets),
            entities=tuple(new_entities),
            edges=tuple(new_edges),
        )

    def _note_contribution(self, paper_id: str, agent_id: str | None) -> None:
        if agent_id is None:
            return
        collection = self._collections.setdefault(agent_id, [])
        if paper_id not in collection:
            collection.append(paper_id)

    def query(self, query: str, k: int = 5) -> tuple[GraphHit, ...]:
        if k < 1:
            raise ValueError("k must be at least 1")
        query_tokens = set(tokenize(query))
        if not query_tokens:
            return ()
        scored: list[GraphHit] = []
        for snippet in self._snippets.values():
            title = self._papers[snippet.paper_id].title
            doc_tokens = set(tokenize(snippet.text)) | set(tokenize(title))
            score = len(query_tokens & doc_tokens)
            if score > 0:
                scored.append(
                    GraphHit(
                        snippet_id=snippet.snippet_id,
                        text=snippet.text,
                        trace=snippet.paper_id,
                        score=score,
                    )
                )
        scored.sort(key=lambda hit: (-hit.score, hit.snippet_id))
        return tuple(scored[:k])

    def to_snapshot(self) -> dict:
        return {
            "papers": [p.to_record() for p in self._papers.values()],
            "snippets": [
                {"snippet_id": s.snippet_id, "paper_id": s.paper_id, "text": s.text}
                for s in self._snippets.values()
            ],
            "entities": [
                {"entity_id": e.entity_id, "label": e.label, "kind": e.kind}
                for e in self._entities.values()
            ],
            "edges": [
                {"kind": e.kind, "source": e.source, "target": e.target}
                for e in self._edges
            ],
            "collections": {k: list(v) for k, v in self._collections.items()},
        }

    def verify(self) -> list[str]:
        """Graph invariants; empty list when sound."""
        problems: list[str] = []
        for sid, snippet in self._snippets.items():
            if snippet.paper_id not in self._papers:
                problems.append(f"snippet {sid} points at missing paper")
        for edge in self._edges:
            if edge.kind == "trace":
                if edge.source not in self._snippets or edge.target not in self._papers:
                    problems.append(f"trace edge {edge.source}->{edge.target} dangles")
            elif edge.kind == "mentions":
                if edge.source not in self._snippets or edge.target not in self._entities:
                    problems.append(f"mentions edge {edge.source}->{edge.target} dangles")
            else:
                problems.append(f"unknown edge kind {edge.kind!r}")
        for paper_id, record in self._papers.items():
            if record.paper_id != paper_id:
                problems.append(f"paper {paper_id} stored under mismatched id")
        for agent_id, collection in self._collections.items():
            for paper_id in collection:
                if paper_id not in self._papers:
                    problems.append(
                        f"collection of {agent_id} references missing paper {paper_id}"
                    )
        return problems


CITE_RE = re.compile(r"\[cite:([A-Za-z0-9_.:\-]+)\]")


@dataclass(frozen=True)
class BibliographyEntry:
    index: int
    paper_id: str
    title: str
    first_author: str
    year: int

    def render(self) -> str:
        return f"[{self.index}] {self.title}. {self.first_author} ({self.year})."

    def to_record(self) -> dict:
        return {
            "index": self.index,
            "paper_id": self.paper_id,
            "title": self.title,
            "first_author": self.first_author,
            "year": self.year,
        }


@dataclass(frozen=True)
class RenderedCitations:
    body: str
    bibliography: tuple[BibliographyEntry, ...]


def extract_citation_keys(body: str) -> tuple[str, ...]:
    """Cited paper ids in order of first appearance."""
    keys: list[str] = []
    for match in CITE_RE.finditer(body):
        key = match.group(1)
        if key not in keys:
            keys.append(key)
    return tuple(keys)


def format_citations(
    body: str, papers: Mapping[str, PaperRecord]
) -> RenderedCitations:
    keys = extract_citation_keys(body)
    missing = [k for k in keys if k not in papers]
    if missing:
        raise UnknownPaper(f"unknown papers cited: {missing}")
    numbering = {key: i for i, key in enumerate(keys, start=1)}
    rendered = CITE_RE.sub(lambda m: f"[{numbering[m.group(1)]}]", body)
    bibliography = tuple(
        BibliographyEntry(
            index=numbering[key],
            paper_id=key,
            title=papers[key].title,
            first_author=papers[key].first_author,
            year=papers[key].year,
        )
        for key in keys
    )
    return RenderedCitations(body=rendered, bibliography=bibliography)


def fixture_path(name: str) -> Path:
    return Path(__file__).parent / "fixtures" / name


def default_search_clients() -> tuple[FixtureSearchClient, FixtureSearchClient]:
    return (
        FixtureSearchClient(
            SourceProvider.SCHOLAR_API_A, fixture_path("papers_scholar_api_A.json")
        ),
        FixtureSearchClient(
            SourceProvider.SCHOLAR_API_B, fixture_path("papers_scholar_api_B.json")
        ),
    )
