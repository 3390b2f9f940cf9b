"""Projects, proposals, @-mention routing, branching, and what-if requests.

A project groups a sectioned research proposal, a panel roster of agent
handles, and the threads discussed so far. Replies address agents with
``@Handle`` mentions; matching is case-insensitive, longest-match, and an
underscore in a handle matches either an underscore or a space in the
text, so ``@data science ethicist`` resolves to ``Data_Science_Ethicist``.
Matched spans are rewritten to the canonical handle (same length), which
makes parsing idempotent on the cleaned text. Unmatched ``@`` tokens stay
literal text.

Routing: mentioned agents respond, in mention order; with no mentions the
author of the parent post responds if it is an agent, and a human parent
leaves nobody to notify.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Mapping, Sequence

from .digests import text_digest
from .protocol import Act, DeliberationMove

PROPOSAL_SECTIONS = (
    "Motivation",
    "RelatedWork",
    "Methods",
    "PotentialOutcomes",
    "Notes",
)

RESPONDER_CAP = 8


class UnknownAgent(ValueError):
    """A mention names an agent that is not on the project roster."""


class UnknownMove(ValueError):
    """A referenced move does not exist."""


class SectionUnknown(ValueError):
    """Not one of the five proposal sections."""


class StaleEdit(ValueError):
    """Proposal edit based on an outdated section digest; rebase required."""


class Stance(str, Enum):
    AGREE = "agree"
    DISAGREE = "disagree"
    QUESTION = "question"


STANCE_TO_ACT: dict[Stance, Act] = {
    Stance.AGREE: Act.SUPPORT,
    Stance.DISAGREE: Act.REBUT,
    Stance.QUESTION: Act.QUESTION,
}


def stance_to_act(stance: Stance | str) -> Act:
    return STANCE_TO_ACT[Stance(stance)]


@dataclass(frozen=True)
class Mention:
    agent_id: str
    span: tuple[int, int]  # character range in the raw reply text, '@' included


_WORD_CHARS = frozenset(
    "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789_"
)


def _match_handle(text: str, start: int, handle: str) -> bool:
    """Does ``handle`` match ``text`` at ``start`` up to a token boundary?"""
    end = start + len(handle)
    if end > len(text):
        return False
    for offset, want in enumerate(handle):
        have = text[start + offset]
        if want == "_":
            if have not in ("_", " "):
                return False
        elif want.lower() != have.lower():
            return False
    return end >= len(text) or text[end] not in _WORD_CHARS


def parse_mentions(
    text: str, roster: Sequence[str]
) -> tuple[str, tuple[Mention, ...]]:
    """Find roster mentions; returns (cleaned text, mentions in textual order).

    Longest handle wins at each ``@``; matched spans are rewritten to the
    canonical handle; repeated mentions of one agent keep the first span
    only. Unmatched ``@`` tokens are left untouched and are not errors.
    """
    handles = sorted(roster, key=len, reverse=True)
    cleaned = list(text)
    mentions: list[Mention] = []
    seen: set[str] = set()
    i = 0
    while i < len(text):
        if text[i] != "@" or (i > 0 and text[i - 1] in _WORD_CHARS):
            i += 1
            continue
        matched = None
        for handle in handles:
            if _match_handle(text, i + 1, handle):
                matched = handle
                break
        if matched is None:
            i += 1
            continue
        end = i + 1 + len(matched)
        cleaned[i + 1 : end] = matched
        if matched not in seen:
            seen.add(matched)
            mentions.append(Mention(agent_id=matched, span=(i, end)))
        i = end
    return "".join(cleaned), tuple(mentions)


def resolve_responders(
    parent_move: DeliberationMove | None,
    mentions: Sequence[Mention],
    roster: Sequence[str],
    cap: int = RESPONDER_CAP,
) -> tuple[str, ...]:
    """Who replies: the mentioned agents, else the agent being answered.

    Mentions present -> exactly those agents in mention order (never a
    superset). No mentions -> the parent author if it is an agent, else
    nobody (the UI prompts the user to mention someone).
    """
    if mentions:
        agents = []
        for mention in mentions:
            if mention.agent_id not in roster:
                raise UnknownAgent(f"{mention.agent_id!r} is not on the roster")
            agents.append(mention.agent_id)
        return tuple(agents[:cap])
    if parent_move is not None and parent_move.is_agent:
        return (parent_move.author,)
    return ()


def responder_preview(
    parent_move: DeliberationMove | None, text: str, roster: Sequence[str]
) -> tuple[str, tuple[Mention, ...], tuple[str, ...]]:
    """One-shot parse + resolve, as shown in the composer's notify line."""
    cleaned, mentions = parse_mentions(text, roster)
    return cleaned, mentions, resolve_responders(parent_move, mentions, roster)


@dataclass(frozen=True)
class ProposalRevision:
    seq: int
    section: str
    before_digest: str
    after_digest: str
    timestamp: int

    def to_record(self) -> dict:
        return {
            "seq": self.seq,
            "section": self.section,
            "before_digest": self.before_digest,
            "after_digest": self.after_digest,
            "timestamp": self.timestamp,
        }


class ProposalDocument:
    """Five fixed sections with an append-only, per-section hash chain."""

    def __init__(self, sections: Mapping[str, str] | None = None):
        provided = dict(sections or {})
        unknown = set(provided) - set(PROPOSAL_SECTIONS)
        if unknown:
            raise SectionUnknown(f"unknown proposal sections: {sorted(unknown)}")
        self._sections: dict[str, str] = {
            name: provided.get(name, "") for name in PROPOSAL_SECTIONS
        }
        self._initial: dict[str, str] = dict(self._sections)
        self._revisions: list[ProposalRevision] = []

    def section_text(self, section: str) -> str:
        self._check_section(section)
        return self._sections[section]

    def section_digest(self, section: str) -> str:
        return text_digest(self.section_text(section))

    def sections(self) -> dict[str, str]:
        return dict(self._sections)

    def initial_sections(self) -> dict[str, str]:
        return dict(self._initial)

    @property
    def revisions(self) -> tuple[ProposalRevision, ...]:
        return tuple(self._revisions)

    def _check_section(self, section: str) -> None:
        if section not in PROPOSAL_SECTIONS:
            raise SectionUnknown(
                f"{section!r} is not a proposal section; "
                f"expected one of {PROPOSAL_SECTIONS}"
            )

    def record_edit(
        self,
        section: str,
        new_text: str,
        base_digest: str | None = None,
        timestamp: int = 0,
    ) -> ProposalRevision | None:
        """Append one revision; returns None for a no-op edit.

        ``base_digest`` is the digest of the text the editor started from;
        a mismatch means someone edited the section meanwhile and the
        caller must rebase.
        """
        self._check_section(section)
        before = text_digest(self._sections[section])
        if base_digest is not None and base_digest != before:
            raise StaleEdit(
                f"section {section!r} changed since digest {base_digest[:12]}; rebase"
            )
        after = text_digest(new_text)
        if after == before:
            return None
        revision = ProposalRevision(
            seq=len(self._revisions) + 1,
            section=section,
            before_digest=before,
            after_digest=after,
            timestamp=timestamp,
        )
        self._sections[section] = new_text
        self._revisions.append(revision)
        return revision

    def append_note(self, note: str, timestamp: int = 0) -> ProposalRevision | None:
        """Quick note capture: appends a line to the Notes section."""
        current = self._sections["Notes"]
        merged = f"{current}\n{note}" if current else note
        return self.record_edit("Notes", merged, timestamp=timestamp)

    def to_snapshot(self) -> dict:
        return {
            "sections": dict(self._sections),
            "initial": dict(self._initial),
            "revisions": [r.to_record() for r in self._revisions],
        }

    def verify(self) -> list[str]:
        """Hash-chain invariants; empty list when sound."""
        problems: list[str] = []
        tail: dict[str, str] = {
            name: text_digest(text) for name, text in self._initial.items()
        }
        for revision in self._revisions:
            expected = tail.get(revision.section)
            if expected is None:
                problems.append(f"revision {revision.seq}: unknown section")
                continue
            if revision.before_digest != expected:
                problems.append(
                    f"revision {revision.seq}: before digest breaks the "
                    f"{revision.section} chain"
                )
            tail[revision.section] = revision.after_digest
        for name, text in self._sections.items():
            if text_digest(text) != tail[name]:
                problems.append(f"section {name}: text does not match chain head")
        return problems


@dataclass
class Project:
    project_id: str
    title: str
    proposal: ProposalDocument
    threads: list[str] = field(default_factory=list)
    roster: list[str] = field(default_factory=list)

    def add_thread(self, thread_id: str) -> None:
        if thread_id in self.threads:
            raise ValueError(f"duplicate thread id {thread_id!r}")
        self.threads.append(thread_id)


@dataclass(frozen=True)
class WhatIfRequest:
    target_move: str
    agent_id: str
    stance: Stance

    @property
    def act(self) -> Act:
        return stance_to_act(self.stance)


@dataclass(frozen=True)
class PreviewDraft:
    """Ephemeral what-if draft; nothing persists until it is posted."""

    preview_id: str
    request: WhatIfRequest
    act: Act
    body: str
    rationale: str
    citations: tuple[str, ...] = ()

    def to_record(self) -> dict:
        return {
            "preview_id": self.preview_id,
            "target_move": self.request.target_move,
            "agent_id": self.request.agent_id,
            "stance": self.request.stance.value,
            "act": self.act.value,
            "body": self.body,
            "rationale": self.rationale,
            "citations": list(self.citations),
        }


@dataclass(frozen=True)
class BranchLink:
    """Provenance: which move a branched thread grew from."""

    thread_id: str
    source_thread_id: str
    source_move_id: str

    def to_record(self) -> dict:
        return {
            "thread_id": self.thread_id,
            "source_thread_id": self.source_thread_id,
            "source_move_id": self.source_move_id,
        }


def branch_root_body(source: DeliberationMove, source_thread_id: str) -> str:
    """Root text for a branched thread; quotes and links the source move."""
    excerpt = source.body.strip()
    if len(excerpt) > 160:
        excerpt = excerpt[:160].rstrip() + "..."
    return (
        f'Branching from {source_thread_id}/{source.move_id}: "{excerpt}" '
        f"What follows from this point?"
    )


def verify_branch_links(links: Iterable[BranchLink]) -> list[str]:
    """Branch provenance must be acyclic across threads."""
    parent = {link.thread_id: link.source_thread_id for link in links}
    problems: list[str] = []
    for start in parent:
        seen = {start}
        cursor = parent.get(start)
        while cursor is not None:
            if cursor in seen:
                problems.append(f"branch provenance cycle through {cursor}")
                break
            seen.add(cursor)
            cursor = parent.get(cursor)
    return problems
