"""Deliberation protocol: the five-act dialogue state machine.

Every contribution to a discussion thread is a ``DeliberationMove``. Agent
moves carry one of five acts (ISSUE, CLAIM, SUPPORT, REBUT, QUESTION); human
free-text replies carry no act. The thread state tracks, besides the reply
tree itself, each participant's commitment store (propositions they have
publicly taken on via CLAIM/REBUT) and the open challenges created by
QUESTION/REBUT moves, whose burden of proof falls on the author of the
targeted move and is discharged by a matching SUPPORT.

Legality relation (act -> parent kinds it may attach to):

    ISSUE     -> root only
    CLAIM     -> ISSUE, QUESTION, human reply
    SUPPORT   -> CLAIM, SUPPORT, REBUT, QUESTION, human reply
    REBUT     -> CLAIM, SUPPORT
    QUESTION  -> CLAIM, SUPPORT, REBUT

All state transitions are pure: ``apply_move`` returns a new ``ThreadState``
and never mutates its input, so snapshots are safe to share. Serializing
writers is the service layer's job.

Wire format
-----------
Transcripts are line-delimited JSON, one move per record (see
``thread_to_jsonl`` / ``thread_from_jsonl``). Replaying an exported
transcript reproduces the exact thread state, digest included.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Iterable, Iterator, Mapping

from .digests import digest


class Act(str, Enum):
    """The five deliberation acts."""

    ISSUE = "ISSUE"
    CLAIM = "CLAIM"
    SUPPORT = "SUPPORT"
    REBUT = "REBUT"
    QUESTION = "QUESTION"


class TargetKind(str, Enum):
    """What a move can attach to: the thread root, an act, or a human reply."""

    ROOT = "root"
    ISSUE = "ISSUE"
    CLAIM = "CLAIM"
    SUPPORT = "SUPPORT"
    REBUT = "REBUT"
    QUESTION = "QUESTION"
    REPLY = "REPLY"  # human free-text post


class AuthorKind(str, Enum):
    AGENT = "agent"
    HUMAN = "human"


class CommitmentStatus(str, Enum):
    ACTIVE = "active"
    CONCEDED = "conceded"
    RETRACTED = "retracted"


#: act -> set of parent kinds it may legally attach to.
LEGAL_TARGETS: dict[Act, frozenset[TargetKind]] = {
    Act.ISSUE: frozenset({TargetKind.ROOT}),
    Act.CLAIM: frozenset({TargetKind.ISSUE, TargetKind.QUESTION, TargetKind.REPLY}),
    Act.SUPPORT: frozenset(
        {
            TargetKind.CLAIM,
            TargetKind.SUPPORT,
            TargetKind.REBUT,
            TargetKind.QUESTION,
            TargetKind.REPLY,
        }
    ),
    Act.REBUT: frozenset({TargetKind.CLAIM, TargetKind.SUPPORT}),
    Act.QUESTION: frozenset({TargetKind.CLAIM, TargetKind.SUPPORT, TargetKind.REBUT}),
}


def legal_target_kinds(act: Act) -> frozenset[TargetKind]:
    """Parent kinds (or the root marker) the given act may attach to."""
    return LEGAL_TARGETS[act]


class ProtocolError(Exception):
    """A move violated one of the named protocol rules."""

    rule = "protocol"

    def as_dict(self) -> dict:
        return {"rule": self.rule, "detail": str(self)}


class UnknownTarget(ProtocolError):
    rule = "UnknownTarget"


class IllegalActForTarget(ProtocolError):
    rule = "IllegalActForTarget"


class RootMustBeIssue(ProtocolError):
    rule = "RootMustBeIssue"


class SelfRebuttal(ProtocolError):
    rule = "SelfRebuttal"


@dataclass(frozen=True)
class DeliberationMove:
    """One contribution to a thread.

    ``timestamp`` is the monotone sequence number within the thread, assigned
    as ``len(moves) + 1`` by the caller. Agent moves must carry a non-empty
    rationale; only that rationale and the tool-call summary persist from the
    agent's reasoning.
    """

    move_id: str
    author: str
    author_kind: AuthorKind
    act: Act | None
    target: str | None
    body: str
    rationale: str = ""
    citations: tuple[str, ...] = ()
    tool_summary: str | None = None
    timestamp: int = 0

    def __post_init__(self) -> None:
        if self.author_kind is AuthorKind.AGENT and not self.rationale:
            raise ValueError(f"agent move {self.move_id} requires a rationale")
        if self.author_kind is AuthorKind.AGENT and self.act is None:
            raise ValueError(f"agent move {self.move_id} requires an act")

    @property
    def is_agent(self) -> bool:
        return self.author_kind is AuthorKind.AGENT

    @property
    def target_kind(self) -> TargetKind:
        """How this move looks when something attaches to it."""
        if self.act is None:
            return TargetKind.REPLY
        return TargetKind(self.act.value)

    def to_record(self) -> dict:
        return {
            "move_id": self.move_id,
            "author": self.author,
            "author_kind": self.author_kind.value,
            "act": self.act.value if self.act else None,
            "target": self.target,
            "body": self.body,
            "rationale": self.rationale,
            "citations": list(self.citations),
            "tool_summary": self.tool_summary,
            "timestamp": self.timestamp,
        }

    @classmethod
    def from_record(cls, record: Mapping) -> "DeliberationMove":
        return cls(
            move_id=record["move_id"],
            author=record["author"],
            author_kind=AuthorKind(record["author_kind"]),
            act=Act(record["act"]) if record.get("act") else None,
            target=record.get("target"),
            body=record["body"],
            rationale=record.get("rationale", ""),
            citations=tuple(record.get("citations", ())),
            tool_summary=record.get("tool_summary"),
            timestamp=int(record.get("timestamp", 0)),
        )


@dataclass(frozen=True)
class Commitment:
    """A proposition a participant has committed to defend.

    Identity is the originating move, not the text: two commitments are the
    same commitment iff they trace to the same CLAIM/REBUT move.
    """

    source_move: str
    text: str
    status: CommitmentStatus = CommitmentStatus.ACTIVE


@dataclass(frozen=True)
class CommitmentStore:
    owner: str
    commitments: tuple[Commitment, ...] = ()

    def active(self) -> tuple[Commitment, ...]:
        return tuple(c for c in self.commitments if c.status is CommitmentStatus.ACTIVE)

    def active_sources(self) -> frozenset[str]:
        return frozenset(c.source_move for c in self.active())


@dataclass(frozen=True)
class Challenge:
    """An open demand for justification created by a QUESTION or REBUT."""

    challenge_move: str
    burden_holder: str
    resolved_by: str | None = None


@dataclass(frozen=True)
class ThreadState:
    thread_id: str
    moves: tuple[DeliberationMove, ...] = ()
    stores: Mapping[str, CommitmentStore] = field(default_factory=dict)
    open_challenges: tuple[Challenge, ...] = ()

    def find(self, move_id: str | None) -> DeliberationMove | None:
        if move_id is None:
            return None
        for move in self.moves:
            if move.move_id == move_id:
                return move
        return None

    @property
    def root(self) -> DeliberationMove | None:
        return self.moves[0] if self.moves else None

    def next_timestamp(self) -> int:
        return len(self.moves) + 1

    def children_of(self, move_id: str) -> tuple[DeliberationMove, ...]:
        return tuple(m for m in self.moves if m.target == move_id)


def new_thread(thread_id: str) -> ThreadState:
    return ThreadState(thread_id=thread_id)


def validate_move(state: ThreadState, move: DeliberationMove) -> None:
    """Raise a ProtocolError naming the violated rule; return silently if legal.

    Rules, in check order:
      (a) the target exists, or the move is the thread root;
      (b) root moves carry act ISSUE;
      (c) an agent move's act is legal for the parent's kind;
      (d) an agent never rebuts its own active commitment.
    """
    if state.find(move.move_id) is not None:
        raise ValueError(f"duplicate move_id {move.move_id!r} in thread {state.thread_id}")

    if move.target is None:
        if state.moves:
            raise UnknownTarget(
                f"thread {state.thread_id} already has a root; non-root moves need a target"
            )
        if move.act is not Act.ISSUE:
            raise RootMustBeIssue(f"root move must carry ISSUE, got {move.act}")
        return

    parent = state.find(move.target)
    if parent is None:
        raise UnknownTarget(f"target {move.target!r} not found in thread {state.thread_id}")

    if not move.is_agent:
        if move.act is not None:
            raise IllegalActForTarget("human replies carry no act")
        return

    assert move.act is not None
    if parent.target_kind not in legal_target_kinds(move.act):
        raise IllegalActForTarget(
            f"{move.act.value} may not target a {parent.target_kind.value} move"
        )

    if move.act is Act.REBUT and parent.author == move.author:
        store = state.stores.get(move.author)
        if store is not None and parent.move_id in store.active_sources():
            raise SelfRebuttal(
                f"{move.author} holds an active commitment on {parent.move_id}"
            )


def _defends(state: ThreadState, support: DeliberationMove, challenge: Challenge) -> bool:
    """True if ``support`` discharges ``challenge``.

    A SUPPORT counts when it targets the challenged move, answers the
    challenge move itself, or reaches either transitively through a chain of
    SUPPORT moves.
    """
    challenge_move = state.find(challenge.challenge_move)
    if challenge_move is None:
        return False
    challenged_id = challenge_move.target
    cursor = support.target
    seen: set[str] = set()
    while cursor is not None and cursor not in seen:
        if cursor in (challenge.challenge_move, challenged_id):
            return True
        seen.add(cursor)
        parent = state.find(cursor)
        if parent is None or parent.act is not Act.SUPPORT:
            return False
        cursor = parent.target
    return False


def apply_move(state: ThreadState, move: DeliberationMove) -> ThreadState:
    """Validate and fold one move into the thread, returning the new state.

    CLAIM/REBUT add an active commitment for the author; QUESTION/REBUT open
    a challenge whose burden falls on the targeted move's author; a SUPPORT
    by a burden holder resolves the oldest challenge it discharges.
    """
    validate_move(state, move)
    if move.timestamp != state.next_timestamp():
        raise ValueError(
            f"move {move.move_id} timestamp {move.timestamp}, expected {state.next_timestamp()}"
        )

    moves = state.moves + (move,)
    stores = dict(state.stores)
    challenges = list(state.open_challenges)

    if move.is_agent and move.act in (Act.CLAIM, Act.REBUT):
        store = stores.get(move.author, CommitmentStore(owner=move.author))
        stores[move.author] = replace(
            store,
            commitments=store.commitments + (Commitment(move.move_id, move.body),),
        )

    if move.is_agent and move.act in (Act.QUESTION, Act.REBUT):
        target = state.find(move.target)
        assert target is not None
        challenges.append(Challenge(move.move_id, target.author))

    if move.is_agent and move.act is Act.SUPPORT:
        interim = replace(state, moves=moves)
        for i, challenge in enumerate(challenges):
            if challenge.resolved_by is not None:
                continue
            if challenge.burden_holder != move.author:
                continue
            if _defends(interim, move, challenge):
                challenges[i] = replace(challenge, resolved_by=move.move_id)
                break  # oldest matching challenge only

    return replace(state, moves=moves, stores=stores, open_challenges=tuple(challenges))


def _transition_commitment(
    state: ThreadState, owner: str, source_move: str, status: CommitmentStatus
) -> ThreadState:
    store = state.stores.get(owner)
    if store is None:
        raise KeyError(f"no commitment store for {owner!r}")
    updated = []
    hit = False
    for c in store.commitments:
        if c.source_move == source_move:
            if c.status is not CommitmentStatus.ACTIVE:
                raise ValueError(f"commitment {source_move} already {c.status.value}")
            updated.append(replace(c, status=status))
            hit = True
        else:
            updated.append(c)
    if not hit:
        raise KeyError(f"{owner!r} holds no commitment from move {source_move!r}")
    stores = dict(state.stores)
    stores[owner] = replace(store, commitments=tuple(updated))
    return replace(state, stores=stores)


def concede_commitment(state: ThreadState, owner: str, source_move: str) -> ThreadState:
    """Administrative concede; not a UI-visible act."""
    return _transition_commitment(state, owner, source_move, CommitmentStatus.CONCEDED)


def retract_commitment(state: ThreadState, owner: str, source_move: str) -> ThreadState:
    """Administrative retract; not a UI-visible act."""
    return _transition_commitment(state, owner, source_move, CommitmentStatus.RETRACTED)


def commitments_of(state: ThreadState, who: str) -> tuple[Commitment, ...]:
    """Read-only projection of a participant's commitment store."""
    store = state.stores.get(who)
    return store.commitments if store is not None else ()


def replay_moves(thread_id: str, moves: Iterable[DeliberationMove]) -> ThreadState:
    state = new_thread(thread_id)
    for move in moves:
        state = apply_move(state, move)
    return state


def thread_digest(state: ThreadState) -> str:
    return digest(thread_snapshot(state))


def thread_snapshot(state: ThreadState) -> dict:
    """Canonical dict form of the full thread state (moves, stores, challenges)."""
    return {
        "thread_id": state.thread_id,
        "moves": [m.to_record() for m in state.moves],
        "stores": {
            owner: [
                {"source_move": c.source_move, "text": c.text, "status": c.status.value}
                for c in store.commitments
            ]
            for owner, store in sorted(state.stores.items())
        },
        "open_challenges": [
            {
                "challenge_move": c.challenge_move,
                "burden_holder": c.burden_holder,
                "resolved_by": c.resolved_by,
            }
            for c in state.open_challenges
        ],
    }


def thread_to_jsonl(state: ThreadState) -> str:
    """Transcript export: one JSON record per move, thread id on every line."""
    lines = []
    for move in state.moves:
        record = {"thread_id": state.thread_id, **move.to_record()}
        lines.append(json.dumps(record, ensure_ascii=False, sort_keys=True))
    return "\n".join(lines) + ("\n" if lines else "")


def thread_from_jsonl(text: str, thread_id: str | None = None) -> ThreadState:
    """Replay a transcript; reproduces the exact exported state."""
    moves = []
    tid = thread_id
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ValueError(f"transcript line {lineno}: invalid JSON: {exc}") from exc
        line_tid = record.get("thread_id")
        if tid is None:
            tid = line_tid
        elif line_tid is not None and line_tid != tid:
            raise ValueError(f"transcript line {lineno}: thread_id {line_tid!r} != {tid!r}")
        moves.append(DeliberationMove.from_record(record))
    if tid is None:
        raise ValueError("empty transcript: no thread_id")
    return replay_moves(tid, moves)


def verify_thread(state: ThreadState) -> list[str]:
    """Check every protocol invariant; returns a list of violations (empty = ok).

    Covers legality soundness (full replay), id/timestamp ordering,
    commitment conservation, and challenge well-formedness.
    """
    problems: list[str] = []
    seen_ids: set[str] = set()
    prefix = new_thread(state.thread_id)
    for move in state.moves:
        if move.move_id in seen_ids:
            problems.append(f"duplicate move_id {move.move_id}")
            continue
        seen_ids.add(move.move_id)
        if move.timestamp != prefix.next_timestamp():
            problems.append(f"{move.move_id}: timestamp {move.timestamp} out of order")
        try:
            prefix = apply_move(prefix, replace(move, timestamp=prefix.next_timestamp()))
        except ProtocolError as exc:
            problems.append(f"{move.move_id}: illegal against prefix ({exc.rule})")
            return problems

    # Commitment conservation: active = (CLAIM+REBUT by X) - (conceded+retracted by X).
    for owner, store in state.stores.items():
        move_count = sum(
            1
            for m in state.moves
            if m.author == owner and m.is_agent and m.act in (Act.CLAIM, Act.REBUT)
        )
        closed = sum(1 for c in store.commitments if c.status is not CommitmentStatus.ACTIVE)
        active = len(store.active())
        if active != move_count - closed:
            problems.append(
                f"{owner}: {active} active commitments, expected {move_count} - {closed}"
            )
        for c in store.commitments:
            source = state.find(c.source_move)
            if source is None or source.author != owner or source.act not in (
                Act.CLAIM,
                Act.REBUT,
            ):
                problems.append(f"{owner}: commitment {c.source_move} has no CLAIM/REBUT source")

    for challenge in state.open_challenges:
        cmove = state.find(challenge.challenge_move)
        if cmove is None or cmove.act not in (Act.QUESTION, Act.REBUT):
            problems.append(f"challenge {challenge.challenge_move}: not a QUESTION/REBUT")
            continue
        target = state.find(cmove.target)
        if target is None or target.author != challenge.burden_holder:
            problems.append(
                f"challenge {challenge.challenge_move}: burden holder is not the target author"
            )
        if challenge.resolved_by is not None:
            resolver = state.find(challenge.resolved_by)
            if (
                resolver is None
                or resolver.act is not Act.SUPPORT
                or resolver.author != challenge.burden_holder
                or not _defends(state, resolver, challenge)
            ):
                problems.append(
                    f"challenge {challenge.challenge_move}: resolver "
                    f"{challenge.resolved_by} is not a discharging SUPPORT by the burden holder"
                )
    return problems


def iter_reply_tree(state: ThreadState) -> Iterator[tuple[DeliberationMove, int]]:
    """Depth-first (move, depth) traversal of the reply tree, children in post order."""

    def walk(move_id: str, depth: int) -> Iterator[tuple[DeliberationMove, int]]:
        move = state.find(move_id)
        assert move is not None
        yield move, depth
        for child in state.children_of(move_id):
            yield from walk(child.move_id, depth + 1)

    if state.root is not None:
        yield from walk(state.root.move_id, 0)
