from __future__ import annotations

import random

import pytest

from agentforum.protocol import (
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
    concede_commitment,
    new_thread,
    replay_moves,
    retract_commitment,
    thread_from_jsonl,
    thread_to_jsonl,
    validate_move,
    verify_thread,
)

# ---------------------------------------------------------------------------
# independent legality oracle: the rules restated from scratch, no imports
# from the implementation's tables

ORACLE_TARGETS = {
    "CLAIM": {"ISSUE", "QUESTION", "REPLY"},
    "SUPPORT": {"CLAIM", "SUPPORT", "REBUT", "QUESTION", "REPLY"},
    "REBUT": {"CLAIM", "SUPPORT"},
    "QUESTION": {"CLAIM", "SUPPORT", "REBUT"},
}


def oracle_verdict(state: ThreadState, move: DeliberationMove) -> str | None:
    """Name of the violated rule, or None when the move is legal."""
    if any(m.move_id == move.move_id for m in state.moves):
        return "DuplicateId"
    if move.target is None:
        if state.moves:
            return "UnknownTarget"
        if move.act is not Act.ISSUE:
            return "RootMustBeIssue"
        return None
    parent = next((m for m in state.moves if m.move_id == move.target), None)
    if parent is None:
        return "UnknownTarget"
    if move.author_kind is AuthorKind.HUMAN:
        return "IllegalActForTarget" if move.act is not None else None
    parent_kind = "REPLY" if parent.act is None else parent.act.value
    if move.act is Act.ISSUE or parent_kind not in ORACLE_TARGETS.get(move.act.value, set()):
        return "IllegalActForTarget"
    if move.act is Act.REBUT and parent.author == move.author:
        # an author with a live commitment on the parent may not rebut it
        committed = any(
            m.move_id == parent.move_id
            and m.is_agent
            and m.act in (Act.CLAIM, Act.REBUT)
            for m in state.moves
        )
        still_active = True
        store = state.stores.get(move.author)
        if store is not None:
            for c in store.commitments:
                if c.source_move == parent.move_id:
                    still_active = c.status.value == "active"
        if committed and still_active:
            return "SelfRebuttal"
    return None


def implementation_verdict(state: ThreadState, move: DeliberationMove) -> str | None:
    try:
        validate_move(state, move)
        return None
    except UnknownTarget:
        return "UnknownTarget"
    except RootMustBeIssue:
        return "RootMustBeIssue"
    except SelfRebuttal:
        return "SelfRebuttal"
    except IllegalActForTarget:
        return "IllegalActForTarget"
    except ValueError:
        return "DuplicateId"


def make_move(
    move_id: str,
    author: str,
    act: Act | None,
    target: str | None,
    agent: bool = True,
) -> DeliberationMove:
    return DeliberationMove(
        move_id=move_id,
        author=author,
        author_kind=AuthorKind.AGENT if agent else AuthorKind.HUMAN,
        act=act,
        target=target,
        body=f"body of {move_id}",
        rationale="because" if agent else "",
        timestamp=0,
    )


def build_thread(*moves: DeliberationMove) -> ThreadState:
    state = new_thread("t")
    for i, move in enumerate(moves, start=1):
        stamped = DeliberationMove(
            move_id=move.move_id,
            author=move.author,
            author_kind=move.author_kind,
            act=move.act,
            target=move.target,
            body=move.body,
            rationale=move.rationale,
            timestamp=i,
        )
        state = apply_move(state, stamped)
    return state


ROOT = make_move("m1", "user", Act.ISSUE, None, agent=False)


def parent_of_kind(kind: str) -> ThreadState:
    """A thread whose last move presents the requested target kind."""
    if kind == "ISSUE":
        return build_thread(ROOT)
    if kind == "REPLY":
        return build_thread(ROOT, make_move("m2", "user", None, "m1", agent=False))
    claim = make_move("m2", "alice", Act.CLAIM, "m1")
    if kind == "CLAIM":
        return build_thread(ROOT, claim)
    if kind == "SUPPORT":
        return build_thread(ROOT, claim, make_move("m3", "bob", Act.SUPPORT, "m2"))
    if kind == "REBUT":
        return build_thread(ROOT, claim, make_move("m3", "bob", Act.REBUT, "m2"))
    if kind == "QUESTION":
        return build_thread(ROOT, claim, make_move("m3", "bob", Act.QUESTION, "m2"))
    raise AssertionError(kind)


def test_all_act_parent_pairs_match_oracle():
    kinds = ("ISSUE", "CLAIM", "SUPPORT", "REBUT", "QUESTION", "REPLY")
    checked = 0
    for kind in kinds:
        state = parent_of_kind(kind)
        target = state.moves[-1].move_id
        for act in Act:
            move = make_move("mx", "carol", act, target)
            assert implementation_verdict(state, move) == oracle_verdict(state, move), (
                f"act {act.value} on parent kind {kind}"
            )
            checked += 1
    assert checked == len(kinds) * len(Act)


def test_human_moves_against_every_parent_kind():
    for kind in ("ISSUE", "CLAIM", "SUPPORT", "REBUT", "QUESTION", "REPLY"):
        state = parent_of_kind(kind)
        target = state.moves[-1].move_id
        plain = make_move("mx", "user", None, target, agent=False)
        assert implementation_verdict(state, plain) is None
        assert oracle_verdict(state, plain) is None


def test_root_rules():
    state = new_thread("t")
    ok_root = make_move("m1", "user", Act.ISSUE, None, agent=False)
    assert implementation_verdict(state, ok_root) is None
    agent_root = make_move("m1", "alice", Act.ISSUE, None)
    assert implementation_verdict(state, agent_root) is None
    for act in (Act.CLAIM, Act.SUPPORT, Act.REBUT, Act.QUESTION):
        bad = make_move("m1", "alice", act, None)
        assert implementation_verdict(state, bad) == "RootMustBeIssue"
    populated = build_thread(ROOT)
    second_root = make_move("m9", "alice", Act.ISSUE, None)
    assert implementation_verdict(populated, second_root) == "UnknownTarget"


def test_unknown_target_rejected():
    state = build_thread(ROOT)
    move = make_move("m2", "alice", Act.CLAIM, "nope")
    assert implementation_verdict(state, move) == "UnknownTarget"


def test_self_rebuttal_blocked_only_with_active_commitment():
    state = build_thread(ROOT, make_move("m2", "alice", Act.CLAIM, "m1"))
    rebut_own = make_move("m3", "alice", Act.REBUT, "m2")
    with pytest.raises(SelfRebuttal):
        validate_move(state, rebut_own)
    # after retracting, rebutting the old claim becomes legal
    state = retract_commitment(state, "alice", "m2")
    validate_move(state, rebut_own)
    # another author was never blocked
    other = make_move("m3", "bob", Act.REBUT, "m2")
    validate_move(build_thread(ROOT, make_move("m2", "alice", Act.CLAIM, "m1")), other)


def test_commitments_track_claim_and_rebut():
    state = build_thread(
        ROOT,
        make_move("m2", "alice", Act.CLAIM, "m1"),
        make_move("m3", "bob", Act.REBUT, "m2"),
    )
    assert state.stores["alice"].active_sources() == frozenset({"m2"})
    assert state.stores["bob"].active_sources() == frozenset({"m3"})
    state = concede_commitment(state, "alice", "m2")
    assert state.stores["alice"].active_sources() == frozenset()


def test_challenge_burden_and_discharge():
    state = build_thread(
        ROOT,
        make_move("m2", "alice", Act.CLAIM, "m1"),
        make_move("m3", "bob", Act.QUESTION, "m2"),
    )
    (challenge,) = state.open_challenges
    assert challenge.burden_holder == "alice"
    assert challenge.resolved_by is None
    state = apply_move(state, make_move_at(state, "m4", "alice", Act.SUPPORT, "m3"))
    (challenge,) = state.open_challenges
    assert challenge.resolved_by == "m4"


def test_support_discharges_oldest_matching_challenge_only():
    state = build_thread(
        ROOT,
        make_move("m2", "alice", Act.CLAIM, "m1"),
        make_move("m3", "bob", Act.QUESTION, "m2"),
        make_move("m4", "carol", Act.QUESTION, "m2"),
    )
    state = apply_move(state, make_move_at(state, "m5", "alice", Act.SUPPORT, "m2"))
    first, second = state.open_challenges
    assert first.resolved_by == "m5"
    assert second.resolved_by is None


def test_support_by_non_burden_holder_does_not_discharge():
    state = build_thread(
        ROOT,
        make_move("m2", "alice", Act.CLAIM, "m1"),
        make_move("m3", "bob", Act.QUESTION, "m2"),
    )
    state = apply_move(state, make_move_at(state, "m4", "carol", Act.SUPPORT, "m2"))
    (challenge,) = state.open_challenges
    assert challenge.resolved_by is None


def test_support_chain_discharges_transitively():
    state = build_thread(
        ROOT,
        make_move("m2", "alice", Act.CLAIM, "m1"),
        make_move("m3", "bob", Act.REBUT, "m2"),
        make_move("m4", "carol", Act.SUPPORT, "m3"),
    )
    # alice supports carol's support, reaching her challenged claim's rebutter
    state = apply_move(state, make_move_at(state, "m5", "alice", Act.SUPPORT, "m4"))
    (challenge,) = state.open_challenges
    assert challenge.resolved_by == "m5"


def make_move_at(
    state: ThreadState, move_id: str, author: str, act: Act, target: str
) -> DeliberationMove:
    return DeliberationMove(
        move_id=move_id,
        author=author,
        author_kind=AuthorKind.AGENT,
        act=act,
        target=target,
        body=f"body {move_id}",
        rationale="because",
        timestamp=state.next_timestamp(),
    )


def test_jsonl_round_trip():
    state = build_thread(
        ROOT,
        make_move("m2", "alice", Act.CLAIM, "m1"),
        make_move("m3", "user", None, "m2", agent=False),
    )
    text = thread_to_jsonl(state)
    back = thread_from_jsonl(text)
    assert [m.to_record() for m in back.moves] == [m.to_record() for m in state.moves]
    assert verify_thread(back) == []


def test_replay_moves_rejects_illegal_sequences():
    bad = [
        ROOT,
        make_move("m2", "alice", Act.REBUT, "m1"),  # REBUT cannot target ISSUE
    ]
    stamped = [
        DeliberationMove(
            move_id=m.move_id,
            author=m.author,
            author_kind=m.author_kind,
            act=m.act,
            target=m.target,
            body=m.body,
            rationale=m.rationale,
            timestamp=i,
        )
        for i, m in enumerate(bad, start=1)
    ]
    with pytest.raises(ProtocolError):
        replay_moves("t", stamped)


def test_verify_thread_flags_tampering():
    import json

    state = build_thread(ROOT, make_move("m2", "alice", Act.CLAIM, "m1"))
    lines = thread_to_jsonl(state).splitlines()
    first = json.loads(lines[0])
    first["act"] = "CLAIM"  # a CLAIM root violates the root rule on replay
    lines[0] = json.dumps(first)
    with pytest.raises(ProtocolError):
        thread_from_jsonl("\n".join(lines))


# ---------------------------------------------------------------------------
# randomized equivalence (the acceptance suite re-runs this at full scale)


def random_equivalence_run(threads: int, seed: int) -> int:
    rng = random.Random(seed)
    authors = ["user", "alice", "bob"]
    acts = list(Act) + [None]
    comparisons = 0
    for t in range(threads):
        state = new_thread(f"t{t}")
        for step in range(rng.randint(1, 5)):
            author = rng.choice(authors)
            agent = author != "user"
            act = rng.choice(acts)
            if agent and act is None:
                act = rng.choice(list(Act))
            ids = [m.move_id for m in state.moves]
            target = rng.choice(ids + [None, "missing"])
            try:
                move = DeliberationMove(
                    move_id=f"n{step}",
                    author=author,
                    author_kind=AuthorKind.AGENT if agent else AuthorKind.HUMAN,
                    act=act,
                    target=target,
                    body="b",
                    rationale="r" if agent else "",
                    timestamp=state.next_timestamp(),
                )
            except ValueError:
                continue
            got = implementation_verdict(state, move)
            want = oracle_verdict(state, move)
            assert got == want, (
                f"seed={seed} thread={t} move={move.to_record()} got={got} want={want}"
            )
            comparisons += 1
            if got is None:
                state = apply_move(state, move)
    return comparisons


def test_random_threads_match_oracle_smoke():
    assert random_equivalence_run(300, seed=7) > 300
