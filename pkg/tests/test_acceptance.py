"""Whole-system acceptance checks.

Each test covers one shipping-gate property end to end and prints a
single [PASS]/[FAIL] verdict line (run with ``pytest -s`` to see them
on passing runs). The suite is fully offline: deterministic mock
provider, bundled persona catalog, bundled paper fixtures.
"""

from __future__ import annotations

import random
import re
import time
from collections import Counter

import test_protocol as oracle

from agentforum.forum import responder_preview
from agentforum.mindmap import ZoomLevel, label_at, source_of
from agentforum.personas import default_catalog
from agentforum.protocol import (
    Act,
    CommitmentStatus,
    thread_from_jsonl,
    thread_to_jsonl,
)
from agentforum.retrieval import (
    default_search_clients,
    extract_citation_keys,
    format_citations,
    search_papers,
)
from agentforum.scripting import (
    SessionScript,
    load_script,
    run_script,
    scenario_path,
)
from agentforum.service import ForumService

WALKTHROUGH = "deliberation_walkthrough.yaml"


def report(label: str, ok: bool, detail: str = "") -> None:
    suffix = f" ({detail})" if detail else ""
    print(f"\n[{'PASS' if ok else 'FAIL'}] {label}{suffix}")
    assert ok, f"{label}{suffix}"


# ---------------------------------------------------------------------------
# 1. move legality agrees with the independent oracle


def test_legality_oracle_equivalence():
    started = time.perf_counter()
    mismatches = []
    pairs = 0

    # every (act, target kind) pair, plus a human reply, on each parent shape
    for kind in ("ISSUE", "CLAIM", "SUPPORT", "REBUT", "QUESTION", "REPLY"):
        state = oracle.parent_of_kind(kind)
        target = state.moves[-1].move_id
        probes = [oracle.make_move("mx", "carol", act, target) for act in Act]
        probes.append(oracle.make_move("mx", "user", None, target, agent=False))
        for move in probes:
            pairs += 1
            got = oracle.implementation_verdict(state, move)
            want = oracle.oracle_verdict(state, move)
            if got != want:
                mismatches.append((kind, move.act, got, want))

    # root moves: every act, agent and human, on an empty thread
    empty = oracle.build_thread()
    for act in Act:
        for agent in (True, False):
            move = oracle.make_move("mx", "carol" if agent else "user", act, None, agent=agent)
            pairs += 1
            got = oracle.implementation_verdict(empty, move)
            want = oracle.oracle_verdict(empty, move)
            if got != want:
                mismatches.append(("root", act, got, want))

    comparisons = oracle.random_equivalence_run(10_000, seed=20260819)
    elapsed = time.perf_counter() - started

    ok = not mismatches and comparisons >= 10_000 and elapsed < 10.0
    report(
        "move legality matches the independent oracle",
        ok,
        f"{pairs} synthetic pairs, {comparisons} random-thread checks, {elapsed:.1f}s",
    )


# ---------------------------------------------------------------------------
# 2. every thread root is an ISSUE, across randomized sessions


def random_session_script(rng: random.Random, pool: list[str]) -> SessionScript:
    roster = rng.sample(pool, rng.randint(2, 4))
    steps: list[dict] = [
        {
            "action": "create_thread",
            "ref": "a",
            "title": f"Topic {rng.randrange(10_000)}",
            "body": f"Opening question {rng.randrange(10_000)}?",
        }
    ]
    for _ in range(rng.randint(1, 3)):
        kind = rng.choice(("reply", "reply", "what_if", "branch"))
        if kind == "reply":
            steps.append(
                {
                    "action": "reply",
                    "target": rng.choice(("a:root", "a:last")),
                    "text": f"Thought {rng.randrange(10_000)}.",
                    "mentions": rng.sample(roster, rng.randint(0, 2)),
                }
            )
        elif kind == "what_if":
            steps.append(
                {
                    "action": "what_if",
                    "target": rng.choice(("a:root", "a:last")),
                    "agent": rng.choice(roster),
                    "stance": rng.choice(("agree", "disagree", "question")),
                }
            )
        else:
            steps.append(
                {
                    "action": "branch",
                    "ref": f"b{rng.randrange(10_000)}",
                    "source": rng.choice(("a:root", "a:last")),
                }
            )
    return SessionScript.from_dict(
        {
            "title": "randomized session",
            "project": {"title": f"Project {rng.randrange(10_000)}", "roster": roster},
            "steps": steps,
        }
    )


def test_thread_roots_are_issue_moves(catalog):
    rng = random.Random(20260819)
    pool = sorted(catalog)
    service = ForumService(catalog=catalog)
    sessions = 1_000
    for _ in range(sessions):
        run_script(random_session_script(rng, pool), service=service)

    roots = 0
    violations = []
    for project in service.projects.values():
        for thread_id, state in project.threads.items():
            root = state.moves[0]
            roots += 1
            if root.act is not Act.ISSUE or root.target is not None:
                violations.append((project.project_id, thread_id, root.act))

    report(
        "every thread root is an ISSUE move",
        not violations and roots >= sessions,
        f"{sessions} randomized sessions, {roots} thread roots, {len(violations)} violations",
    )


# ---------------------------------------------------------------------------
# 3. responder routing: the nine canonical cases


def test_responder_routing_table(catalog):
    roster = sorted(catalog)[:6]
    one = roster[2]
    five = [roster[4], roster[0], roster[3], roster[1], roster[5]]
    agent_author = roster[1]

    parents = {
        "none": None,
        "human": oracle.make_move("m9", "user", None, "m1", agent=False),
        "agent": oracle.make_move("m9", agent_author, Act.CLAIM, "m1"),
    }
    texts = {
        0: "no handles here.",
        1: f"@{one} your view?",
        5: " ".join(f"@{name}" for name in five) + " please weigh in.",
    }
    expected = {
        ("none", 0): (),
        ("human", 0): (),
        ("agent", 0): (agent_author,),  # the notify default
        ("none", 1): (one,),
        ("human", 1): (one,),
        ("agent", 1): (one,),
        ("none", 5): tuple(five),
        ("human", 5): tuple(five),
        ("agent", 5): tuple(five),
    }

    deviations = []
    for (parent_key, count), want in expected.items():
        _, _, got = responder_preview(parents[parent_key], texts[count], roster)
        if got != want:
            deviations.append((parent_key, count, got, want))

    report(
        "responder routing matches the nine canonical cases",
        not deviations,
        f"9 cases, {len(deviations)} deviations",
    )


# ---------------------------------------------------------------------------
# 4. commitments and challenges survive transcript replay


def conservation_problems(state) -> list[str]:
    problems = []
    for owner, store in state.stores.items():
        expected = {
            m.move_id
            for m in state.moves
            if m.author == owner and m.is_agent and m.act in (Act.CLAIM, Act.REBUT)
        }
        closed = {
            c.source_move
            for c in store.commitments
            if c.status is not CommitmentStatus.ACTIVE
        }
        if store.active_sources() != expected - closed:
            problems.append(f"{owner}: active commitments drifted from move history")
    return problems


def challenge_problems(state) -> list[str]:
    problems = []
    for challenge in state.open_challenges:
        cmove = state.find(challenge.challenge_move)
        if cmove is None or cmove.act not in (Act.QUESTION, Act.REBUT):
            problems.append(f"{challenge.challenge_move}: challenge source is not QUESTION/REBUT")
            continue
        target = state.find(cmove.target)
        if target is None or target.author != challenge.burden_holder:
            problems.append(f"{challenge.challenge_move}: burden holder mismatch")
        if challenge.resolved_by is not None:
            resolver = state.find(challenge.resolved_by)
            if (
                resolver is None
                or resolver.act is not Act.SUPPORT
                or resolver.author != challenge.burden_holder
            ):
                problems.append(f"{challenge.challenge_move}: bad discharge")
    return problems


def test_commitments_and_challenges_after_replay(scenario_runs):
    problems = []
    threads = commitments = challenges = 0
    for name, (service, result) in scenario_runs.items():
        project = service.project(result.project_id)
        for thread_id, state in project.threads.items():
            transcript = thread_to_jsonl(state)
            replayed = thread_from_jsonl(transcript)
            threads += 1
            commitments += sum(len(s.commitments) for s in replayed.stores.values())
            challenges += len(replayed.open_challenges)
            if thread_to_jsonl(replayed) != transcript:
                problems.append(f"{name}/{thread_id}: replay is not transcript-stable")
            for issue in conservation_problems(replayed):
                problems.append(f"{name}/{thread_id}: {issue}")
            for issue in challenge_problems(replayed):
                problems.append(f"{name}/{thread_id}: {issue}")

    report(
        "commitment conservation and challenge well-formedness after replay",
        not problems,
        f"{threads} threads, {commitments} commitments, {challenges} challenges"
        + (f"; problems: {problems[:3]}" if problems else ""),
    )


# ---------------------------------------------------------------------------
# 5. the mind map mirrors every reply tree


def test_mindmap_mirrors_reply_trees(scenario_runs):
    problems = []
    nodes_checked = 0
    for name, (service, result) in scenario_runs.items():
        project = service.project(result.project_id)
        graph = service.mindmap(result.project_id)
        by_id = {node.node_id: node for node in graph.nodes}

        for thread_id, state in project.threads.items():
            # node set is exactly the move set
            move_ids = {m.move_id for m in state.moves}
            thread_nodes = {n.node_id for n in graph.nodes if n.thread_id == thread_id}
            if thread_nodes != move_ids:
                problems.append(f"{name}/{thread_id}: node set != move set")

            # edges reproduce the reply tree, one edge per non-root move
            want_edges = {
                (m.move_id, m.target): (m.act.value if m.act else "REPLY")
                for m in state.moves
                if m.target is not None
            }
            got_edges = {
                (e.source, e.target): e.act
                for e in graph.edges
                if by_id[e.source].thread_id == thread_id
            }
            if got_edges != want_edges:
                problems.append(f"{name}/{thread_id}: edge relation differs from reply tree")
            want_acts = Counter(want_edges.values())
            got_acts = Counter(got_edges.values())
            if want_acts != got_acts:
                problems.append(f"{name}/{thread_id}: edge act multiset differs")

        for node in graph.nodes:
            nodes_checked += 1
            overview = label_at(node, ZoomLevel.OVERVIEW)
            keyword = label_at(node, ZoomLevel.KEYWORD)
            summary = label_at(node, ZoomLevel.SUMMARY)
            if not (len(overview) <= len(keyword) <= len(summary)):
                problems.append(f"{name}/{node.node_id}: labels not monotone")
            locator = source_of(node)
            state = project.threads[locator.thread_id]
            landed = (
                state.moves[0]
                if locator.move_id is None
                else state.find(locator.move_id)
            )
            if landed is None or landed.move_id != node.node_id:
                problems.append(f"{name}/{node.node_id}: source locator does not round-trip")

    report(
        "mind map mirrors reply trees with monotone labels",
        not problems,
        f"{nodes_checked} nodes" + (f"; problems: {problems[:3]}" if problems else ""),
    )


# ---------------------------------------------------------------------------
# 6. the bundled walkthrough is deterministic and fast


def test_walkthrough_determinism(catalog):
    script = load_script(scenario_path(WALKTHROUGH))
    started = time.perf_counter()
    first = run_script(script, service=ForumService(catalog=catalog))
    second = run_script(script, service=ForumService(catalog=catalog))
    elapsed = time.perf_counter() - started

    identical = first.transcript.encode("utf-8") == second.transcript.encode("utf-8")
    digests_equal = first.state_digest == second.state_digest
    ok = identical and digests_equal and elapsed < 30.0
    report(
        "walkthrough session is byte-for-byte deterministic",
        ok,
        f"two runs in {elapsed:.1f}s, digest {first.state_digest[:12]}",
    )


# ---------------------------------------------------------------------------
# 7. citations render contiguously and resolve; fixture search finds the
#    expected genome-editing record


def test_citation_integrity(scenario_runs):
    problems = []
    cited_moves = 0
    for name, (service, result) in scenario_runs.items():
        project = service.project(result.project_id)
        papers = project.graph.papers_by_id()
        for thread_id, state in project.threads.items():
            for move in state.moves:
                keys = extract_citation_keys(move.body)
                if not keys:
                    continue
                cited_moves += 1
                if set(keys) != set(move.citations):
                    problems.append(f"{name}/{move.move_id}: citation list drifted from body")
                try:
                    rendered = format_citations(move.body, papers)
                except Exception as exc:
                    problems.append(f"{name}/{move.move_id}: {exc}")
                    continue
                numbers = [int(m) for m in re.findall(r"\[(\d+)\]", rendered.body)]
                first_seen = list(dict.fromkeys(numbers))
                n = len(rendered.bibliography)
                if first_seen != list(range(1, n + 1)):
                    problems.append(f"{name}/{move.move_id}: markers not contiguous 1..{n}")

    hits = search_papers(
        "CRISPR genome editing technologies for crop breeding and food security",
        default_search_clients(),
    )
    found = any(
        r.year == 2023
        and "crispr" in r.title.lower()
        and "food security" in r.title.lower()
        for r in hits
    )
    if not found:
        problems.append("fixture search missed the 2023 genome-editing record")

    report(
        "citations are contiguous and resolve; fixture search returns the 2023 record",
        not problems,
        f"{cited_moves} cited moves" + (f"; problems: {problems[:3]}" if problems else ""),
    )


# ---------------------------------------------------------------------------
# 8. crash replay: every event-log prefix rebuilds a valid state


def test_replay_from_every_event_boundary(catalog):
    source = ForumService(catalog=catalog)
    result = run_script(load_script(scenario_path(WALKTHROUGH)), service=source)
    events = source.project(result.project_id).log.events

    problems = []
    rebuilt = ForumService(catalog=catalog)
    for cut in range(1, len(events) + 1):
        project = rebuilt.load_project(events[:cut])
        issues = rebuilt.verify_project(project.project_id)
        if issues:
            problems.append(f"prefix {cut}: {issues[:2]}")
            continue
        digest = rebuilt.state_digest(project.project_id)
        if len(digest) != 64:
            problems.append(f"prefix {cut}: malformed digest")
        rebuilt.mindmap(project.project_id)  # must build without raising

    full = rebuilt.load_project(events)
    if rebuilt.state_digest(full.project_id) != result.state_digest:
        problems.append("full replay digest differs from the live digest")

    report(
        "every event-log prefix replays to a valid state",
        not problems,
        f"{len(events)} boundaries" + (f"; problems: {problems[:3]}" if problems else ""),
    )


# ---------------------------------------------------------------------------
# 9. memory lineage stays acyclic with consistent views


def test_memory_lineage_sound(scenario_runs):
    problems = []
    snippets_checked = 0
    for name, (service, result) in scenario_runs.items():
        project = service.project(result.project_id)
        for agent_id, memory in project.memories.items():
            stream = memory.stream_view()
            snippets_checked += len(stream)
            by_id = {s.snippet_id: s for s in stream}

            # cycle hunt over refines edges
            WHITE, GRAY, BLACK = 0, 1, 2
            color = dict.fromkeys(by_id, WHITE)

            def visit(sid: str) -> bool:
                color[sid] = GRAY
                for ref in by_id[sid].refines:
                    if ref not in by_id:
                        problems.append(f"{name}/{agent_id}: {sid} refines unknown {ref}")
                        continue
                    if color[ref] == GRAY or (color[ref] == WHITE and not visit(ref)):
                        return False
                color[sid] = BLACK
                return True

            for sid in by_id:
                if color[sid] == WHITE and not visit(sid):
                    problems.append(f"{name}/{agent_id}: refines cycle through {sid}")

            forest_ids: set[str] = set()

            def collect(node) -> None:
                forest_ids.add(node.snippet.snippet_id)
                for child in node.children:
                    collect(child)

            for root in memory.lineage_view():
                collect(root)
            if forest_ids != set(by_id):
                problems.append(f"{name}/{agent_id}: stream and lineage views diverge")

    report(
        "memory lineage is acyclic with matching stream/forest views",
        not problems,
        f"{snippets_checked} snippets" + (f"; problems: {problems[:3]}" if problems else ""),
    )
