from __future__ import annotations

import pytest

from agentforum.scripting import (
    AssertionFailed,
    ScriptError,
    SessionScript,
    bundled_scenarios,
    load_script,
    run_script,
    validate_script,
)
from agentforum.service import ForumService

BASE = {
    "title": "unit scenario",
    "project": {
        "title": "Unit project",
        "roster": ["HCI_Researcher", "Privacy_Advocate"],
        "proposal": {"Motivation": "study things"},
    },
    "steps": [],
}


def script_with(steps, **overrides) -> SessionScript:
    data = dict(BASE, steps=steps)
    data.update(overrides)
    return SessionScript.from_dict(data)


def fresh_service(catalog, search_clients, provider) -> ForumService:
    return ForumService(provider=provider, search_clients=search_clients, catalog=catalog)


def test_from_dict_requires_project_and_roster():
    with pytest.raises(ScriptError, match="mapping"):
        SessionScript.from_dict([])
    with pytest.raises(ScriptError, match="project"):
        SessionScript.from_dict({"steps": []})
    with pytest.raises(ScriptError, match="roster"):
        SessionScript.from_dict({"project": {"title": "x", "roster": []}})


def test_validate_rejects_unknown_action():
    script = script_with([{"action": "dance"}])
    with pytest.raises(ScriptError, match="unknown action"):
        validate_script(script)


def test_validate_rejects_bad_proposal_section():
    with pytest.raises(ScriptError, match="Abstract"):
        validate_script(
            script_with([], project={
                "title": "x",
                "roster": ["HCI_Researcher"],
                "proposal": {"Abstract": "y"},
            })
        )


def test_validate_rejects_forward_thread_ref():
    steps = [{"action": "reply", "target": "main:last", "text": "hi"}]
    with pytest.raises(ScriptError, match="unknown thread ref"):
        validate_script(script_with(steps))


def test_validate_rejects_bad_locator_and_mention():
    steps = [
        {"action": "create_thread", "ref": "main", "title": "T", "body": "B"},
        {"action": "reply", "target": "main:middle", "text": "hi"},
    ]
    with pytest.raises(ScriptError, match="locator"):
        validate_script(script_with(steps))
    steps[1] = {"action": "reply", "target": "main:last", "text": "hi", "mentions": ["Ghost"]}
    with pytest.raises(ScriptError, match="Ghost"):
        validate_script(script_with(steps))


def test_validate_rejects_bad_stance_and_agent():
    steps = [
        {"action": "create_thread", "ref": "main", "title": "T", "body": "B"},
        {"action": "what_if", "target": "main:root", "agent": "Ghost", "stance": "agree"},
    ]
    with pytest.raises(ScriptError, match="Ghost"):
        validate_script(script_with(steps))
    steps[1] = {
        "action": "what_if",
        "target": "main:root",
        "agent": "HCI_Researcher",
        "stance": "shrug",
    }
    with pytest.raises(ScriptError, match="shrug"):
        validate_script(script_with(steps))


def test_unknown_expectation_key_is_a_script_error(catalog, search_clients, provider):
    steps = [
        {
            "action": "create_thread",
            "ref": "main",
            "title": "T",
            "body": "B",
            "expect": {"vibes": "good"},
        }
    ]
    with pytest.raises(ScriptError, match="vibes"):
        run_script(script_with(steps), fresh_service(catalog, search_clients, provider))


def test_run_empty_script_yields_digest(catalog, search_clients, provider):
    result = run_script(script_with([]), fresh_service(catalog, search_clients, provider))
    assert result.project_id == "p1"
    assert len(result.state_digest) == 64
    assert result.items == []
    assert result.thread_ids == {}
    assert "Unit project" in result.transcript


def test_run_script_executes_and_records(catalog, search_clients, provider):
    steps = [
        {
            "action": "create_thread",
            "ref": "main",
            "title": "Kickoff",
            "body": "Where to begin?",
            "expect": {"root_act": "ISSUE"},
        },
        {
            "action": "reply",
            "target": "main:root",
            "text": "your take?",
            "mentions": ["HCI_Researcher"],
            "expect": {
                "responders": ["HCI_Researcher"],
                "new_agent_moves": 1,
                "authors": ["HCI_Researcher"],
                "agent_errors": 0,
            },
        },
        {
            "action": "what_if",
            "target": "main:#3",
            "agent": "Privacy_Advocate",
            "stance": "disagree",
            "post": True,
            "expect": {"preview_act": "REBUT", "acts": ["REBUT"]},
        },
        {
            "action": "branch",
            "ref": "side",
            "source": "main:#3",
            "expect": {"root_act": "ISSUE"},
        },
        {
            "action": "edit_proposal",
            "section": "Methods",
            "text": "Pilot with five users.",
            "expect": {"revised": True},
        },
    ]
    result = run_script(script_with(steps), fresh_service(catalog, search_clients, provider))
    assert result.thread_ids == {"main": "t1", "side": "t2"}
    kinds = [i["kind"] for i in result.items]
    assert kinds == ["user_move", "agent_move", "agent_move"]


def test_mentions_are_prepended_when_missing(catalog, search_clients, provider):
    steps = [
        {"action": "create_thread", "ref": "main", "title": "T", "body": "B"},
        {
            "action": "reply",
            "target": "main:root",
            "text": "already @Privacy_Advocate inline",
            "mentions": ["Privacy_Advocate"],
            "expect": {"responders": ["Privacy_Advocate"]},
        },
    ]
    result = run_script(script_with(steps), fresh_service(catalog, search_clients, provider))
    user_move = result.items[0]["move"]
    # the mention was already present, so nothing was prepended
    assert user_move["body"] == "already @Privacy_Advocate inline"


def test_failed_expectation_reports_step(catalog, search_clients, provider):
    steps = [
        {"action": "create_thread", "ref": "main", "title": "T", "body": "B"},
        {
            "action": "reply",
            "target": "main:root",
            "text": "quiet note",
            "expect": {"new_agent_moves": 3},
        },
    ]
    with pytest.raises(AssertionFailed) as excinfo:
        run_script(script_with(steps), fresh_service(catalog, search_clients, provider))
    assert excinfo.value.step == 2
    assert "new_agent_moves" in str(excinfo.value)


def test_out_of_range_position_fails_at_that_step(catalog, search_clients, provider):
    steps = [
        {"action": "create_thread", "ref": "main", "title": "T", "body": "B"},
        {"action": "reply", "target": "main:#9", "text": "hi"},
    ]
    with pytest.raises(AssertionFailed) as excinfo:
        run_script(script_with(steps), fresh_service(catalog, search_clients, provider))
    assert excinfo.value.step == 2


def test_same_script_same_digest(catalog, search_clients, provider):
    steps = [
        {"action": "create_thread", "ref": "main", "title": "T", "body": "B"},
        {
            "action": "reply",
            "target": "main:root",
            "text": "openers?",
            "mentions": ["HCI_Researcher"],
        },
    ]
    first = run_script(script_with(steps), fresh_service(catalog, search_clients, provider))
    second = run_script(script_with(steps), fresh_service(catalog, search_clients, provider))
    assert first.state_digest == second.state_digest
    assert first.transcript == second.transcript


def test_bundled_scenarios_load_and_validate():
    paths = bundled_scenarios()
    assert len(paths) == 3
    for path in paths:
        script = load_script(path)
        assert script.title
        assert script.steps
