"""Scripted sessions: YAML-driven runs with assertion hooks.

A session script creates one project and walks an ordered list of user
actions (create_thread, reply, what_if, branch, edit_proposal). Threads
get symbolic refs; moves are addressed as ``<ref>:root``, ``<ref>:last``
or ``<ref>:#N`` (1-based position). References are validated before
anything executes, and each step may carry an ``expect`` block whose
failure aborts the run with the step number.

Under the deterministic mock provider the same script always produces
the same transcript and the same final state digest.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import yaml

from .forum import PROPOSAL_SECTIONS, Stance
from .personas import AgentPersona
from .service import ForumService

ACTIONS = ("create_thread", "reply", "what_if", "branch", "edit_proposal")


class ScriptError(ValueError):
    """The script is malformed; nothing was executed."""


class AssertionFailed(AssertionError):
    def __init__(self, step: int, message: str):
        super().__init__(f"step {step}: {message}")
        self.step = step


@dataclass(frozen=True)
class SessionScript:
    title: str
    project_title: str
    roster: tuple[str, ...]
    proposal_sections: Mapping[str, str]
    steps: tuple[Mapping, ...]

    @classmethod
    def from_dict(cls, data: Mapping) -> SessionScript:
        if not isinstance(data, Mapping):
            raise ScriptError("script must be a mapping")
        project = data.get("project")
        if not isinstance(project, Mapping):
            raise ScriptError("script needs a 'project' mapping")
        roster = project.get("roster")
        if not isinstance(roster, Sequence) or not roster:
            raise ScriptError("project.roster must be a non-empty list")
        steps = data.get("steps", [])
        if not isinstance(steps, Sequence):
            raise ScriptError("steps must be a list")
        return cls(
            title=str(data.get("title", "")),
            project_title=str(project.get("title", "")),
            roster=tuple(roster),
            proposal_sections=dict(project.get("proposal", {})),
            steps=tuple(steps),
        )


def load_script(path: str | Path) -> SessionScript:
    with open(path, encoding="utf-8") as handle:
        data = yaml.safe_load(handle)
    script = SessionScript.from_dict(data)
    validate_script(script)
    return script


def _require(step: Mapping, key: str, index: int) -> object:
    if key not in step:
        raise ScriptError(f"step {index}: missing {key!r}")
    return step[key]


def validate_script(script: SessionScript) -> None:
    """Static checks: every reference points at something already created."""
    for section in script.proposal_sections:
        if section not in PROPOSAL_SECTIONS:
            raise ScriptError(f"unknown proposal section {section!r}")
    refs: set[str] = set()
    for index, step in enumerate(script.steps, start=1):
        if not isinstance(step, Mapping):
            raise ScriptError(f"step {index}: must be a mapping")
        action = step.get("action")
        if action not in ACTIONS:
            raise ScriptError(f"step {index}: unknown action {action!r}")
        if action == "create_thread":
            _require(step, "title", index)
            _require(step, "body", index)
            refs.add(str(step.get("ref", f"step{index}")))
        elif action == "reply":
            target = str(_require(step, "target", index))
            _check_move_ref(target, refs, index)
            _require(step, "text", index)
            for agent in step.get("mentions", []):
                if agent not in script.roster:
                    raise ScriptError(
                        f"step {index}: mention {agent!r} not on roster"
                    )
        elif action == "what_if":
            target = str(_require(step, "target", index))
            _check_move_ref(target, refs, index)
            agent = _require(step, "agent", index)
            if agent not in script.roster:
                raise ScriptError(f"step {index}: agent {agent!r} not on roster")
            stance = _require(step, "stance", index)
            try:
                Stance(stance)
            except ValueError:
                raise ScriptError(
                    f"step {index}: unknown stance {stance!r}"
                ) from None
        elif action == "branch":
            source = str(_require(step, "source", index))
            _check_move_ref(source, refs, index)
            refs.add(str(step.get("ref", f"step{index}")))
        elif action == "edit_proposal":
            section = _require(step, "section", index)
            if section not in PROPOSAL_SECTIONS:
                raise ScriptError(f"step {index}: unknown section {section!r}")
            _require(step, "text", index)


def _check_move_ref(ref: str, known: set[str], index: int) -> None:
    thread_ref, _, locator = ref.partition(":")
    if thread_ref not in known:
        raise ScriptError(f"step {index}: unknown thread ref {thread_ref!r}")
    if locator in ("root", "last", ""):
        return
    if locator.startswith("#") and locator[1:].isdigit():
        return
    raise ScriptError(f"step {index}: bad move locator {locator!r}")


@dataclass
class ScriptResult:
    project_id: str
    transcript: str
    state_digest: str
    items: list[dict] = field(default_factory=list)
    thread_ids: dict[str, str] = field(default_factory=dict)


def run_script(
    script: SessionScript,
    service: ForumService | None = None,
    catalog: Mapping[str, AgentPersona] | None = None,
) -> ScriptResult:
    """Execute against a fresh project and return transcript + digest."""
    validate_script(script)
    service = service or ForumService(catalog=catalog)
    project = service.create_project(
        script.project_title, list(script.roster), script.proposal_sections
    )
    runner = _Runner(service, project.project_id)
    for index, step in enumerate(script.steps, start=1):
        runner.run_step(index, dict(step))
    return ScriptResult(
        project_id=project.project_id,
        transcript=service.export_project(project.project_id),
        state_digest=service.state_digest(project.project_id),
        items=runner.items,
        thread_ids=dict(runner.refs),
    )


class _Runner:
    def __init__(self, service: ForumService, project_id: str):
        self.service = service
        self.project_id = project_id
        self.refs: dict[str, str] = {}
        self.items: list[dict] = []

    def resolve_move(self, ref: str, index: int) -> tuple[str, str]:
        thread_ref, _, locator = ref.partition(":")
        thread_id = self.refs.get(thread_ref)
        if thread_id is None:
            raise AssertionFailed(index, f"unknown thread ref {thread_ref!r}")
        state = self.service.project(self.project_id).thread(thread_id)
        if locator in ("root", ""):
            move = state.moves[0]
        elif locator == "last":
            move = state.moves[-1]
        else:
            position = int(locator.lstrip("#"))
            if position < 1 or position > len(state.moves):
                raise AssertionFailed(
                    index, f"{ref!r}: thread has {len(state.moves)} moves"
                )
            move = state.moves[position - 1]
        return thread_id, move.move_id

    def run_step(self, index: int, step: dict) -> None:
        action = step["action"]
        step_items: list[dict] = []
        observed: dict = {}

        if action == "create_thread":
            thread_id, root = self.service.create_thread(
                self.project_id, step["title"], step["body"]
            )
            self.refs[str(step.get("ref", f"step{index}"))] = thread_id
            observed["root_act"] = root.act.value if root.act else None
            observed["thread_id"] = thread_id

        elif action == "reply":
            thread_id, parent_id = self.resolve_move(str(step["target"]), index)
            text = str(step["text"])
            for agent in step.get("mentions", []):
                if f"@{agent}" not in text:
                    text = f"@{agent} {text}"
            preview = self.service.responder_preview(
                self.project_id, thread_id, parent_id, text
            )
            observed["responders"] = preview["responders"]
            step_items = self.service.post_reply_items(
                self.project_id, thread_id, parent_id, text
            )

        elif action == "what_if":
            thread_id, target_id = self.resolve_move(str(step["target"]), index)
            draft = self.service.what_if_preview(
                self.project_id, thread_id, target_id, step["agent"], step["stance"]
            )
            observed["preview_act"] = draft.act.value
            observed["preview_body"] = draft.body
            if step.get("post", False):
                step_items = list(
                    self.service.post_preview(
                        self.project_id, thread_id, draft.preview_id
                    )
                )

        elif action == "branch":
            source_thread, source_move = self.resolve_move(str(step["source"]), index)
            thread_id, root = self.service.branch_thread(
                self.project_id, source_thread, source_move, step.get("title")
            )
            self.refs[str(step.get("ref", f"step{index}"))] = thread_id
            observed["root_act"] = root.act.value if root.act else None
            observed["thread_id"] = thread_id

        elif action == "edit_proposal":
            revision = self.service.edit_proposal(
                self.project_id,
                step["section"],
                step["text"],
                step.get("base_digest"),
            )
            observed["revised"] = revision is not None

        self.items.extend(step_items)
        self._check_expectations(index, step.get("expect") or {}, observed, step_items)

    def _check_expectations(
        self, index: int, expect: Mapping, observed: dict, step_items: list[dict]
    ) -> None:
        agent_moves = [i for i in step_items if i.get("kind") == "agent_move"]
        agent_errors = [i for i in step_items if i.get("kind") == "agent_error"]
        checks = {
            "responders": lambda want: observed.get("responders") == list(want),
            "root_act": lambda want: observed.get("root_act") == want,
            "preview_act": lambda want: observed.get("preview_act") == want,
            "revised": lambda want: observed.get("revised") == bool(want),
            "new_agent_moves": lambda want: len(agent_moves) == int(want),
            "agent_errors": lambda want: len(agent_errors) == int(want),
            "acts": lambda want: [m["move"]["act"] for m in agent_moves] == list(want),
            "authors": lambda want: [m["move"]["author"] for m in agent_moves]
            == list(want),
        }
        for key, want in expect.items():
            if key not in checks:
                raise ScriptError(f"step {index}: unknown expectation {key!r}")
            if not checks[key](want):
                raise AssertionFailed(
                    index,
                    f"expectation {key}={want!r} not met "
                    f"(observed={observed}, moves={len(agent_moves)}, "
                    f"errors={len(agent_errors)})",
                )


def scenario_path(name: str) -> Path:
    return Path(__file__).parent / "scenarios" / name


def bundled_scenarios() -> tuple[Path, ...]:
    return tuple(sorted(scenario_path("").glob("*.yaml")))
