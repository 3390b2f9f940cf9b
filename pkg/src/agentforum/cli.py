"""Command line entry points.

serve               run the HTTP service
run-script          execute a scripted session and print its digest
export              rebuild a project from its event log and export it
validate-transcript check a thread transcript (JSONL) against the rules
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .config import Settings, load_settings
from .events import load_events
from .protocol import thread_from_jsonl, verify_thread
from .scripting import AssertionFailed, ScriptError, load_script, run_script
from .service import ForumService


def _settings(args: argparse.Namespace) -> Settings:
    settings = load_settings(getattr(args, "config", None))
    overrides = {}
    for key in ("host", "port", "data_dir", "provider"):
        value = getattr(args, key.replace("-", "_"), None)
        if value is not None:
            overrides[key] = value
    if overrides:
        from dataclasses import replace

        settings = replace(settings, **overrides)
    return settings


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .api import create_app

    settings = _settings(args)
    app = create_app(ForumService(settings))
    uvicorn.run(app, host=settings.host, port=settings.port, log_level="info")
    return 0


def cmd_run_script(args: argparse.Namespace) -> int:
    settings = _settings(args)
    try:
        script = load_script(args.script)
    except ScriptError as exc:
        print(f"script invalid: {exc}", file=sys.stderr)
        return 2
    service = ForumService(settings)
    try:
        result = run_script(script, service=service)
    except AssertionFailed as exc:
        print(f"assertion failed: {exc}", file=sys.stderr)
        return 1
    moves = sum(1 for i in result.items if i.get("kind") in ("user_move", "agent_move"))
    errors = sum(1 for i in result.items if i.get("kind") == "agent_error")
    print(f"script: {script.title or args.script}")
    print(f"project: {result.project_id}")
    print(f"threads: {len(result.thread_ids)} moves: {moves} agent errors: {errors}")
    print(f"state digest: {result.state_digest}")
    if args.export:
        Path(args.export).write_text(result.transcript, encoding="utf-8")
        print(f"transcript written to {args.export}")
    return 0


def cmd_export(args: argparse.Namespace) -> int:
    settings = _settings(args)
    if not settings.data_dir:
        print("export needs --data-dir (or data_dir in the config)", file=sys.stderr)
        return 2
    log_path = Path(settings.data_dir) / f"{args.project_id}.events.jsonl"
    if not log_path.exists():
        print(f"no event log at {log_path}", file=sys.stderr)
        return 2
    service = ForumService(settings)
    service.load_project(load_events(log_path))
    document = service.export_project(args.project_id)
    if args.output:
        Path(args.output).write_text(document, encoding="utf-8")
        print(f"export written to {args.output}")
    else:
        print(document, end="")
    return 0


def cmd_validate_transcript(args: argparse.Namespace) -> int:
    text = Path(args.transcript).read_text(encoding="utf-8")
    try:
        state = thread_from_jsonl(text)
    except Exception as exc:
        print(f"invalid transcript: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    problems = verify_thread(state)
    if problems:
        for problem in problems:
            print(f"FAIL {problem}")
        return 1
    print(f"OK {len(state.moves)} moves, thread {state.thread_id}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="agentforum",
        description="Deliberation forum with expert agent panels.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    serve = sub.add_parser("serve", help="run the HTTP service")
    serve.add_argument("--host", default=None)
    serve.add_argument("--port", type=int, default=None)
    serve.add_argument("--config", default=None, help="YAML settings file")
    serve.add_argument("--data-dir", dest="data_dir", default=None)
    serve.set_defaults(func=cmd_serve)

    run = sub.add_parser("run-script", help="execute a scripted session")
    run.add_argument("script", help="scenario YAML path")
    run.add_argument("--provider", choices=("mock", "http"), default=None)
    run.add_argument("--config", default=None)
    run.add_argument("--export", default=None, help="write the transcript here")
    run.set_defaults(func=cmd_run_script)

    export = sub.add_parser("export", help="rebuild a project from its event log")
    export.add_argument("project_id")
    export.add_argument("--data-dir", dest="data_dir", default=None)
    export.add_argument("--config", default=None)
    export.add_argument("--output", default=None)
    export.set_defaults(func=cmd_export)

    validate = sub.add_parser(
        "validate-transcript", help="check a thread transcript JSONL"
    )
    validate.add_argument("transcript")
    validate.set_defaults(func=cmd_validate_transcript)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
