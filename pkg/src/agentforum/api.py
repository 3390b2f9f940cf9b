"""HTTP interface: JSON endpoints plus NDJSON reply streams.

Replies stream one JSON object per line as each agent finishes, so a
slow turn never hides the moves already posted. Mutating endpoints
accept an ``Idempotency-Key`` header (or body field); retrying a reply
with the same key replays the original stream instead of reposting.
"""

from __future__ import annotations

import json
from typing import Iterator

from fastapi import FastAPI, Header, Request, Response
from fastapi.responses import JSONResponse, PlainTextResponse, StreamingResponse
from pydantic import BaseModel

from .forum import SectionUnknown, StaleEdit, UnknownAgent, UnknownMove
from .mindmap import ZoomLevel, label_at, to_node_link, to_text
from .personas import PersonaError
from .protocol import ProtocolError
from .providers import ProviderUnavailable
from .retrieval import UnknownPaper
from .runtime import CompositionFailed
from .service import ForumService, UnknownPreview, UnknownProject, UnknownThread

NDJSON = "application/x-ndjson"


class ProjectBody(BaseModel):
    title: str
    roster: list[str]
    proposal_sections: dict[str, str] | None = None


class ThreadBody(BaseModel):
    title: str
    body: str


class ReplyBody(BaseModel):
    parent_move_id: str
    text: str
    author: str = "user"
    idempotency_key: str | None = None


class PreviewBody(BaseModel):
    parent_move_id: str
    text: str


class WhatIfBody(BaseModel):
    target_move_id: str
    agent_id: str
    stance: str


class BranchBody(BaseModel):
    move_id: str
    title: str | None = None


class SectionBody(BaseModel):
    text: str
    base_digest: str | None = None


class PersonaBody(BaseModel):
    persona: dict


class NoteBody(BaseModel):
    note: str


def _ndjson(items: Iterator[dict]) -> StreamingResponse:
    def lines() -> Iterator[str]:
        try:
            for item in items:
                yield json.dumps(item, ensure_ascii=False) + "\n"
            yield json.dumps({"kind": "done"}) + "\n"
        except Exception as exc:  # surface mid-stream failures in-band
            payload = {"kind": "error", "error": type(exc).__name__, "detail": str(exc)}
            yield json.dumps(payload, ensure_ascii=False) + "\n"

    return StreamingResponse(lines(), media_type=NDJSON)


_STATUS = {
    UnknownProject: 404,
    UnknownThread: 404,
    UnknownMove: 404,
    UnknownPreview: 404,
    UnknownPaper: 404,
    SectionUnknown: 404,
    UnknownAgent: 422,
    PersonaError: 422,
    ProtocolError: 422,
    StaleEdit: 409,
    # bare ValueError must stay below its subclasses: lookup is first match
    ValueError: 422,
    ProviderUnavailable: 503,
    CompositionFailed: 502,
}


def _status_for(exc: Exception) -> int:
    for klass, code in _STATUS.items():
        if isinstance(exc, klass):
            return code
    return 500


def create_app(service: ForumService) -> FastAPI:
    app = FastAPI(title="agentforum", docs_url=None, redoc_url=None)

    @app.exception_handler(Exception)
    async def handle_error(request: Request, exc: Exception) -> JSONResponse:
        if isinstance(exc, KeyError) and exc.args:
            detail = str(exc.args[0])  # str(KeyError) wraps the message in quotes
        else:
            detail = str(exc)
        if isinstance(exc, ProtocolError):
            body = exc.as_dict()
        else:
            body = {"error": type(exc).__name__, "detail": detail}
        return JSONResponse(status_code=_status_for(exc), content=body)

    for klass in _STATUS:
        app.add_exception_handler(klass, handle_error)

    # ------------------------------------------------------------------
    # projects

    @app.get("/projects")
    def list_projects() -> list[dict]:
        return [
            {
                "project_id": p.project_id,
                "title": p.title,
                "roster": list(p.roster),
                "threads": list(p.threads),
            }
            for p in service.projects.values()
        ]

    @app.post("/projects", status_code=201)
    def create_project(body: ProjectBody) -> dict:
        project = service.create_project(body.title, body.roster, body.proposal_sections)
        return {"project_id": project.project_id, "title": project.title}

    @app.get("/projects/{project_id}")
    def get_project(project_id: str) -> dict:
        project = service.project(project_id)
        return {
            "project_id": project.project_id,
            "title": project.title,
            "roster": list(project.roster),
            "threads": {
                t: project.thread_titles.get(t, "") for t in project.threads
            },
            "branch_links": [b.to_record() for b in project.branch_links],
        }

    @app.get("/projects/{project_id}/digest")
    def get_digest(project_id: str) -> dict:
        return {"project_id": project_id, "digest": service.state_digest(project_id)}

    @app.get("/projects/{project_id}/verify")
    def verify(project_id: str) -> dict:
        problems = service.verify_project(project_id)
        return {"ok": not problems, "problems": problems}

    @app.get("/projects/{project_id}/export")
    def export(project_id: str) -> PlainTextResponse:
        return PlainTextResponse(service.export_project(project_id))

    # ------------------------------------------------------------------
    # threads and replies

    @app.get("/projects/{project_id}/thread-suggestions")
    def thread_suggestions(project_id: str) -> list[dict]:
        return [
            {"title": s.title, "description": s.description}
            for s in service.suggest_threads(project_id)
        ]

    @app.post("/projects/{project_id}/threads", status_code=201)
    def create_thread(project_id: str, body: ThreadBody) -> dict:
        thread_id, root = service.create_thread(project_id, body.title, body.body)
        return {"thread_id": thread_id, "root": root.to_record()}

    @app.get("/projects/{project_id}/threads/{thread_id}")
    def get_thread(project_id: str, thread_id: str) -> dict:
        return service.thread_tree(project_id, thread_id)

    @app.post("/projects/{project_id}/threads/{thread_id}/responder-preview")
    def responder_preview(project_id: str, thread_id: str, body: PreviewBody) -> dict:
        return service.responder_preview(
            project_id, thread_id, body.parent_move_id, body.text
        )

    @app.post("/projects/{project_id}/threads/{thread_id}/replies")
    def post_reply(
        project_id: str,
        thread_id: str,
        body: ReplyBody,
        idempotency_key: str | None = Header(default=None),
    ) -> Response:
        key = body.idempotency_key or idempotency_key
        items = service.post_reply(
            project_id,
            thread_id,
            body.parent_move_id,
            body.text,
            author=body.author,
            idempotency_key=key,
        )
        return _ndjson(items)

    @app.post("/projects/{project_id}/threads/{thread_id}/what-if")
    def what_if(project_id: str, thread_id: str, body: WhatIfBody) -> dict:
        draft = service.what_if_preview(
            project_id, thread_id, body.target_move_id, body.agent_id, body.stance
        )
        return draft.to_record()

    @app.post("/projects/{project_id}/threads/{thread_id}/what-if/{preview_id}/post")
    def post_what_if(project_id: str, thread_id: str, preview_id: str) -> Response:
        items = service.post_preview(project_id, thread_id, preview_id)
        return _ndjson(items)

    @app.post("/projects/{project_id}/threads/{thread_id}/branch", status_code=201)
    def branch(project_id: str, thread_id: str, body: BranchBody) -> dict:
        new_thread_id, root = service.branch_thread(
            project_id, thread_id, body.move_id, body.title
        )
        return {"thread_id": new_thread_id, "root": root.to_record()}

    # ------------------------------------------------------------------
    # mind map

    @app.get("/projects/{project_id}/mindmap")
    def mindmap(project_id: str, zoom: str = "summary", format: str = "node_link"):
        graph = service.mindmap(project_id)
        if format == "text":
            return PlainTextResponse(to_text(graph))
        zoom_level = ZoomLevel(zoom)
        data = to_node_link(graph)
        for node_data, node in zip(data["nodes"], graph.nodes):
            node_data["label"] = label_at(node, zoom_level)
        return data

    # ------------------------------------------------------------------
    # personas, memory, papers, proposal

    @app.get("/projects/{project_id}/personas/{agent_id}")
    def get_persona(project_id: str, agent_id: str) -> dict:
        project = service.project(project_id)
        if agent_id not in project.personas:
            raise UnknownAgent(f"{agent_id!r} is not on the roster")
        return project.personas[agent_id].to_dict()

    @app.put("/projects/{project_id}/personas/{agent_id}")
    def put_persona(project_id: str, agent_id: str, body: PersonaBody) -> dict:
        persona = service.edit_persona(project_id, agent_id, body.persona)
        return persona.to_dict()

    @app.get("/projects/{project_id}/agents/{agent_id}/memory")
    def memory(project_id: str, agent_id: str) -> dict:
        return service.memory_views(project_id, agent_id)

    @app.get("/projects/{project_id}/papers/{paper_id}")
    def paper(project_id: str, paper_id: str) -> dict:
        return service.paper(project_id, paper_id).to_record()

    @app.get("/projects/{project_id}/threads/{thread_id}/moves/{move_id}/bibliography")
    def bibliography(project_id: str, thread_id: str, move_id: str) -> dict:
        return service.bibliography(project_id, thread_id, move_id)

    @app.get("/projects/{project_id}/proposal")
    def get_proposal(project_id: str) -> dict:
        return service.project(project_id).proposal.to_snapshot()

    @app.put("/projects/{project_id}/proposal/{section}")
    def put_section(project_id: str, section: str, body: SectionBody) -> dict:
        revision = service.edit_proposal(project_id, section, body.text, body.base_digest)
        return {
            "revised": revision is not None,
            "revision": revision.to_record() if revision else None,
            "section_digest": service.project(project_id).proposal.section_digest(section),
        }

    @app.post("/projects/{project_id}/proposal/notes")
    def post_note(project_id: str, body: NoteBody) -> dict:
        revision = service.append_note(project_id, body.note)
        return {"revised": revision is not None}

    return app
