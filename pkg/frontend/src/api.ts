/** Typed client for the forum service. The UI never computes deliberation
 * state itself: act legality, responder routing, and commitments all come
 * from these endpoints. */

export interface Move {
  move_id: string;
  author: string;
  author_kind: "human" | "agent";
  act: string | null;
  target: string | null;
  body: string;
  rationale: string;
  citations: string[];
  tool_summary: string | null;
  timestamp: number;
}

export interface ThreadTreeNode {
  move: Move;
  children: ThreadTreeNode[];
}

export interface ThreadTree {
  thread_id: string;
  title: string;
  tree: ThreadTreeNode;
}

export interface BibliographyEntry {
  index: number;
  paper_id: string;
  title: string;
  first_author: string;
  year: number;
}

export interface RenderedBibliography {
  move_id: string;
  body: string;
  bibliography: BibliographyEntry[];
}

export interface ResponderPreview {
  responders: string[];
  cleaned_text: string;
}

export interface PreviewDraft {
  preview_id: string;
  target_move: string;
  agent_id: string;
  stance: string;
  act: string;
  body: string;
  rationale: string;
  citations: string[];
}

export type StreamItem =
  | { kind: "user_move"; thread_id: string; move: Move }
  | {
      kind: "agent_move";
      thread_id: string;
      move: Move;
      bibliography?: BibliographyEntry[];
    }
  | { kind: "agent_error"; agent_id: string; error: string; detail: string }
  | { kind: "error"; error: string; detail: string }
  | { kind: "done" };

export interface NodeLinkNode {
  id: string;
  thread_id: string;
  source: string;
  keyword: string;
  summary: string;
  title: string;
  label?: string;
}

export interface NodeLinkEdge {
  source: string;
  target: string;
  act: string;
  rationale: string;
}

export interface NodeLinkGraph {
  directed: boolean;
  nodes: NodeLinkNode[];
  links: NodeLinkEdge[];
  branch_links: { thread_id: string; source_thread_id: string; source_move_id: string }[];
}

export interface ProposalRevision {
  seq: number;
  section: string;
  before_digest: string;
  after_digest: string;
  timestamp: number;
}

export interface ProposalSnapshot {
  sections: Record<string, string>;
  initial: Record<string, string>;
  revisions: ProposalRevision[];
}

export interface SectionSaved {
  revised: boolean;
  revision: ProposalRevision | null;
  section_digest: string;
}

export interface ProjectDetail {
  project_id: string;
  title: string;
  roster: string[];
  threads: Record<string, string>;
  branch_links: { thread_id: string; source_thread_id: string; source_move_id: string }[];
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(
    public status: number,
    public error: string,
    public detail: string,
  ) {
    super(`${error}: ${detail}`);
  }
}

/** Parse an NDJSON response incrementally, yielding one item per line. */
export async function* ndjsonItems(response: Response): AsyncGenerator<StreamItem> {
  const body = response.body;
  if (!body) {
    for (const line of (await response.text()).split("\n")) {
      if (line.trim()) yield JSON.parse(line) as StreamItem;
    }
    return;
  }
  const reader = body.getReader();
  const decoder = new TextDecoder();
  let buffer = "";
  for (;;) {
    const { done, value } = await reader.read();
    if (done) break;
    buffer += decoder.decode(value, { stream: true });
    let newline: number;
    while ((newline = buffer.indexOf("\n")) >= 0) {
      const line = buffer.slice(0, newline).trim();
      buffer = buffer.slice(newline + 1);
      if (line) yield JSON.parse(line) as StreamItem;
    }
  }
  const tail = buffer.trim();
  if (tail) yield JSON.parse(tail) as StreamItem;
}

export class ForumApi {
  constructor(
    private baseUrl: string = "",
    private fetchImpl: FetchLike = (url, init) => fetch(url, init),
  ) {}

  private async request(path: string, init?: RequestInit): Promise<Response> {
    const response = await this.fetchImpl(this.baseUrl + path, init);
    if (!response.ok) {
      let error = "HttpError";
      let detail = response.statusText;
      try {
        const payload = (await response.json()) as { error?: string; detail?: string };
        error = payload.error ?? error;
        detail = payload.detail ?? detail;
      } catch {
        // non-JSON error body, keep the status text
      }
      throw new ApiError(response.status, error, detail);
    }
    return response;
  }

  private async json<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.request(path, init);
    return (await response.json()) as T;
  }

  private post(path: string, payload: unknown, headers?: Record<string, string>): Promise<Response> {
    return this.request(path, {
      method: "POST",
      headers: { "content-type": "application/json", ...headers },
      body: JSON.stringify(payload),
    });
  }

  getProject(projectId: string): Promise<ProjectDetail> {
    return this.json(`/projects/${projectId}`);
  }

  getThread(projectId: string, threadId: string): Promise<ThreadTree> {
    return this.json(`/projects/${projectId}/threads/${threadId}`);
  }

  async responderPreview(
    projectId: string,
    threadId: string,
    parentMoveId: string,
    text: string,
  ): Promise<ResponderPreview> {
    const response = await this.post(
      `/projects/${projectId}/threads/${threadId}/responder-preview`,
      { parent_move_id: parentMoveId, text },
    );
    return (await response.json()) as ResponderPreview;
  }

  async *postReply(
    projectId: string,
    threadId: string,
    parentMoveId: string,
    text: string,
    idempotencyKey?: string,
  ): AsyncGenerator<StreamItem> {
    const headers = idempotencyKey ? { "Idempotency-Key": idempotencyKey } : undefined;
    const response = await this.post(
      `/projects/${projectId}/threads/${threadId}/replies`,
      { parent_move_id: parentMoveId, text },
      headers,
    );
    yield* ndjsonItems(response);
  }

  async whatIf(
    projectId: string,
    threadId: string,
    targetMoveId: string,
    agentId: string,
    stance: string,
  ): Promise<PreviewDraft> {
    const response = await this.post(`/projects/${projectId}/threads/${threadId}/what-if`, {
      target_move_id: targetMoveId,
      agent_id: agentId,
      stance,
    });
    return (await response.json()) as PreviewDraft;
  }

  async *postPreview(
    projectId: string,
    threadId: string,
    previewId: string,
  ): AsyncGenerator<StreamItem> {
    const response = await this.post(
      `/projects/${projectId}/threads/${threadId}/what-if/${previewId}/post`,
      {},
    );
    yield* ndjsonItems(response);
  }

  mindmap(projectId: string, zoom = "summary"): Promise<NodeLinkGraph> {
    return this.json(`/projects/${projectId}/mindmap?zoom=${zoom}&format=node_link`);
  }

  bibliography(
    projectId: string,
    threadId: string,
    moveId: string,
  ): Promise<RenderedBibliography> {
    return this.json(`/projects/${projectId}/threads/${threadId}/moves/${moveId}/bibliography`);
  }

  getProposal(projectId: string): Promise<ProposalSnapshot> {
    return this.json(`/projects/${projectId}/proposal`);
  }

  async saveSection(
    projectId: string,
    section: string,
    text: string,
    baseDigest?: string,
  ): Promise<SectionSaved> {
    const response = await this.request(`/projects/${projectId}/proposal/${section}`, {
      method: "PUT",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ text, base_digest: baseDigest ?? null }),
    });
    return (await response.json()) as SectionSaved;
  }

  async appendNote(projectId: string, note: string): Promise<{ revised: boolean }> {
    const response = await this.post(`/projects/${projectId}/proposal/notes`, { note });
    return (await response.json()) as { revised: boolean };
  }

  getPersona(projectId: string, agentId: string): Promise<Record<string, unknown>> {
    return this.json(`/projects/${projectId}/personas/${agentId}`);
  }

  async savePersona(
    projectId: string,
    agentId: string,
    persona: Record<string, unknown>,
  ): Promise<Record<string, unknown>> {
    const response = await this.request(`/projects/${projectId}/personas/${agentId}`, {
      method: "PUT",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ persona }),
    });
    return (await response.json()) as Record<string, unknown>;
  }

  getMemory(
    projectId: string,
    agentId: string,
  ): Promise<{ stream: unknown[]; lineage: unknown[] }> {
    return this.json(`/projects/${projectId}/agents/${agentId}/memory`);
  }
}
