/** Reply composer: @-mention autocomplete over the roster and a live
 * "Will notify" line. Routing is never computed here; the preview shown
 * is exactly what the server's responder resolution returned. */

import type { ForumApi, ResponderPreview, StreamItem } from "./api.js";

const ACTIVE_MENTION = /@([A-Za-z0-9_]*)$/;

export interface MentionContext {
  token: string;
  start: number;
  end: number;
}

/** The "@token" the caret is sitting in, if any. */
export function activeMention(draft: string, caret: number): MentionContext | null {
  const match = ACTIVE_MENTION.exec(draft.slice(0, caret));
  if (!match) return null;
  return {
    token: match[1] ?? "",
    start: caret - match[0].length,
    end: caret,
  };
}

/** Roster handles containing the typed token, case-insensitively; the
 * full roster while the token is still empty. */
export function filterRoster(roster: string[], token: string): string[] {
  const needle = token.toLowerCase();
  return roster.filter((handle) => handle.toLowerCase().includes(needle));
}

export class Composer {
  draft = "";
  parentMoveId: string | null = null;
  willNotify: string[] = [];
  cleanedText = "";
  busy = false;

  constructor(
    private api: ForumApi,
    private projectId: string,
    private threadId: string,
    public roster: string[],
  ) {}

  get canSubmit(): boolean {
    return this.draft.trim().length > 0 && this.parentMoveId !== null && !this.busy;
  }

  suggestions(caret: number): string[] {
    const context = activeMention(this.draft, caret);
    if (!context) return [];
    return filterRoster(this.roster, context.token);
  }

  /** Replace the active "@token" with the canonical handle; returns the
   * new caret position. No-op when the caret is not in a mention. */
  insertMention(handle: string, caret: number): number {
    const context = activeMention(this.draft, caret);
    if (!context) return caret;
    const inserted = `@${handle} `;
    this.draft = this.draft.slice(0, context.start) + inserted + this.draft.slice(context.end);
    return context.start + inserted.length;
  }

  /** Ask the server who the current draft would notify. */
  async refreshPreview(): Promise<ResponderPreview> {
    if (this.parentMoveId === null || this.draft.trim() === "") {
      this.willNotify = [];
      this.cleanedText = this.draft;
      return { responders: [], cleaned_text: this.draft };
    }
    const preview = await this.api.responderPreview(
      this.projectId,
      this.threadId,
      this.parentMoveId,
      this.draft,
    );
    this.willNotify = [...preview.responders];
    this.cleanedText = preview.cleaned_text;
    return preview;
  }

  notifyLine(): string {
    if (this.willNotify.length === 0) return "Will notify: nobody (mention an agent)";
    return `Will notify: ${this.willNotify.map((a) => `@${a}`).join(", ")}`;
  }

  /** Post the draft and hand each streamed item to the caller in server
   * order. The draft is cleared only when the stream finishes cleanly. */
  async submit(onItem: (item: StreamItem) => void): Promise<StreamItem[]> {
    if (!this.canSubmit || this.parentMoveId === null) {
      throw new Error("composer: nothing to submit");
    }
    this.busy = true;
    const items: StreamItem[] = [];
    try {
      for await (const item of this.api.postReply(
        this.projectId,
        this.threadId,
        this.parentMoveId,
        this.draft,
      )) {
        items.push(item);
        onItem(item);
      }
      this.draft = "";
      this.willNotify = [];
    } finally {
      this.busy = false;
    }
    return items;
  }
}
