/** What-if side panel: preview how a chosen agent would respond to a move
 * under a chosen stance, regenerate, then post or discard. Previewing
 * never adds anything to the thread; only Post goes through the normal
 * reply pipeline. */

import type { ForumApi, PreviewDraft, StreamItem } from "./api.js";

export type Stance = "agree" | "disagree" | "question";

export const STANCES: Stance[] = ["agree", "disagree", "question"];

export class WhatIfPanel {
  targetMoveId: string | null = null;
  agentId: string | null = null;
  stance: Stance = "agree";
  draft: PreviewDraft | null = null;
  /** Violated rule name when the server rejected the post. */
  error: string | null = null;

  constructor(
    private api: ForumApi,
    private projectId: string,
    private threadId: string,
  ) {}

  get isOpen(): boolean {
    return this.targetMoveId !== null;
  }

  open(targetMoveId: string): void {
    this.targetMoveId = targetMoveId;
    this.draft = null;
    this.error = null;
  }

  /** Discard the panel; a draft never previewed into the thread. */
  close(): void {
    this.targetMoveId = null;
    this.agentId = null;
    this.stance = "agree";
    this.draft = null;
    this.error = null;
  }

  setAgent(agentId: string): void {
    this.agentId = agentId;
  }

  setStance(stance: Stance): void {
    this.stance = stance;
  }

  /** Fetch a draft; calling again replaces the previous one. */
  async preview(): Promise<PreviewDraft> {
    if (this.targetMoveId === null || this.agentId === null) {
      throw new Error("what-if: pick a target and an agent first");
    }
    this.error = null;
    this.draft = await this.api.whatIf(
      this.projectId,
      this.threadId,
      this.targetMoveId,
      this.agentId,
      this.stance,
    );
    return this.draft;
  }

  regenerate(): Promise<PreviewDraft> {
    return this.preview();
  }

  /** Act badge shown on the draft card (REBUT for disagree, and so on). */
  get badge(): string {
    return this.draft?.act ?? "";
  }

  /** Publish the draft through the reply pipeline. On a rule violation
   * the panel stays open and `error` carries the violated rule name. */
  async post(onItem: (item: StreamItem) => void): Promise<StreamItem[]> {
    if (this.draft === null) throw new Error("what-if: preview before posting");
    const items: StreamItem[] = [];
    for await (const item of this.api.postPreview(
      this.projectId,
      this.threadId,
      this.draft.preview_id,
    )) {
      items.push(item);
      if (item.kind === "error") {
        // rejected draft stays on the server; keep it visible with the rule name
        this.error = item.error;
        return items;
      }
      onItem(item);
    }
    this.close();
    return items;
  }
}
