/** Sectioned proposal notepad. Sections autosave on blur with an
 * optimistic base digest; when another writer got there first the save
 * rebases onto the fresh section head and retries once. */

import type { ForumApi, ProposalSnapshot, SectionSaved } from "./api.js";
import { ApiError } from "./api.js";

export type DigestFn = (text: string) => Promise<string>;

/** sha256 hex of UTF-8 text, matching the server's section chaining. */
export const webCryptoDigest: DigestFn = async (text) => {
  const bytes = new TextEncoder().encode(text);
  const hash = await crypto.subtle.digest("SHA-256", bytes);
  return [...new Uint8Array(hash)].map((b) => b.toString(16).padStart(2, "0")).join("");
};

export interface SaveResult {
  revised: boolean;
  rebased: boolean;
  digest: string;
}

export class Notepad {
  sections: Record<string, string> = {};
  private baseDigests: Record<string, string> = {};
  private drafts: Record<string, string> = {};

  constructor(
    private api: ForumApi,
    private projectId: string,
    private digest: DigestFn = webCryptoDigest,
  ) {}

  async load(): Promise<ProposalSnapshot> {
    const snapshot = await this.api.getProposal(this.projectId);
    this.sections = { ...snapshot.sections };
    this.drafts = {};
    this.baseDigests = await this.digestsFrom(snapshot);
    return snapshot;
  }

  /** Section head digests: the latest revision's after-digest, else the
   * digest of the untouched initial text. */
  private async digestsFrom(snapshot: ProposalSnapshot): Promise<Record<string, string>> {
    const digests: Record<string, string> = {};
    for (const [section, text] of Object.entries(snapshot.initial)) {
      digests[section] = await this.digest(text);
    }
    for (const revision of snapshot.revisions) {
      digests[revision.section] = revision.after_digest;
    }
    return digests;
  }

  edit(section: string, text: string): void {
    this.drafts[section] = text;
  }

  draftOf(section: string): string {
    return this.drafts[section] ?? this.sections[section] ?? "";
  }

  /** Autosave a section. A conflict (someone else revised the same
   * section since we loaded it) rebases onto the new head and retries
   * exactly once; the local text wins on top of the newer base. */
  async saveOnBlur(section: string): Promise<SaveResult> {
    const text = this.draftOf(section);
    try {
      const saved = await this.api.saveSection(
        this.projectId,
        section,
        text,
        this.baseDigests[section],
      );
      return this.applySave(section, text, saved, false);
    } catch (error) {
      if (!(error instanceof ApiError) || error.status !== 409) throw error;
      const snapshot = await this.api.getProposal(this.projectId);
      this.baseDigests = await this.digestsFrom(snapshot);
      const saved = await this.api.saveSection(
        this.projectId,
        section,
        text,
        this.baseDigests[section],
      );
      return this.applySave(section, text, saved, true);
    }
  }

  private applySave(
    section: string,
    text: string,
    saved: SectionSaved,
    rebased: boolean,
  ): SaveResult {
    this.sections[section] = text;
    this.baseDigests[section] = saved.section_digest;
    delete this.drafts[section];
    return { revised: saved.revised, rebased, digest: saved.section_digest };
  }

  appendNote(note: string): Promise<{ revised: boolean }> {
    return this.api.appendNote(this.projectId, note);
  }
}
