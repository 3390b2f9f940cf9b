import { beforeEach, describe, expect, it } from "vitest";
import { ForumApi, type StreamItem } from "../src/api.js";
import { WhatIfPanel } from "../src/whatif.js";
import { FakeServer } from "./fakeServer.js";

let fake: FakeServer;
let panel: WhatIfPanel;

beforeEach(() => {
  fake = new FakeServer();
  panel = new WhatIfPanel(new ForumApi("", fake.fetch), "p1", "t1");
});

describe("previewing", () => {
  it("never mutates the thread, even after discarding", async () => {
    const before = fake.moveCount;
    panel.open("m1");
    panel.setAgent("Curie");
    panel.setStance("disagree");
    await panel.preview();
    expect(fake.moveCount).toBe(before);
    panel.close();
    expect(fake.moveCount).toBe(before);
    expect(panel.draft).toBeNull();
    expect(panel.isOpen).toBe(false);
  });

  it("a disagree draft carries the REBUT badge", async () => {
    panel.open("m1");
    panel.setAgent("Curie");
    panel.setStance("disagree");
    await panel.preview();
    expect(panel.badge).toBe("REBUT");
  });

  it("maps each stance onto its deliberation act", async () => {
    panel.open("m1");
    panel.setAgent("Noether");
    const acts: string[] = [];
    for (const stance of ["agree", "disagree", "question"] as const) {
      panel.setStance(stance);
      acts.push((await panel.preview()).act);
    }
    expect(acts).toEqual(["SUPPORT", "REBUT", "QUESTION"]);
  });

  it("regenerating with identical inputs is stable", async () => {
    panel.open("m2");
    panel.setAgent("Noether");
    panel.setStance("question");
    const first = await panel.preview();
    const second = await panel.regenerate();
    const content = ({ act, body, rationale, citations }: typeof first) => ({
      act,
      body,
      rationale,
      citations,
    });
    expect(content(second)).toEqual(content(first));
    expect(fake.previews.size).toBe(1); // the fresh draft replaced the old one
  });

  it("changing the stance produces a different draft for the same target", async () => {
    panel.open("m2");
    panel.setAgent("Noether");
    panel.setStance("agree");
    const agree = await panel.preview();
    panel.setStance("disagree");
    const disagree = await panel.preview();
    expect(disagree.body).not.toBe(agree.body);
    expect(disagree.act).toBe("REBUT");
  });
});

describe("posting", () => {
  it("publishes the draft as a real move and closes the panel", async () => {
    panel.open("m1");
    panel.setAgent("Curie");
    panel.setStance("disagree");
    const draft = await panel.preview();
    const before = fake.moveCount;

    const streamed: StreamItem[] = [];
    const items = await panel.post((item) => streamed.push(item));
    expect(items.map((i) => i.kind)).toEqual(["agent_move", "done"]);
    expect(fake.moveCount).toBe(before + 1);

    const posted = items[0];
    if (posted?.kind !== "agent_move") throw new Error("expected agent_move");
    expect(posted.move.act).toBe("REBUT");
    expect(posted.move.body).toBe(draft.body);
    expect(posted.move.target).toBe("m1");
    expect(panel.isOpen).toBe(false);
    expect(panel.error).toBeNull();
  });

  it("keeps the draft and shows the rule name when the server rejects it", async () => {
    // Curie rebutting Curie's own move violates the self-rebuttal rule
    panel.open("m3");
    panel.setAgent("Curie");
    panel.setStance("disagree");
    const draft = await panel.preview();
    const before = fake.moveCount;

    const streamed: StreamItem[] = [];
    const items = await panel.post((item) => streamed.push(item));
    expect(items).toEqual([
      { kind: "error", error: "SelfRebuttal", detail: "an agent may not rebut its own move" },
    ]);
    expect(streamed).toEqual([]); // nothing reached the thread view
    expect(fake.moveCount).toBe(before);
    expect(panel.error).toBe("SelfRebuttal");
    expect(panel.draft).toBe(draft);
    expect(fake.previews.has(draft.preview_id)).toBe(true); // still postable later
  });

  it("a stale preview id surfaces as an in-band error", async () => {
    panel.open("m1");
    panel.setAgent("Faraday");
    panel.setStance("agree");
    const draft = await panel.preview();
    fake.previews.delete(draft.preview_id);
    const items = await panel.post(() => undefined);
    expect(items[0]).toEqual({
      kind: "error",
      error: "UnknownPreview",
      detail: `no preview '${draft.preview_id}'`,
    });
    expect(panel.error).toBe("UnknownPreview");
  });
});
