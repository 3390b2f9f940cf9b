import { beforeEach, describe, expect, it } from "vitest";
import { ForumApi, type StreamItem } from "../src/api.js";
import { activeMention, Composer, filterRoster } from "../src/composer.js";
import { FakeServer } from "./fakeServer.js";

let fake: FakeServer;
let composer: Composer;

beforeEach(() => {
  fake = new FakeServer();
  composer = new Composer(new ForumApi("", fake.fetch), "p1", "t1", fake.roster);
  composer.parentMoveId = "m1";
});

describe("mention autocomplete", () => {
  it("a bare @ offers the whole roster", () => {
    composer.draft = "hello @";
    expect(composer.suggestions(7)).toEqual(["Faraday", "Curie", "Noether"]);
  });

  it("filters by case-insensitive containment, not prefix", () => {
    composer.draft = "ping @ra";
    expect(composer.suggestions(8)).toEqual(["Faraday"]);
    composer.draft = "ping @E";
    expect(composer.suggestions(7)).toEqual(["Curie", "Noether"]);
    composer.draft = "ping @URIE";
    expect(composer.suggestions(10)).toEqual(["Curie"]);
  });

  it("offers nothing outside a mention token", () => {
    composer.draft = "plain text";
    expect(composer.suggestions(10)).toEqual([]);
    expect(activeMention("plain text", 10)).toBeNull();
  });

  it("filterRoster with an empty token returns everything", () => {
    expect(filterRoster(["A", "B"], "")).toEqual(["A", "B"]);
  });

  it("insertMention swaps the typed token for the canonical handle", () => {
    composer.draft = "what say you @far";
    const caret = composer.insertMention("Faraday", composer.draft.length);
    expect(composer.draft).toBe("what say you @Faraday ");
    expect(caret).toBe(composer.draft.length);
  });
});

describe("responder preview", () => {
  it("mirrors the server's resolution verbatim, canonical casing included", async () => {
    composer.draft = "@curie thoughts? maybe @NOETHER too";
    const preview = await composer.refreshPreview();
    expect(composer.willNotify).toEqual(["Curie", "Noether"]);
    expect(composer.willNotify).toEqual(preview.responders);
    expect(composer.cleanedText).toBe("@Curie thoughts? maybe @Noether too");
    expect(composer.notifyLine()).toBe("Will notify: @Curie, @Noether");
  });

  it("defaults to the parent author when replying to an agent unmentioned", async () => {
    composer.parentMoveId = "m2";
    composer.draft = "can you expand on that?";
    await composer.refreshPreview();
    expect(composer.willNotify).toEqual(["Faraday"]);
  });

  it("prompts for a mention when nobody would be notified", async () => {
    composer.draft = "just thinking aloud";
    await composer.refreshPreview();
    expect(composer.willNotify).toEqual([]);
    expect(composer.notifyLine()).toBe("Will notify: nobody (mention an agent)");
  });
});

describe("submit", () => {
  it("the posted mentions reproduce the previewed responders exactly", async () => {
    composer.draft = "@noether first, then @faraday";
    await composer.refreshPreview();
    const promised = [...composer.willNotify];

    const streamed: StreamItem[] = [];
    await composer.submit((item) => streamed.push(item));
    const agentAuthors = streamed
      .filter((item) => item.kind === "agent_move")
      .map((item) => (item.kind === "agent_move" ? item.move.author : ""));
    expect(agentAuthors).toEqual(promised);
    expect(agentAuthors).toEqual(["Noether", "Faraday"]);

    const userItem = streamed[0];
    if (userItem?.kind !== "user_move") throw new Error("expected user_move first");
    expect(userItem.move.body).toBe("@Noether first, then @Faraday");
    expect(composer.draft).toBe("");
  });

  it("cannot submit an empty draft or without a parent", () => {
    composer.draft = "   ";
    expect(composer.canSubmit).toBe(false);
    composer.draft = "something";
    composer.parentMoveId = null;
    expect(composer.canSubmit).toBe(false);
    composer.parentMoveId = "m1";
    expect(composer.canSubmit).toBe(true);
  });
});
