/** App shell: wires the thread view, composer, what-if panel, mind map,
 * and notepad against one project. The page is addressed as
 * #/<project-id>/<thread-id>, defaulting to p1/t1. */

import { ForumApi } from "./api.js";
import type { StreamItem } from "./api.js";
import { Composer } from "./composer.js";
import { MindMapView } from "./mindmap.js";
import { Notepad } from "./notepad.js";
import {
  appendStreamItem,
  buildThreadVM,
  highlightMove,
  renderThread,
  toggleCollapse,
  type ThreadVM,
} from "./threadView.js";
import { WhatIfPanel, STANCES, type Stance } from "./whatif.js";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className: string,
  parent: HTMLElement,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  node.className = className;
  parent.appendChild(node);
  return node;
}

export async function mountApp(root: HTMLElement, baseUrl = ""): Promise<void> {
  const hashParts = location.hash.replace(/^#\/?/, "").split("/").filter(Boolean);
  const projectId = hashParts[0] ?? "p1";
  const threadId = hashParts[1] ?? "t1";
  const api = new ForumApi(baseUrl);
  const project = await api.getProject(projectId);

  root.textContent = "";
  const layout = el("div", "layout", root);
  const threadPane = el("section", "thread-pane", layout);
  const sidePane = el("aside", "side-pane", layout);

  // ---- threaded forum -----------------------------------------------
  const threadData = await api.getThread(projectId, threadId);
  const vm: ThreadVM = buildThreadVM(threadData.thread_id, threadData.tree);
  const threadEl = el("div", "thread", threadPane);
  const redraw = () =>
    renderThread(threadEl, vm, {
      onToggle: (id) => {
        toggleCollapse(vm, id);
        redraw();
      },
    });
  redraw();

  // ---- composer ------------------------------------------------------
  const composer = new Composer(api, projectId, threadId, project.roster);
  composer.parentMoveId = threadData.tree.move.move_id;
  const composerEl = el("div", "composer", threadPane);
  const textarea = el("textarea", "composer-input", composerEl);
  const suggestionsEl = el("ul", "mention-suggestions", composerEl);
  const notifyEl = el("div", "notify-line", composerEl);
  const submitBtn = el("button", "composer-submit", composerEl);
  submitBtn.textContent = "Post reply";

  const refreshComposer = async () => {
    composer.draft = textarea.value;
    submitBtn.disabled = !composer.canSubmit;
    suggestionsEl.textContent = "";
    for (const handle of composer.suggestions(textarea.selectionStart ?? 0)) {
      const item = el("li", "mention-suggestion", suggestionsEl);
      item.textContent = `@${handle}`;
      item.addEventListener("mousedown", (event) => {
        event.preventDefault();
        const caret = composer.insertMention(handle, textarea.selectionStart ?? 0);
        textarea.value = composer.draft;
        textarea.setSelectionRange(caret, caret);
        void refreshComposer();
      });
    }
    await composer.refreshPreview().catch(() => undefined);
    notifyEl.textContent = composer.notifyLine();
  };
  textarea.addEventListener("input", () => void refreshComposer());

  const onStreamItem = (item: StreamItem) => {
    appendStreamItem(threadEl, vm, item);
  };
  submitBtn.addEventListener("click", () => {
    void composer.submit(onStreamItem).then(() => {
      textarea.value = "";
      return refreshComposer();
    });
  });

  // ---- what-if panel --------------------------------------------------
  const whatIf = new WhatIfPanel(api, projectId, threadId);
  const panelEl = el("div", "whatif-panel", sidePane);
  const agentPick = el("select", "whatif-agent", panelEl);
  for (const agent of project.roster) {
    const option = document.createElement("option");
    option.value = agent;
    option.textContent = agent;
    agentPick.appendChild(option);
  }
  const stancePick = el("select", "whatif-stance", panelEl);
  for (const stance of STANCES) {
    const option = document.createElement("option");
    option.value = stance;
    option.textContent = stance;
    stancePick.appendChild(option);
  }
  const draftEl = el("div", "whatif-draft", panelEl);
  const previewBtn = el("button", "whatif-preview", panelEl);
  previewBtn.textContent = "Preview";
  const postBtn = el("button", "whatif-post", panelEl);
  postBtn.textContent = "Post";
  const errorEl = el("div", "whatif-error", panelEl);

  const drawDraft = () => {
    draftEl.textContent = "";
    if (whatIf.draft) {
      const badge = el("span", `act-badge act-${whatIf.badge.toLowerCase()}`, draftEl);
      badge.textContent = whatIf.badge;
      el("p", "whatif-body", draftEl).textContent = whatIf.draft.body;
    }
    errorEl.textContent = whatIf.error ?? "";
  };
  previewBtn.addEventListener("click", () => {
    whatIf.setAgent(agentPick.value);
    whatIf.setStance(stancePick.value as Stance);
    if (whatIf.targetMoveId === null) whatIf.open(threadData.tree.move.move_id);
    void whatIf.preview().then(drawDraft);
  });
  postBtn.addEventListener("click", () => {
    void whatIf.post(onStreamItem).then(drawDraft);
  });
  threadEl.addEventListener("dblclick", (event) => {
    const card = (event.target as HTMLElement).closest<HTMLElement>("[data-move-id]");
    if (card?.dataset.moveId) whatIf.open(card.dataset.moveId);
  });

  // ---- mind map --------------------------------------------------------
  const mapEl = el("div", "mindmap", sidePane);
  const map = new MindMapView(mapEl, {
    onNavigate: (locator) => {
      if (locator.moveId) highlightMove(threadEl, locator.moveId);
    },
  });
  map.render(await api.mindmap(projectId));
  mapEl.addEventListener("wheel", (event) => {
    map.setScale(Math.max(0.2, map.scale - Math.sign(event.deltaY) * 0.25));
  });

  // ---- notepad ---------------------------------------------------------
  const notepad = new Notepad(api, projectId);
  const snapshot = await notepad.load();
  const padEl = el("div", "notepad", sidePane);
  for (const section of Object.keys(snapshot.sections)) {
    el("h3", "notepad-heading", padEl).textContent = section;
    const field = el("textarea", "notepad-section", padEl);
    field.value = notepad.draftOf(section);
    field.addEventListener("input", () => notepad.edit(section, field.value));
    field.addEventListener("blur", () => {
      void notepad.saveOnBlur(section).then(() => {
        field.value = notepad.draftOf(section);
      });
    });
  }
}

const rootEl = typeof document !== "undefined" ? document.getElementById("app") : null;
if (rootEl) {
  void mountApp(rootEl);
}
