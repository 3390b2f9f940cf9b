/** Threaded forum view: one card per move, act badges, collapse/expand,
 * citation tooltips. Fully expanded, N moves render exactly N cards;
 * collapsing hides a card's descendants and nothing else. */

import type { BibliographyEntry, Move, StreamItem, ThreadTreeNode } from "./api.js";

export interface ThreadVM {
  threadId: string;
  root: ThreadTreeNode;
  collapsed: Set<string>;
  parents: Map<string, string | null>;
}

export function buildThreadVM(threadId: string, root: ThreadTreeNode): ThreadVM {
  const parents = new Map<string, string | null>();
  const walk = (node: ThreadTreeNode, parent: string | null) => {
    parents.set(node.move.move_id, parent);
    for (const child of node.children) walk(child, node.move.move_id);
  };
  walk(root, null);
  return { threadId, root, collapsed: new Set(), parents };
}

export function toggleCollapse(vm: ThreadVM, moveId: string): void {
  if (vm.collapsed.has(moveId)) vm.collapsed.delete(moveId);
  else vm.collapsed.add(moveId);
}

/** Moves currently on screen, depth-first, respecting collapse flags. */
export function visibleMoves(vm: ThreadVM): { move: Move; depth: number }[] {
  const out: { move: Move; depth: number }[] = [];
  const walk = (node: ThreadTreeNode, depth: number) => {
    out.push({ move: node.move, depth });
    if (vm.collapsed.has(node.move.move_id)) return;
    for (const child of node.children) walk(child, depth + 1);
  };
  walk(vm.root, 0);
  return out;
}

export function actBadge(move: Move): string {
  return move.act ?? "REPLY";
}

/** Replace [cite:key] markers with numbered spans carrying tooltip data. */
export function renderBody(
  container: HTMLElement,
  body: string,
  bibliography: BibliographyEntry[] = [],
): void {
  const byId = new Map(bibliography.map((entry) => [entry.paper_id, entry]));
  const marker = /\[cite:([^\]\s]+)\]/g;
  let last = 0;
  let match: RegExpExecArray | null;
  while ((match = marker.exec(body)) !== null) {
    container.appendChild(document.createTextNode(body.slice(last, match.index)));
    const key = match[1] ?? "";
    const entry = byId.get(key);
    const span = document.createElement("span");
    span.className = "citation";
    if (entry) {
      span.textContent = `[${entry.index}]`;
      span.title = `${entry.title} (${entry.first_author}, ${entry.year})`;
      span.dataset.paperId = entry.paper_id;
    } else {
      span.textContent = match[0];
    }
    container.appendChild(span);
    last = match.index + match[0].length;
  }
  container.appendChild(document.createTextNode(body.slice(last)));
}

export interface RenderOptions {
  bibliographies?: Map<string, BibliographyEntry[]>;
  onToggle?: (moveId: string) => void;
}

export function renderThread(
  container: HTMLElement,
  vm: ThreadVM,
  options: RenderOptions = {},
): void {
  container.textContent = "";
  for (const { move, depth } of visibleMoves(vm)) {
    container.appendChild(moveCard(vm, move, depth, options));
  }
}

function moveCard(
  vm: ThreadVM,
  move: Move,
  depth: number,
  options: RenderOptions,
): HTMLElement {
  const card = document.createElement("article");
  card.className = "move-card";
  card.dataset.moveId = move.move_id;
  card.style.marginLeft = `${depth}rem`;

  const header = document.createElement("header");
  const badge = document.createElement("span");
  badge.className = `act-badge act-${actBadge(move).toLowerCase()}`;
  badge.textContent = actBadge(move);
  const author = document.createElement("span");
  author.className = "author";
  author.textContent = move.author;
  header.append(badge, author);

  const toggle = document.createElement("button");
  toggle.className = "collapse-toggle";
  toggle.textContent = vm.collapsed.has(move.move_id) ? "expand" : "collapse";
  toggle.addEventListener("click", () => options.onToggle?.(move.move_id));
  header.appendChild(toggle);
  card.appendChild(header);

  const body = document.createElement("div");
  body.className = "move-body";
  renderBody(body, move.body, options.bibliographies?.get(move.move_id) ?? []);
  card.appendChild(body);
  return card;
}

/** Append a streamed item under its parent; server order is preserved by
 * appending in arrival order. Returns the created card, if any. */
export function appendStreamItem(
  container: HTMLElement,
  vm: ThreadVM,
  item: StreamItem,
  options: RenderOptions = {},
): HTMLElement | null {
  if (item.kind === "user_move" || item.kind === "agent_move") {
    const move = item.move;
    const node: ThreadTreeNode = { move, children: [] };
    const attach = (cursor: ThreadTreeNode): boolean => {
      if (cursor.move.move_id === move.target) {
        cursor.children.push(node);
        return true;
      }
      return cursor.children.some(attach);
    };
    if (!attach(vm.root)) vm.root.children.push(node);
    vm.parents.set(move.move_id, move.target);
    const bibliographies = options.bibliographies ?? new Map<string, BibliographyEntry[]>();
    if (item.kind === "agent_move" && item.bibliography) {
      bibliographies.set(move.move_id, item.bibliography);
    }
    const depth = depthOf(vm, move.move_id);
    const card = moveCard(vm, move, depth, { ...options, bibliographies });
    container.appendChild(card);
    return card;
  }
  if (item.kind === "agent_error") {
    const card = document.createElement("article");
    card.className = "move-card agent-error";
    card.textContent = `${item.agent_id}: ${item.error} (${item.detail})`;
    container.appendChild(card);
    return card;
  }
  return null;
}

function depthOf(vm: ThreadVM, moveId: string): number {
  let depth = 0;
  let cursor = vm.parents.get(moveId) ?? null;
  while (cursor !== null) {
    depth += 1;
    cursor = vm.parents.get(cursor) ?? null;
  }
  return depth;
}

/** Scroll to a move's card and flag it; used by mind-map navigation. */
export function highlightMove(container: HTMLElement, moveId: string): HTMLElement | null {
  for (const card of container.querySelectorAll<HTMLElement>(".move-card.highlight")) {
    card.classList.remove("highlight");
  }
  const card = container.querySelector<HTMLElement>(`[data-move-id="${moveId}"]`);
  if (!card) return null;
  card.classList.add("highlight");
  card.scrollIntoView?.({ block: "center" });
  return card;
}
