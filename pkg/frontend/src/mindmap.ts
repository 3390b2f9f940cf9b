/** Client-side mind map over the node-link export: semantic zoom between
 * overview, keyword, and summary labels, rationale cards on edge hover,
 * and node click navigation to the source post. Layout is a pure
 * function of the graph and a seed. */

import type { NodeLinkGraph, NodeLinkNode } from "./api.js";

export type Zoom = "overview" | "keyword" | "summary";

// scale in (0, KEYWORD_THRESHOLD) shows the overview, up to
// SUMMARY_THRESHOLD the keyword view, beyond it the full summaries
export const KEYWORD_THRESHOLD = 0.75;
export const SUMMARY_THRESHOLD = 1.5;

export function zoomLevelFor(scale: number): Zoom {
  if (scale < KEYWORD_THRESHOLD) return "overview";
  if (scale < SUMMARY_THRESHOLD) return "keyword";
  return "summary";
}

export function isRootNode(node: NodeLinkNode): boolean {
  return node.source === node.thread_id;
}

/** The node's text at a zoom level. Move nodes collapse to a dot in the
 * overview; thread roots keep their title at every level. */
export function labelFor(node: NodeLinkNode, zoom: Zoom): string {
  if (zoom === "overview") return isRootNode(node) ? node.title : "";
  const label = zoom === "keyword" ? node.keyword : node.summary;
  // degraded label service: fall back to whatever text the node carries
  return label || node.keyword || node.summary || node.id;
}

export interface Locator {
  threadId: string;
  moveId: string | null;
}

/** Where a click lands: the thread for root nodes, else the move. */
export function sourceLocator(node: NodeLinkNode): Locator {
  return {
    threadId: node.thread_id,
    moveId: isRootNode(node) ? null : node.source,
  };
}

export interface Point {
  x: number;
  y: number;
}

/** Deterministic layout: one column per thread, one row per reply depth,
 * with seed-driven jitter so parallel edges stay distinguishable. */
export function seededLayout(graph: NodeLinkGraph, seed = 1): Map<string, Point> {
  let state = seed >>> 0 || 1;
  const next = () => {
    // xorshift32; cheap and fully reproducible
    state ^= state << 13;
    state ^= state >>> 17;
    state ^= state << 5;
    state >>>= 0;
    return state / 0xffffffff;
  };

  const parent = new Map<string, string>();
  for (const edge of graph.links) parent.set(edge.source, edge.target);
  const depth = (id: string): number => {
    let d = 0;
    let cursor = parent.get(id);
    while (cursor !== undefined) {
      d += 1;
      cursor = parent.get(cursor);
    }
    return d;
  };

  const threads = [...new Set(graph.nodes.map((n) => n.thread_id))].sort();
  const column = new Map(threads.map((t, i) => [t, i]));
  const rowCounts = new Map<string, number>();
  const points = new Map<string, Point>();
  for (const node of graph.nodes) {
    const d = depth(node.id);
    const rowKey = `${node.thread_id}:${d}`;
    const index = rowCounts.get(rowKey) ?? 0;
    rowCounts.set(rowKey, index + 1);
    points.set(node.id, {
      x: (column.get(node.thread_id) ?? 0) * 320 + index * 40 + next() * 8,
      y: d * 90 + next() * 8,
    });
  }
  return points;
}

export interface MindMapOptions {
  onNavigate?: (locator: Locator) => void;
  scale?: number;
  seed?: number;
}

export class MindMapView {
  scale: number;
  private graph: NodeLinkGraph | null = null;

  constructor(
    private container: HTMLElement,
    private options: MindMapOptions = {},
  ) {
    this.scale = options.scale ?? 1;
  }

  get zoom(): Zoom {
    return zoomLevelFor(this.scale);
  }

  render(graph: NodeLinkGraph): void {
    this.graph = graph;
    this.container.textContent = "";
    const points = seededLayout(graph, this.options.seed ?? 1);
    const zoom = this.zoom;

    for (const edge of graph.links) {
      const el = document.createElement("div");
      el.className = "mm-edge";
      el.dataset.act = edge.act;
      el.dataset.source = edge.source;
      el.dataset.target = edge.target;
      if (edge.act === "REPLY" && zoom === "overview") el.classList.add("dimmed");
      el.addEventListener("mouseenter", () => this.showRationale(el, edge.rationale));
      el.addEventListener("mouseleave", () => this.hideRationale());
      this.container.appendChild(el);
    }

    for (const node of graph.nodes) {
      const el = document.createElement("div");
      el.className = "mm-node";
      if (isRootNode(node)) el.classList.add("mm-root");
      el.dataset.id = node.id;
      const point = points.get(node.id);
      if (point) {
        el.style.left = `${point.x}px`;
        el.style.top = `${point.y}px`;
      }
      el.textContent = labelFor(node, zoom);
      el.addEventListener("click", () =>
        this.options.onNavigate?.(sourceLocator(node)),
      );
      this.container.appendChild(el);
    }
  }

  /** Re-label in place when the zoom factor crosses a threshold. */
  setScale(scale: number): void {
    const before = this.zoom;
    this.scale = scale;
    if (this.graph && this.zoom !== before) this.render(this.graph);
  }

  private showRationale(anchor: HTMLElement, rationale: string): void {
    this.hideRationale();
    const card = document.createElement("div");
    card.className = "mm-rationale";
    card.textContent = rationale; // verbatim, empty for human replies
    anchor.appendChild(card);
  }

  private hideRationale(): void {
    for (const card of this.container.querySelectorAll(".mm-rationale")) {
      card.remove();
    }
  }
}
