import type { AnswerView, MemoryView, Outcome, PendingView } from "./types.js";

export function escapeHtml(value: string): string {
  return value
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;")
    .replace(/'/g, "&#39;");
}

// Mirrors the server's granularity floor: six or more words is a full
// question, fewer is partial, an empty transcript is zero.
export function modeHint(transcript: string): "zero" | "partial" | "full" {
  const words = transcript.trim().split(/\s+/).filter((word) => word !== "");
  if (words.length === 0) {
    return "zero";
  }
  return words.length >= 6 ? "full" : "partial";
}

export interface Pin {
  memory: MemoryView;
  x: number;
  y: number;
}

// Projects memory GPS fixes onto an SVG viewport. A degenerate span on
// either axis centers the pins instead of dividing by zero.
export function projectPins(
  memories: MemoryView[],
  width: number,
  height: number,
  pad: number,
): Pin[] {
  if (memories.length === 0) {
    return [];
  }
  const lats = memories.map((memory) => memory.sketch.gps.lat);
  const lons = memories.map((memory) => memory.sketch.gps.lon);
  const latMin = Math.min(...lats);
  const latMax = Math.max(...lats);
  const lonMin = Math.min(...lons);
  const lonMax = Math.max(...lons);
  const innerW = width - 2 * pad;
  const innerH = height - 2 * pad;
  return memories.map((memory) => {
    const { lat, lon } = memory.sketch.gps;
    const fx = lonMax === lonMin ? 0.5 : (lon - lonMin) / (lonMax - lonMin);
    const fy = latMax === latMin ? 0.5 : (lat - latMin) / (latMax - latMin);
    return {
      memory,
      x: pad + fx * innerW,
      y: pad + (1 - fy) * innerH,
    };
  });
}

export function spaceCounts(memories: MemoryView[]): Map<string, number> {
  const counts = new Map<string, number>();
  for (const memory of memories) {
    const label = memory.sketch.space_label;
    counts.set(label, (counts.get(label) ?? 0) + 1);
  }
  return counts;
}

const PENDING_TITLES: Record<string, string> = {
  store_memory: "Store this memory?",
  remove_memory: "Remove this memory?",
  low_confidence_answer: "Keep this answer?",
};

export function pendingTitle(kind: string): string {
  return PENDING_TITLES[kind] ?? "Confirm?";
}

export function isExpired(pending: PendingView, now: Date): boolean {
  const expires = Date.parse(pending.expires_at);
  if (Number.isNaN(expires)) {
    return false;
  }
  return now.getTime() >= expires;
}

function answerBodyHtml(response: AnswerView, routing: string | null): string {
  const badge = routing === null ? "" : `<span class="badge ${escapeHtml(routing)}">${escapeHtml(routing)}</span>`;
  const refs = response.referenced_memory_ids.length === 0
    ? ""
    : `<div class="refs">uses ${response.referenced_memory_ids.map(escapeHtml).join(", ")}</div>`;
  const gate = response.needs_verification
    ? `<div class="gate">Low confidence: held for your confirmation before it is stored.</div>`
    : "";
  return `
    <div class="answer-text">${escapeHtml(response.answer_text)} ${badge}</div>
    <div class="rationale">${escapeHtml(response.rationale)}</div>
    <div class="confidence">confidence ${response.confidence}/10</div>
    ${refs}
    ${gate}
  `;
}

export function answerCardHtml(outcome: Outcome): string {
  const mode = outcome.classification;
  const granularity = mode.granularity ?? "-";
  const header = `<div class="mode-indicator">mode: ${escapeHtml(mode.query_type)} / <b class="${escapeHtml(granularity)}">${escapeHtml(granularity)}</b></div>`;
  if (outcome.kind === "answer" && outcome.response !== null) {
    return `<div class="answer">${header}${answerBodyHtml(outcome.response, outcome.routing)}</div>`;
  }
  const summary = outcome.summary ?? outcome.kind;
  return `<div class="answer">${header}<div class="answer-text">${escapeHtml(summary)}</div></div>`;
}

export function pendingCardHtml(pending: PendingView, now: Date): string {
  const expired = isExpired(pending, now);
  const title = pendingTitle(pending.kind);
  const replacement = pending.kind === "low_confidence_answer" && !expired
    ? `<input type="text" class="replacement" data-pending="${escapeHtml(pending.id)}" placeholder="corrected answer (optional)">`
    : "";
  const actions = expired
    ? `<span class="badge expired">expired</span>`
    : `
      <button data-action="accept" data-id="${escapeHtml(pending.id)}">Accept</button>
      <button class="danger" data-action="reject" data-id="${escapeHtml(pending.id)}">Reject</button>
    `;
  return `
    <div class="pending-card${expired ? " expired" : ""}" data-pending-id="${escapeHtml(pending.id)}">
      <div class="pending-title">${escapeHtml(title)}</div>
      <div class="pending-summary">${escapeHtml(pending.summary)}</div>
      <div class="pending-meta">${escapeHtml(pending.id)} &middot; expires ${escapeHtml(pending.expires_at)}</div>
      ${replacement}
      <div class="pending-actions">${actions}</div>
    </div>
  `;
}

export function memoryRowHtml(memory: MemoryView, selected: boolean): string {
  return `
    <tr data-action="select-memory" data-id="${escapeHtml(memory.id)}"${selected ? ' class="selected"' : ""}>
      <td>${escapeHtml(memory.id)}</td>
      <td>${escapeHtml(memory.sketch.space_label)}</td>
      <td>${escapeHtml(memory.response_text)}</td>
    </tr>
  `;
}

export function memoryDetailHtml(memory: MemoryView): string {
  const sketch = memory.sketch;
  const rows: [string, string][] = [
    ["id", memory.id],
    ["created", memory.created_at],
    ["space", sketch.space_label],
    ["scene", sketch.scene_description],
    ["referent", sketch.referent ?? "-"],
    ["timestamp", sketch.timestamp],
    ["gps", `${sketch.gps.lat}, ${sketch.gps.lon}`],
    ["intent", sketch.intent ?? "-"],
    ["transcript", sketch.transcript ?? "-"],
    ["query", memory.query_text],
    ["answer", memory.response_text],
    ["source", `${memory.source_kind} (confidence ${memory.confidence})`],
  ];
  const dl = rows
    .map(([key, value]) => `<dt>${escapeHtml(key)}</dt><dd>${escapeHtml(value)}</dd>`)
    .join("");
  return `
    <dl class="detail">${dl}</dl>
    <button class="danger" data-action="delete-memory" data-id="${escapeHtml(memory.id)}">Request removal</button>
  `;
}
