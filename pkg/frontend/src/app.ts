import { ApiClient, ApiError } from "./api.js";
import { parsePersona } from "./persona.js";
import { DEFAULT_USER, PRESETS } from "./presets.js";
import type { CaptureBody, MemoryView, Outcome, PendingView } from "./types.js";
import {
  answerCardHtml,
  escapeHtml,
  isExpired,
  memoryDetailHtml,
  memoryRowHtml,
  modeHint,
  pendingCardHtml,
  projectPins,
  spaceCounts,
} from "./views.js";

const POLL_MS = 2500;
const MAP_W = 420;
const MAP_H = 260;
const MAP_PAD = 18;

export class App {
  private readonly root: HTMLElement;
  private readonly api: ApiClient;
  private readonly userId: string;

  private memories: MemoryView[] = [];
  private pending: PendingView[] = [];
  private selectedMemoryId: string | null = null;
  private lastOutcome: Outcome | null = null;
  private errorText: string | null = null;
  private noticeText: string | null = null;
  private pollTimer: ReturnType<typeof setInterval> | null = null;

  constructor(root: HTMLElement, api?: ApiClient, userId = DEFAULT_USER) {
    this.root = root;
    this.api = api ?? new ApiClient();
    this.userId = userId;
  }

  async start(): Promise<void> {
    this.renderSkeleton();
    this.root.addEventListener("click", (event) => {
      void this.onClick(event);
    });
    await this.refresh();
    this.pollTimer = setInterval(() => {
      void this.pollPending();
    }, POLL_MS);
  }

  stop(): void {
    if (this.pollTimer !== null) {
      clearInterval(this.pollTimer);
      this.pollTimer = null;
    }
  }

  // -- rendering -----------------------------------------------------------

  private renderSkeleton(): void {
    const presetOptions = PRESETS.map(
      (preset, index) => `<option value="${index}">${escapeHtml(preset.label)}</option>`,
    ).join("");
    this.root.innerHTML = `
      <header class="bar">
        <h1>spatialmem</h1>
        <span class="muted">user ${escapeHtml(this.userId)}</span>
        <button data-action="seed">Seed persona A</button>
      </header>
      <div id="banner"></div>
      <div id="notice"></div>
      <main>
        <section class="left">
          <div class="card" id="query-panel">
            <h2>Ask</h2>
            <label>Context preset
              <select id="preset">${presetOptions}</select>
            </label>
            <label>Transcript
              <textarea id="transcript" rows="2" placeholder="leave empty for a context-only ask"></textarea>
            </label>
            <div id="mode-hint" class="mode-indicator"></div>
            <div class="actions">
              <button class="primary" data-action="ask">Ask</button>
              <button data-action="silent-ask">Silent Ask</button>
              <button data-action="quick-accept">Accept</button>
              <button class="danger" data-action="quick-reject">Reject</button>
            </div>
            <div id="answer-slot"></div>
          </div>
          <div class="card" id="verification-panel">
            <h2>Needs your confirmation</h2>
            <div id="pending-slot"></div>
          </div>
        </section>
        <section class="right card" id="memory-browser">
          <h2>Memories</h2>
          <div id="memories-slot"></div>
        </section>
      </main>
    `;
    const transcript = this.root.querySelector<HTMLTextAreaElement>("#transcript");
    transcript?.addEventListener("input", () => this.renderModeHint());
    this.renderModeHint();
    this.renderAnswer();
    this.renderPending();
    this.renderMemories();
  }

  private renderModeHint(): void {
    const slot = this.root.querySelector<HTMLElement>("#mode-hint");
    if (slot === null) {
      return;
    }
    const transcript = this.transcriptValue();
    const mode = modeHint(transcript);
    slot.innerHTML = `will ask as <b class="${mode}">${mode}</b>`;
  }

  private renderBanner(): void {
    const banner = this.root.querySelector<HTMLElement>("#banner");
    if (banner === null) {
      return;
    }
    banner.innerHTML = this.errorText === null
      ? ""
      : `<div class="banner">${escapeHtml(this.errorText)}</div>`;
  }

  private renderNotice(): void {
    const notice = this.root.querySelector<HTMLElement>("#notice");
    if (notice === null) {
      return;
    }
    notice.innerHTML = this.noticeText === null
      ? ""
      : `<div class="notice-strip">${escapeHtml(this.noticeText)}</div>`;
  }

  private renderAnswer(): void {
    const slot = this.root.querySelector<HTMLElement>("#answer-slot");
    if (slot === null) {
      return;
    }
    slot.innerHTML = this.lastOutcome === null
      ? `<p class="muted">No query yet.</p>`
      : answerCardHtml(this.lastOutcome);
  }

  private renderPending(): void {
    const slot = this.root.querySelector<HTMLElement>("#pending-slot");
    if (slot === null) {
      return;
    }
    if (this.pending.length === 0) {
      slot.innerHTML = `<p class="empty">Nothing waiting.</p>`;
      return;
    }
    const now = new Date();
    slot.innerHTML = this.pending.map((item) => pendingCardHtml(item, now)).join("");
  }

  private renderMemories(): void {
    const slot = this.root.querySelector<HTMLElement>("#memories-slot");
    if (slot === null) {
      return;
    }
    if (this.memories.length === 0) {
      slot.innerHTML = `<p class="empty">No memories yet. Seed persona A or accept a low-confidence answer.</p>`;
      return;
    }
    const pins = projectPins(this.memories, MAP_W, MAP_H, MAP_PAD);
    const circles = pins
      .map((pin) => {
        const selected = pin.memory.id === this.selectedMemoryId ? ' class="selected"' : "";
        return `<circle data-action="select-memory" data-id="${escapeHtml(pin.memory.id)}" cx="${pin.x.toFixed(1)}" cy="${pin.y.toFixed(1)}" r="6"${selected}><title>${escapeHtml(pin.memory.sketch.space_label)}</title></circle>`;
      })
      .join("");
    const clusters = [...spaceCounts(this.memories).entries()]
      .map(([label, count]) => `${escapeHtml(label)} (${count})`)
      .join(" &middot; ");
    const rows = this.memories
      .map((memory) => memoryRowHtml(memory, memory.id === this.selectedMemoryId))
      .join("");
    const selected = this.memories.find((memory) => memory.id === this.selectedMemoryId);
    const detail = selected === undefined
      ? `<p class="muted">Select a memory to inspect its sketch.</p>`
      : memoryDetailHtml(selected);
    slot.innerHTML = `
      <svg class="map" viewBox="0 0 ${MAP_W} ${MAP_H}" width="${MAP_W}" height="${MAP_H}">${circles}</svg>
      <div class="cluster-note">${clusters}</div>
      <div class="mem-layout">
        <div class="mem-scroll">
          <table class="mem-table">
            <thead><tr><th>id</th><th>space</th><th>answer</th></tr></thead>
            <tbody>${rows}</tbody>
          </table>
        </div>
        <div class="mem-detail">${detail}</div>
      </div>
    `;
  }

  // -- state ---------------------------------------------------------------

  private setError(text: string | null): void {
    this.errorText = text;
    this.renderBanner();
  }

  private setNotice(text: string | null): void {
    this.noticeText = text;
    this.renderNotice();
  }

  private transcriptValue(): string {
    return this.root.querySelector<HTMLTextAreaElement>("#transcript")?.value ?? "";
  }

  private selectedPresetIndex(): number {
    const select = this.root.querySelector<HTMLSelectElement>("#preset");
    const index = select === null ? 0 : Number.parseInt(select.value, 10);
    return Number.isNaN(index) ? 0 : index;
  }

  private capture(transcript: string | null): CaptureBody {
    const preset = PRESETS[this.selectedPresetIndex()] ?? PRESETS[0];
    const body: CaptureBody = {
      user_id: this.userId,
      gps: { ...preset.gps },
      timestamp: new Date().toISOString(),
      space_label: preset.spaceLabel,
    };
    if (transcript !== null && transcript.trim() !== "") {
      body.transcript = transcript;
    }
    if (preset.sceneText !== "") {
      body.scene_text = preset.sceneText;
    }
    return body;
  }

  private async refresh(): Promise<void> {
    try {
      this.memories = await this.api.memories(this.userId);
      this.pending = await this.api.pending(this.userId);
      this.setError(null);
    } catch (error) {
      this.showError(error);
    }
    this.renderMemories();
    this.renderPending();
  }

  private async pollPending(): Promise<void> {
    try {
      this.pending = await this.api.pending(this.userId);
      this.renderPending();
    } catch {
      // A poll failure keeps the last known cards; the next user action
      // will surface the connection problem in the banner.
    }
  }

  private showError(error: unknown): void {
    if (error instanceof ApiError) {
      this.setError(`${error.code}: ${error.message}`);
    } else {
      this.setError(error instanceof Error ? error.message : String(error));
    }
  }

  // -- actions -------------------------------------------------------------

  private async onClick(event: Event): Promise<void> {
    const target = (event.target as Element | null)?.closest<Element>("[data-action]");
    if (target === null || target === undefined) {
      return;
    }
    const action = target.getAttribute("data-action") ?? "";
    const id = target.getAttribute("data-id") ?? "";
    this.setNotice(null);
    switch (action) {
      case "seed":
        await this.seedPersona();
        break;
      case "ask":
        await this.runQuery(this.transcriptValue());
        break;
      case "silent-ask":
        await this.runQuery(null);
        break;
      case "quick-accept":
        await this.resolveNewest(true);
        break;
      case "quick-reject":
        await this.resolveNewest(false);
        break;
      case "accept":
        await this.resolve(id, true);
        break;
      case "reject":
        await this.resolve(id, false);
        break;
      case "select-memory":
        this.selectedMemoryId = id;
        this.renderMemories();
        break;
      case "delete-memory":
        await this.requestRemoval(id);
        break;
      default:
        break;
    }
  }

  private async seedPersona(): Promise<void> {
    try {
      const response = await this.api.fetchAsset("persona_a.jsonl");
      const persona = parsePersona(response);
      const stored = await this.api.seed(persona.records);
      this.setError(null);
      this.setNotice(`Seeded ${stored} memories from persona ${persona.name}.`);
      await this.refresh();
    } catch (error) {
      this.showError(error);
    }
  }

  private async runQuery(transcript: string | null): Promise<void> {
    try {
      const outcome = await this.api.query(this.capture(transcript));
      this.lastOutcome = outcome;
      this.setError(null);
      this.renderAnswer();
      await this.refresh();
    } catch (error) {
      this.showError(error);
    }
  }

  private replacementFor(pendingId: string): string | undefined {
    const input = this.root.querySelector<HTMLInputElement>(
      `input.replacement[data-pending="${pendingId}"]`,
    );
    const value = input?.value.trim() ?? "";
    return value === "" ? undefined : value;
  }

  private resolutionNotice(pendingId: string, outcome: string, memoryId: string | null): string {
    switch (outcome) {
      case "stored":
        return memoryId === null
          ? `${pendingId} accepted and stored.`
          : `${pendingId} accepted; stored as ${memoryId}.`;
      case "removed":
        return `${pendingId} accepted; memory removed.`;
      case "rejected":
        return `${pendingId} rejected; nothing was stored.`;
      case "expired":
        return `${pendingId} expired before it could be resolved.`;
      default:
        return `${pendingId}: ${outcome}.`;
    }
  }

  private async resolve(pendingId: string, accept: boolean): Promise<void> {
    const card = this.pending.find((item) => item.id === pendingId);
    if (card !== undefined && isExpired(card, new Date())) {
      this.setNotice(`${pendingId} has expired; it can no longer be resolved.`);
      return;
    }
    try {
      const replacement = accept ? this.replacementFor(pendingId) : undefined;
      const result = await this.api.verify(this.userId, pendingId, accept, replacement);
      this.setError(null);
      this.setNotice(this.resolutionNotice(pendingId, result.outcome, result.memory_id));
      await this.refresh();
    } catch (error) {
      if (error instanceof ApiError && (error.code === "not_found" || error.code === "conflict")) {
        this.setNotice(`${pendingId} was already resolved; card dismissed.`);
        await this.refresh();
        return;
      }
      this.showError(error);
    }
  }

  private async resolveNewest(accept: boolean): Promise<void> {
    const open = this.pending.filter((item) => !isExpired(item, new Date()));
    if (open.length === 0) {
      this.setNotice("Nothing is waiting for confirmation.");
      return;
    }
    const newest = open[open.length - 1];
    await this.resolve(newest.id, accept);
  }

  private async requestRemoval(memoryId: string): Promise<void> {
    const memory = this.memories.find((item) => item.id === memoryId);
    if (memory === undefined) {
      return;
    }
    const sketch = memory.sketch;
    const body: CaptureBody = {
      user_id: this.userId,
      gps: { ...sketch.gps },
      timestamp: new Date().toISOString(),
      transcript: `forget ${memory.query_text}`,
      space_label: sketch.space_label,
    };
    if (sketch.scene_description !== "") {
      body.scene_text = sketch.scene_description;
    }
    try {
      const outcome = await this.api.forget(body);
      this.setError(null);
      this.setNotice(outcome.summary ?? "Removal queued for confirmation.");
      await this.refresh();
    } catch (error) {
      this.showError(error);
    }
  }
}
