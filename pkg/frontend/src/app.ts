/**
 * The review session: one sentence on screen, keyboard-first decisions.
 *
 * All truth lives on the server; this class only caches the current queue
 * page and re-renders after every acknowledged mutation. A 409 (someone
 * else edited the sentence) reloads the fresh record and shows a notice; a
 * 422 keeps the state and shows the validation message.
 */

import type { DecisionResult, ReviewApi } from "./api";
import { colorMap, renderSentence, OffsetRangeError } from "./highlight";
import { scalarSlice, selectionToOffsets, snapToWordBoundaries } from "./offsets";
import type { RecordView, SpanPayload, Status, TypeConfig } from "./types";

export interface AppElements {
  sentence: HTMLElement;
  meta: HTMLElement;
  notice: HTMLElement;
  progress: HTMLElement;
  typesBar: HTMLElement;
}

export class ReviewApp {
  private queue: RecordView[] = [];
  private queueStatus: Status = "PENDING";
  private current: RecordView | null = null;
  private focusedSpan = 0;
  private types: TypeConfig[] = [];
  annotatorId = "annotator";

  constructor(
    private readonly api: ReviewApi,
    private readonly elements: AppElements,
    private readonly doc: Document,
    private readonly getSelection: () => Selection | null,
  ) {}

  get currentRecord(): RecordView | null {
    return this.current;
  }

  async start(): Promise<void> {
    this.types = (await this.api.getTypes()).types;
    this.renderTypesBar();
    await this.loadQueue();
    await this.refreshProgress();
  }

  async loadQueue(): Promise<void> {
    const page = await this.api.listSentences({
      status: this.queueStatus,
      limit: 50,
    });
    this.queue = page.records;
    this.current = this.queue.length > 0 ? this.queue[0] : null;
    this.focusedSpan = 0;
    this.render();
  }

  private async advance(): Promise<void> {
    this.queue.shift();
    if (this.queue.length === 0) {
      await this.loadQueue();
      return;
    }
    this.current = this.queue[0];
    this.focusedSpan = 0;
    this.render();
    await this.refreshProgress();
  }

  render(): void {
    const { sentence, meta, notice } = this.elements;
    sentence.textContent = "";
    notice.textContent = "";
    notice.className = "notice";
    if (!this.current) {
      meta.textContent = `queue empty (${this.queueStatus})`;
      return;
    }
    const record = this.current;
    meta.textContent =
      `${record.sent_id} · ${record.source} · ${record.status} · ` +
      `rev ${record.revision} · ${record.spans.length} spans`;
    try {
      sentence.appendChild(
        renderSentence(this.doc, record, {
          focusedIndex: this.focusedSpan,
          colors: colorMap(this.types),
        }),
      );
    } catch (err) {
      if (err instanceof OffsetRangeError) {
        this.showError(`cannot render: ${err.message}`);
        return;
      }
      throw err;
    }
  }

  private renderTypesBar(): void {
    const bar = this.elements.typesBar;
    bar.textContent = "";
    this.types.forEach((t, i) => {
      const chip = this.doc.createElement("span");
      chip.className = "type-chip";
      chip.style.backgroundColor = t.color;
      chip.textContent = `${i + 1} ${t.display}`;
      bar.appendChild(chip);
    });
  }

  async refreshProgress(): Promise<void> {
    const progress = await this.api.getProgress();
    const s = progress.by_status;
    this.elements.progress.textContent =
      `pending ${s.PENDING} · accepted ${s.ACCEPTED} · ` +
      `corrected ${s.CORRECTED} · skipped ${s.SKIPPED} / ${progress.total}`;
  }

  showNotice(message: string): void {
    this.elements.notice.textContent = message;
    this.elements.notice.className = "notice info";
  }

  showError(message: string): void {
    this.elements.notice.textContent = message;
    this.elements.notice.className = "notice error";
  }

  private async handleResult(result: DecisionResult): Promise<void> {
    if (result.kind === "ok") {
      this.current = result.record;
      await this.advance();
      return;
    }
    if (result.kind === "stale") {
      // someone else touched this sentence: show their state, do not merge
      this.current = result.record;
      this.render();
      this.showError(
        `stale edit: sentence changed under you (now rev ${result.record.revision}); reloaded`,
      );
      return;
    }
    this.render();
    this.showError(`rejected: ${result.detail}`);
  }

  private async decide(
    action: "accept" | "skip",
  ): Promise<void> {
    if (!this.current) return;
    const result = await this.api.submitDecision(this.current.sent_id, {
      annotator_id: this.annotatorId,
      revision: this.current.revision,
      action,
    });
    await this.handleResult(result);
  }

  accept(): Promise<void> {
    return this.decide("accept");
  }

  skip(): Promise<void> {
    return this.decide("skip");
  }

  async addSpanFromSelection(typeIndex: number): Promise<void> {
    if (!this.current) return;
    const type = this.types[typeIndex];
    if (!type) {
      this.showError(`no entity type bound to key ${typeIndex + 1}`);
      return;
    }
    const raw = selectionToOffsets(
      this.elements.sentence,
      this.getSelection(),
    );
    if (!raw) {
      this.showError("select some sentence text first");
      return;
    }
    const snapped = snapToWordBoundaries(this.current.text, raw);
    if (snapped.start >= snapped.end) {
      this.showError("selection contains no word characters");
      return;
    }
    const span: SpanPayload = {
      start: snapped.start,
      end: snapped.end,
      type: type.name,
    };
    const result = await this.api.submitDecision(this.current.sent_id, {
      annotator_id: this.annotatorId,
      revision: this.current.revision,
      action: "add_span",
      span,
    });
    if (result.kind === "ok") {
      // stay on the sentence after a correction; the queue entry is updated
      this.current = result.record;
      this.queue[0] = result.record;
      this.render();
      this.showNotice(
        `added ${type.name} "${scalarSlice(this.current.text, span.start, span.end)}"`,
      );
      await this.refreshProgress();
      return;
    }
    await this.handleResult(result);
  }

  /** Re-bound the focused span to the current selection (same type). */
  async editFocusedSpanToSelection(): Promise<void> {
    if (!this.current || this.current.spans.length === 0) return;
    const old = this.current.spans[this.focusedSpan];
    if (!old) return;
    const raw = selectionToOffsets(this.elements.sentence, this.getSelection());
    if (!raw) {
      this.showError("select the corrected text first, then press e");
      return;
    }
    const snapped = snapToWordBoundaries(this.current.text, raw);
    const result = await this.api.submitDecision(this.current.sent_id, {
      annotator_id: this.annotatorId,
      revision: this.current.revision,
      action: "edit_span",
      old_span: { start: old.start, end: old.end, type: old.type },
      span: { start: snapped.start, end: snapped.end, type: old.type },
    });
    if (result.kind === "ok") {
      this.current = result.record;
      this.queue[0] = result.record;
      this.render();
      this.showNotice(
        `moved ${old.type} to "${scalarSlice(this.current.text, snapped.start, snapped.end)}"`,
      );
      await this.refreshProgress();
      return;
    }
    await this.handleResult(result);
  }

  async deleteFocusedSpan(): Promise<void> {
    if (!this.current || this.current.spans.length === 0) return;
    const span = this.current.spans[this.focusedSpan];
    if (!span) return;
    const result = await this.api.submitDecision(this.current.sent_id, {
      annotator_id: this.annotatorId,
      revision: this.current.revision,
      action: "delete_span",
      span: { start: span.start, end: span.end, type: span.type },
    });
    if (result.kind === "ok") {
      this.current = result.record;
      this.queue[0] = result.record;
      this.focusedSpan = Math.max(
        0,
        Math.min(this.focusedSpan, result.record.spans.length - 1),
      );
      this.render();
      this.showNotice(`deleted ${span.type} "${span.surface}"`);
      await this.refreshProgress();
      return;
    }
    await this.handleResult(result);
  }

  moveFocus(delta: number): void {
    if (!this.current || this.current.spans.length === 0) return;
    const count = this.current.spans.length;
    this.focusedSpan = (this.focusedSpan + delta + count) % count;
    this.render();
  }

  async reload(): Promise<void> {
    if (!this.current) {
      await this.loadQueue();
      return;
    }
    this.current = await this.api.getSentence(this.current.sent_id);
    this.queue[0] = this.current;
    this.render();
  }
}
