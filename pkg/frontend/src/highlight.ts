/**
 * Render a sentence as plain text nodes interleaved with <mark> highlights.
 *
 * The server guarantees spans are sorted and non-overlapping; rendering
 * refuses out-of-range offsets outright (a banner is shown instead of a
 * silently clipped highlight).
 */

import { scalarLength, scalarToUtf16 } from "./offsets";
import type { RecordView, SpanView, TypeConfig } from "./types";

export class OffsetRangeError extends Error {}

export interface RenderOptions {
  focusedIndex?: number;
  colors: Map<string, string>;
}

export function renderSentence(
  doc: Document,
  record: RecordView,
  options: RenderOptions,
): HTMLElement {
  const container = doc.createElement("div");
  container.className = "sentence-text";
  const text = record.text;
  const total = scalarLength(text);
  let previousEnd = 0;
  record.spans.forEach((span, index) => {
    if (span.start < previousEnd || span.start >= span.end || span.end > total) {
      throw new OffsetRangeError(
        `span (${span.start}, ${span.end}) out of range for length ${total}`,
      );
    }
    if (span.start > previousEnd) {
      container.appendChild(
        doc.createTextNode(sliceScalars(text, previousEnd, span.start)),
      );
    }
    container.appendChild(markFor(doc, record, span, index, options));
    previousEnd = span.end;
  });
  if (previousEnd < total) {
    container.appendChild(
      doc.createTextNode(sliceScalars(text, previousEnd, total)),
    );
  }
  return container;
}

function sliceScalars(text: string, start: number, end: number): string {
  return text.slice(scalarToUtf16(text, start), scalarToUtf16(text, end));
}

function markFor(
  doc: Document,
  record: RecordView,
  span: SpanView,
  index: number,
  options: RenderOptions,
): HTMLElement {
  // The type label and conflict badge are CSS pseudo-elements driven by
  // data attributes: the container's textContent must stay exactly the
  // sentence text or selection-to-offset mapping would drift.
  const mark = doc.createElement("mark");
  mark.className = "span";
  if (index === options.focusedIndex) mark.classList.add("focused");
  if (span.origin === "HUMAN") mark.classList.add("human");
  mark.dataset.index = String(index);
  mark.dataset.start = String(span.start);
  mark.dataset.end = String(span.end);
  mark.dataset.type = span.type;
  const color = options.colors.get(span.type);
  if (color) mark.style.backgroundColor = color;
  mark.appendChild(
    doc.createTextNode(sliceScalars(record.text, span.start, span.end)),
  );
  const conflicted = record.conflicts.some(
    (c) => c.start === span.start && c.end === span.end,
  );
  if (conflicted) {
    mark.classList.add("conflict");
    mark.title = `multiple entity types matched: ${record.conflicts
      .filter((c) => c.start === span.start && c.end === span.end)
      .map((c) => c.candidates.join(", "))
      .join("; ")}`;
  }
  return mark;
}

export function colorMap(types: TypeConfig[]): Map<string, string> {
  return new Map(types.map((t) => [t.name, t.color]));
}
