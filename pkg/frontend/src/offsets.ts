/**
 * Offset conversions between browser selections and the server's indexing.
 *
 * JavaScript strings (and DOM Range offsets) count UTF-16 code units; the
 * server counts Unicode scalar values, so an astral-plane character (one
 * surrogate pair) is two units here but one scalar there. Everything the
 * client sends must be scalar offsets.
 */

/** Number of Unicode scalars in the first `utf16` code units of `text`.
 *  An offset landing inside a surrogate pair rounds down to the pair start. */
export function utf16ToScalar(text: string, utf16: number): number {
  if (utf16 <= 0) return 0;
  let units = 0;
  let scalars = 0;
  for (const ch of text) {
    if (units + ch.length > utf16) break;
    units += ch.length;
    scalars += 1;
    if (units >= utf16) break;
  }
  return scalars;
}

/** UTF-16 code unit offset of the `scalar`-th Unicode scalar in `text`. */
export function scalarToUtf16(text: string, scalar: number): number {
  let units = 0;
  let scalars = 0;
  for (const ch of text) {
    if (scalars >= scalar) break;
    units += ch.length;
    scalars += 1;
  }
  return units;
}

/** Slice `text` by scalar offsets, mirroring server-side slicing. */
export function scalarSlice(text: string, start: number, end: number): string {
  return text.slice(scalarToUtf16(text, start), scalarToUtf16(text, end));
}

export function scalarLength(text: string): number {
  let n = 0;
  for (const _ of text) n += 1;
  return n;
}

/**
 * UTF-16 offset of `(node, offsetInNode)` within the concatenated text
 * content of `container`, or null when the position is outside it.
 * Element-anchored positions resolve to the text length before that child.
 */
export function positionToUtf16(
  container: Node,
  node: Node,
  offsetInNode: number,
): number | null {
  if (!container.contains(node)) return null;
  if (node.nodeType !== Node.TEXT_NODE) {
    // offset counts child nodes: sum the text of the children before it
    let units = 0;
    const children = node.childNodes;
    for (let i = 0; i < Math.min(offsetInNode, children.length); i++) {
      units += (children[i].textContent ?? "").length;
    }
    return prefixUnits(container, node) + units;
  }
  return prefixUnits(container, node) + offsetInNode;
}

/** Total UTF-16 length of all text nodes strictly before `target`. */
function prefixUnits(container: Node, target: Node): number {
  let units = 0;
  const walk = (current: Node): boolean => {
    if (current === target) return true;
    if (current.nodeType === Node.TEXT_NODE) {
      units += (current.textContent ?? "").length;
      return false;
    }
    for (const child of Array.from(current.childNodes)) {
      if (walk(child)) return true;
    }
    return false;
  };
  walk(container);
  return units;
}

export interface ScalarRange {
  start: number;
  end: number;
}

/**
 * Convert the current DOM selection inside `container` to scalar offsets
 * into its full text. Returns null for collapsed selections or selections
 * reaching outside the container.
 */
export function selectionToOffsets(
  container: HTMLElement,
  selection: Selection | null,
): ScalarRange | null {
  if (!selection || selection.rangeCount === 0 || selection.isCollapsed) {
    return null;
  }
  const range = selection.getRangeAt(0);
  const startUnits = positionToUtf16(container, range.startContainer, range.startOffset);
  const endUnits = positionToUtf16(container, range.endContainer, range.endOffset);
  if (startUnits === null || endUnits === null) return null;
  const text = container.textContent ?? "";
  const start = utf16ToScalar(text, Math.min(startUnits, endUnits));
  const end = utf16ToScalar(text, Math.max(startUnits, endUnits));
  if (start === end) return null;
  return { start, end };
}

/** Expand a scalar range to word boundaries so spans align with tokens. */
export function snapToWordBoundaries(
  text: string,
  range: ScalarRange,
): ScalarRange {
  const chars = Array.from(text);
  const isWord = (i: number): boolean => {
    const c = chars[i];
    if (c === undefined) return false;
    if (/[\p{L}\p{Nd}]/u.test(c)) return true;
    if (c === "'" || c === "-") {
      return (
        i > 0 &&
        i < chars.length - 1 &&
        /[\p{L}\p{Nd}]/u.test(chars[i - 1]) &&
        /[\p{L}\p{Nd}]/u.test(chars[i + 1])
      );
    }
    return false;
  };
  let { start, end } = range;
  while (start > 0 && isWord(start - 1) && isWord(start)) start -= 1;
  while (end < chars.length && isWord(end) && isWord(end - 1)) end += 1;
  // trim whitespace the user may have swept up
  while (start < end && /\s/.test(chars[start])) start += 1;
  while (end > start && /\s/.test(chars[end - 1])) end -= 1;
  return { start, end };
}
