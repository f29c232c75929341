/** Keyboard bindings: annotation speed is the whole point of the UI. */

import type { ReviewApp } from "./app";

export interface KeyTarget {
  key: string;
  target: EventTarget | null;
  preventDefault(): void;
}

/** Returns true when the key was handled. */
export function handleKey(app: ReviewApp, event: KeyTarget): boolean {
  const target = event.target as { tagName?: string } | null;
  if (target?.tagName === "INPUT" || target?.tagName === "TEXTAREA") {
    return false;
  }
  switch (event.key) {
    case "a":
      event.preventDefault();
      void app.accept();
      return true;
    case "s":
      event.preventDefault();
      void app.skip();
      return true;
    case "d":
      event.preventDefault();
      void app.deleteFocusedSpan();
      return true;
    case "e":
      event.preventDefault();
      void app.editFocusedSpanToSelection();
      return true;
    case "r":
      event.preventDefault();
      void app.reload();
      return true;
    case "ArrowRight":
    case "k":
      event.preventDefault();
      app.moveFocus(1);
      return true;
    case "ArrowLeft":
    case "j":
      event.preventDefault();
      app.moveFocus(-1);
      return true;
    default: {
      const digit = Number.parseInt(event.key, 10);
      if (Number.isInteger(digit) && digit >= 1 && digit <= 9) {
        event.preventDefault();
        void app.addSpanFromSelection(digit - 1);
        return true;
      }
      return false;
    }
  }
}

export function bindKeyboard(app: ReviewApp, doc: Document): void {
  doc.addEventListener("keydown", (event) => {
    handleKey(app, event as unknown as KeyTarget);
  });
}
