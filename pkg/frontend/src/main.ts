import { ReviewApi } from "./api";
import { ReviewApp } from "./app";
import { bindKeyboard } from "./keyboard";

function requireElement(id: string): HTMLElement {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing #${id} in index.html`);
  return el;
}

const app = new ReviewApp(
  new ReviewApi(),
  {
    sentence: requireElement("sentence"),
    meta: requireElement("meta"),
    notice: requireElement("notice"),
    progress: requireElement("progress"),
    typesBar: requireElement("types-bar"),
  },
  document,
  () => window.getSelection(),
);

const annotatorInput = requireElement("annotator") as HTMLInputElement;
annotatorInput.addEventListener("change", () => {
  app.annotatorId = annotatorInput.value.trim() || "annotator";
});
app.annotatorId = annotatorInput.value.trim() || "annotator";

bindKeyboard(app, document);
void app.start();
