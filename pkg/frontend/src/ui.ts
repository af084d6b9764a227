/** DOM rendering for the annotation screen.
 *
 * The whole screen re-renders on every state change; slider values and
 * interaction flags live in the controller, so nothing is lost. There
 * is deliberately no back affordance anywhere.
 */

import { ItemView, Side } from "./api.js";
import { SessionController } from "./controller.js";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

/** Tokenized sentence with the served highlight indices marked. */
export function renderSentence(text: string, highlights: number[]): HTMLElement {
  const container = el("p", "sentence");
  const marked = new Set(highlights);
  text.split(/\s+/).forEach((token, index) => {
    if (index > 0) container.appendChild(document.createTextNode(" "));
    const span = el("span", marked.has(index) ? "tok hl" : "tok", token);
    container.appendChild(span);
  });
  return container;
}

function renderPanel(
  controller: SessionController,
  view: ItemView,
  side: Side,
): HTMLElement {
  const panel = el("section", `panel panel-${side}`);
  const text = side === "left" ? view.left : view.right;
  const highlights = side === "left" ? view.highlight_left : view.highlight_right;
  panel.appendChild(renderSentence(text, highlights));

  const label = el("label", "slider-label",
    "How well does this translation preserve the meaning of the reference?");
  const slider = el("input", "slider") as HTMLInputElement;
  slider.type = "range";
  slider.min = "0";
  slider.max = "100";
  slider.step = "1";
  slider.value = String(controller.sliders[side].value);
  slider.dataset.side = side;
  slider.dataset.interacted = String(controller.sliders[side].interacted);
  // only real input events may set the interacted flag
  slider.addEventListener("input", () => {
    controller.moveSlider(side, Number(slider.value));
  });
  label.appendChild(slider);
  panel.appendChild(label);
  return panel;
}

function renderItem(controller: SessionController, root: HTMLElement): void {
  const view = controller.view!;
  const progress = el("div", "progress", `Item ${view.item + 1} of ${view.total}`);
  root.appendChild(progress);

  const reference = el("div", "reference");
  reference.appendChild(el("h2", undefined, "Reference"));
  reference.appendChild(renderSentence(view.reference, []));
  root.appendChild(reference);

  const panels = el("div", "panels");
  panels.appendChild(renderPanel(controller, view, "left"));
  panels.appendChild(renderPanel(controller, view, "right"));
  root.appendChild(panels);

  const next = el("button", "next", "Next") as HTMLButtonElement;
  next.disabled = !controller.nextEnabled;
  next.addEventListener("click", () => void controller.submit());
  root.appendChild(next);
}

export function render(controller: SessionController, root: HTMLElement): void {
  root.textContent = "";
  switch (controller.phase) {
    case "idle":
    case "loading":
      root.appendChild(el("div", "status", "Loading…"));
      break;
    case "submitting":
      // keep the item on screen; Next stays disabled while in flight
      renderItem(controller, root);
      break;
    case "item":
      renderItem(controller, root);
      break;
    case "error": {
      root.appendChild(el("div", "error", controller.errorMessage ?? "Request failed"));
      const retry = el("button", "retry", "Retry") as HTMLButtonElement;
      retry.addEventListener("click", () => void controller.retry());
      root.appendChild(retry);
      break;
    }
    case "done":
      root.appendChild(el("div", "done", "All items annotated. Thank you!"));
      break;
  }
}

export function mount(controller: SessionController, root: HTMLElement): void {
  controller.onChange(() => render(controller, root));
  render(controller, root);
}
