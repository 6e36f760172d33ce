/** DOM rendering; the only module that touches document. */

import { filterPickerOptions } from "./picker.js";
import type { ReviewController } from "./reviewState.js";

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

function highlighted(text: string, span: [number, number] | null): HTMLElement {
  const body = el("p", "note-text");
  if (span === null || span[0] < 0 || span[1] > text.length || span[0] >= span[1]) {
    body.textContent = text;
    return body;
  }
  body.append(document.createTextNode(text.slice(0, span[0])));
  const mark = el("mark", "match", text.slice(span[0], span[1]));
  body.append(mark, document.createTextNode(text.slice(span[1])));
  return body;
}

function progressPanel(controller: ReviewController): HTMLElement {
  const panel = el("section", "progress");
  const stats = controller.stats;
  if (stats === null) {
    panel.append(el("p", "muted", "no stats yet"));
    return panel;
  }
  const done = stats.accepted + stats.corrected;
  const bar = el("div", "bar");
  const fill = el("div", "bar-fill");
  fill.style.width = stats.total ? `${(100 * done) / stats.total}%` : "0%";
  bar.append(fill);
  panel.append(
    el("h2", undefined, "Progress"),
    bar,
    el(
      "p",
      "counts",
      `${done}/${stats.total} done - pending ${stats.pending}, ` +
        `accepted ${stats.accepted}, corrected ${stats.corrected}`,
    ),
  );
  if (stats.agreement !== null) {
    panel.append(
      el(
        "p",
        "agreement",
        `dual-review agreement ${Math.round(stats.agreement.ratio * 100)}% ` +
          `(n=${stats.agreement.dual_reviewed})`,
      ),
    );
  }
  if (controller.statsStale) {
    panel.append(el("p", "badge stale", "stats may be stale"));
  }
  return panel;
}

function pickerPanel(controller: ReviewController, query: string): HTMLElement {
  const panel = el("section", "picker");
  const input = el("input") as HTMLInputElement;
  input.type = "text";
  input.placeholder = "type to search vaccines";
  input.value = query;
  input.id = "picker-search";
  input.addEventListener("input", () => render(controller, input.value));
  const list = el("ul", "picker-options");
  for (const option of filterPickerOptions(controller.pickerOptions, query)) {
    const item = el("li");
    const button = el("button", "option", option);
    button.addEventListener("click", () => {
      void controller.correct(option);
    });
    item.append(button);
    list.append(item);
  }
  panel.append(el("h2", undefined, "Correct to"), input, list);
  return panel;
}

export function render(controller: ReviewController, pickerQuery = ""): void {
  const root = document.getElementById("app");
  if (root === null) return;
  root.replaceChildren();

  const header = el("header");
  header.append(
    el("h1", undefined, "Vaccine mention review"),
    el("p", "reviewer", `reviewer: ${controller.reviewer}`),
  );
  root.append(header);

  const main = el("main");
  switch (controller.phase) {
    case "loading":
    case "idle":
      main.append(el("p", "muted", "loading next note"));
      break;
    case "empty": {
      main.append(el("p", "done", "All reviewed - queue is empty."));
      break;
    }
    case "error": {
      const banner = el("div", "banner error");
      banner.append(
        el("p", undefined, `request failed: ${controller.errorMessage ?? "unknown error"}`),
      );
      const retry = el("button", "retry", "Retry");
      retry.addEventListener("click", () => void controller.retry());
      banner.append(retry);
      main.append(banner);
      break;
    }
    default: {
      const card = controller.card;
      if (card === null) break;
      const section = el("section", "card");
      section.append(
        el("p", "age", `Age: ${card.ageDisplay}`),
        highlighted(card.text, card.span),
        el(
          "p",
          "proposal",
          `proposed: ${card.proposed ?? "(no proposal)"}` +
            (card.engine ? ` [${card.engine}]` : ""),
        ),
      );
      const buttons = el("div", "actions");
      for (const [label, handler, key] of [
        ["Accept", () => void controller.accept(), "A"],
        ["Correct", () => controller.openPicker(), "C"],
        ["Skip", () => void controller.skip(), "S"],
      ] as const) {
        const button = el("button", "action", `${label} (${key})`);
        button.disabled = !controller.decisionsEnabled;
        button.addEventListener("click", handler);
        buttons.append(button);
      }
      section.append(buttons);
      main.append(section);
      if (controller.phase === "correcting") {
        main.append(pickerPanel(controller, pickerQuery));
      }
      if (controller.phase === "submitting") {
        main.append(el("p", "muted", "submitting"));
      }
    }
  }
  root.append(main, progressPanel(controller));

  if (controller.phase === "correcting") {
    const search = document.getElementById("picker-search");
    if (search instanceof HTMLInputElement && document.activeElement !== search) {
      search.focus();
      search.setSelectionRange(search.value.length, search.value.length);
    }
  }
}
