import { ApiClient } from "./api.js";
import { render } from "./dom.js";
import { actionForKey } from "./keyboard.js";
import { ReviewController } from "./reviewState.js";

function reviewerId(): string {
  const fromQuery = new URLSearchParams(window.location.search).get("reviewer");
  if (fromQuery) return fromQuery;
  const answer = window.prompt("Reviewer id:") ?? "";
  return answer.trim() || "anonymous";
}

const api = new ApiClient(window.location.origin);
const controller = new ReviewController(api, reviewerId(), (c) => render(c));

document.addEventListener("keydown", (event) => {
  if (document.activeElement instanceof HTMLInputElement) {
    if (event.key !== "Escape") return;
  }
  const action = actionForKey(event.key, controller.phase);
  if (action === null) return;
  event.preventDefault();
  switch (action) {
    case "accept":
      void controller.accept();
      break;
    case "open-picker":
      controller.openPicker();
      break;
    case "skip":
      void controller.skip();
      break;
    case "close-picker":
      controller.closePicker();
      break;
  }
});

void controller.start();
