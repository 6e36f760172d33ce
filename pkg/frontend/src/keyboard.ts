/** Keyboard bindings: A = accept, C = open correction picker, S = skip. */

import type { Phase } from "./reviewState.js";

export type ReviewAction = "accept" | "open-picker" | "skip" | "close-picker";

export function actionForKey(key: string, phase: Phase): ReviewAction | null {
  if (phase === "reviewing") {
    switch (key.toLowerCase()) {
      case "a":
        return "accept";
      case "c":
        return "open-picker";
      case "s":
        return "skip";
      default:
        return null;
    }
  }
  if (phase === "correcting" && key === "Escape") {
    return "close-picker";
  }
  return null;
}
