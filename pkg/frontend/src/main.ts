// Entry point: ?mode=review opens the reviewer screen, anything else the game.

import { ApiClient } from "./api.js";
import { createGame } from "./game.js";
import { createReview } from "./review.js";

export function mount(root: HTMLElement, baseUrl = "", search = ""): void {
  const api = new ApiClient(baseUrl);
  const params = new URLSearchParams(search);
  if (params.get("mode") === "review") {
    void createReview(root, api).load();
  } else {
    createGame(root, api);
  }
}

const root = document.getElementById("app");
if (root) {
  mount(root, "", window.location.search);
}
