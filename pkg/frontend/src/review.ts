// Reviewer screen: second annotator resolves pending feedback records.
// Agree confirms the derived label, disagree rejects it.

import { ApiClient, ApiError, FeedbackRecord, flipLabel } from "./api.js";

export class ReviewView {
  records: FeedbackRecord[] = [];

  constructor(private root: HTMLElement, private api: ApiClient) {
    this.root.innerHTML = `
      <header>
        <h1>Review queue</h1>
        <div data-role="stats"></div>
      </header>
      <div data-role="queue"></div>
      <div class="banner" data-role="banner" hidden></div>
    `;
  }

  async load(): Promise<void> {
    this.records = await this.api.records("pending");
    await this.renderStats();
    this.renderQueue();
  }

  private async renderStats(): Promise<void> {
    const slot = this.root.querySelector("[data-role=stats]")!;
    try {
      const stats = await this.api.stats();
      slot.textContent =
        `pending ${stats.pending}  confirmed ${stats.confirmed}  ` +
        `rejected ${stats.rejected}`;
    } catch {
      slot.textContent = "";
    }
  }

  private renderQueue(): void {
    const queue = this.root.querySelector("[data-role=queue]")!;
    queue.innerHTML = "";
    if (this.records.length === 0) {
      const empty = document.createElement("p");
      empty.className = "empty";
      empty.textContent = "Nothing waiting for review.";
      queue.appendChild(empty);
      return;
    }
    for (const record of this.records) {
      queue.appendChild(this.renderRow(record));
    }
  }

  private renderRow(record: FeedbackRecord): HTMLElement {
    const row = document.createElement("div");
    row.className = "record";
    row.dataset.id = record.id;
    row.innerHTML = `
      <p class="text">${escapeHtml(record.text)}</p>
      <p class="meta">${record.language} - labeled
        <strong>${record.derived_label}</strong> by the player</p>
      <div class="actions">
        <button data-action="agree">agree</button>
        <button data-action="disagree">disagree</button>
      </div>
      <p class="status" data-role="status"></p>
    `;
    row.querySelector<HTMLButtonElement>("[data-action=agree]")!
      .addEventListener("click", () => void this.resolve(record, true));
    row.querySelector<HTMLButtonElement>("[data-action=disagree]")!
      .addEventListener("click", () => void this.resolve(record, false));
    return row;
  }

  async resolve(record: FeedbackRecord, agree: boolean): Promise<void> {
    const row = this.root.querySelector<HTMLElement>(`[data-id="${record.id}"]`);
    row?.querySelectorAll("button").forEach((b) => (b.disabled = true));
    const reviewerLabel = agree ? record.derived_label : flipLabel(record.derived_label);
    try {
      const updated = await this.api.review(record.id, reviewerLabel);
      if (row) {
        row.querySelector("[data-role=status]")!.textContent = updated.review_status;
        row.classList.add(updated.review_status);
      }
      await this.renderStats();
    } catch (err) {
      if (err instanceof ApiError && err.status === 409) {
        // someone else settled it; refresh the queue
        await this.load();
        return;
      }
      row?.querySelectorAll("button").forEach((b) => (b.disabled = false));
      this.banner(`Review failed (${(err as Error).message}).`);
    }
  }

  private banner(message: string): void {
    const banner = this.root.querySelector<HTMLElement>("[data-role=banner]")!;
    banner.hidden = false;
    banner.textContent = message;
  }
}

function escapeHtml(text: string): string {
  const div = document.createElement("div");
  div.textContent = text;
  return div.innerHTML;
}

export function createReview(root: HTMLElement, api: ApiClient): ReviewView {
  return new ReviewView(root, api);
}
