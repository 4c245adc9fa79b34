// Chat-game screen: the player enters a sentence, sees the model's churn
// prediction, and approves or disapproves it. One feedback request per turn,
// no matter how often the buttons are clicked.

import { ApiClient, PredictionResponse, StatsResponse, Verdict } from "./api.js";

export interface ChatTurn {
  userText: string;
  prediction: PredictionResponse | null;
  verdict: Verdict | null;
  recordId: string | null;
  submitting: boolean;
  derivedLabel: string | null;
}

function labelText(label: string): string {
  return label === "churn" ? "churn" : "non-churn";
}

export class GameView {
  turns: ChatTurn[] = [];
  score = 0;
  round = 1;
  private stats: StatsResponse | null = null;

  constructor(private root: HTMLElement, private api: ApiClient) {
    this.root.innerHTML = `
      <header>
        <h1>Churn game</h1>
        <div class="scoreboard">
          <span data-role="score">score 0</span>
          <span data-role="stats"></span>
        </div>
      </header>
      <p data-role="prompt"></p>
      <div data-role="turns"></div>
      <form data-role="entry">
        <input name="sentence" type="text" autocomplete="off"
               placeholder="Type your sentence" />
        <button type="submit">Send</button>
        <span class="error" data-role="input-error"></span>
      </form>
      <div class="banner" data-role="banner" hidden></div>
    `;
    const form = this.root.querySelector<HTMLFormElement>("[data-role=entry]")!;
    form.addEventListener("submit", (event) => {
      event.preventDefault();
      void this.submitSentence();
    });
    this.renderPrompt();
    void this.refreshStats();
  }

  private get input(): HTMLInputElement {
    return this.root.querySelector<HTMLInputElement>("input[name=sentence]")!;
  }

  private renderPrompt(): void {
    const wantChurny = this.round % 2 === 1;
    const prompt = this.root.querySelector("[data-role=prompt]")!;
    prompt.textContent =
      `Round ${this.round}: enter a ${wantChurny ? "CHURNY" : "NON-CHURNY"} ` +
      "customer sentence and check the bot's guess.";
  }

  private setBanner(message: string | null): void {
    const banner = this.root.querySelector<HTMLElement>("[data-role=banner]")!;
    if (message === null) {
      banner.hidden = true;
      banner.textContent = "";
    } else {
      banner.hidden = false;
      banner.textContent = message;
    }
  }

  async refreshStats(): Promise<void> {
    try {
      this.stats = await this.api.stats();
    } catch {
      this.stats = null; // stats are decorative; prediction flow still works
    }
    const slot = this.root.querySelector("[data-role=stats]")!;
    if (this.stats) {
      const langs = Object.entries(this.stats.languages)
        .map(([lang, counts]) =>
          `${lang} ${counts["churn"] ?? 0}/${counts["non_churn"] ?? 0}`)
        .join("  ");
      slot.textContent =
        `confirmed ${this.stats.confirmed} (${langs})  pending ${this.stats.pending}`;
    } else {
      slot.textContent = "";
    }
  }

  async submitSentence(): Promise<ChatTurn | null> {
    const text = this.input.value.trim();
    const inputError = this.root.querySelector("[data-role=input-error]")!;
    if (!text) {
      inputError.textContent = "Enter a sentence first.";
      return null;
    }
    inputError.textContent = "";
    this.setBanner(null);
    let prediction: PredictionResponse;
    try {
      prediction = await this.api.predict(text);
    } catch (err) {
      // keep the input so the player can retry the same sentence
      this.setBanner(`The bot is unreachable (${(err as Error).message}). ` +
        "Your sentence is still in the box - try again.");
      return null;
    }
    const turn: ChatTurn = {
      userText: text,
      prediction,
      verdict: null,
      recordId: null,
      submitting: false,
      derivedLabel: null,
    };
    this.turns.push(turn);
    this.input.value = "";
    this.renderTurn(turn);
    return turn;
  }

  private renderTurn(turn: ChatTurn): void {
    const container = this.root.querySelector("[data-role=turns]")!;
    const index = this.turns.indexOf(turn);
    const element = document.createElement("div");
    element.className = "turn";
    element.dataset.turn = String(index);
    const confidence = (turn.prediction!.confidence * 100).toFixed(1);
    element.innerHTML = `
      <p class="user">you: ${escapeHtml(turn.userText)}</p>
      <p class="bot">bot: this sounds <strong>${labelText(turn.prediction!.label)}</strong>
         (confidence ${confidence}%)</p>
      <div class="verdict">
        <button data-action="approve">approve</button>
        <button data-action="disapprove">disapprove</button>
      </div>
      <p class="outcome" data-role="outcome"></p>
    `;
    for (const action of ["approve", "disapprove"] as Verdict[]) {
      element
        .querySelector<HTMLButtonElement>(`[data-action=${action}]`)!
        .addEventListener("click", () => void this.submitVerdict(turn, action));
    }
    container.appendChild(element);
  }

  async submitVerdict(turn: ChatTurn, verdict: Verdict): Promise<void> {
    // settable exactly once; re-entrant clicks are dropped client-side
    if (turn.verdict !== null || turn.submitting || !turn.prediction) {
      return;
    }
    turn.submitting = true;
    this.lockTurn(turn);
    try {
      const record = await this.api.feedback(
        turn.userText, turn.prediction.label, verdict, turn.prediction.confidence);
      turn.verdict = verdict;
      turn.recordId = record.id;
      turn.derivedLabel = record.derived_label;
      if (verdict === "approve") {
        this.score += 1;
      }
      this.round += 1;
      this.renderOutcome(turn, `recorded as ${labelText(record.derived_label)}`);
      this.renderPrompt();
      this.updateScore();
      await this.refreshStats();
    } catch (err) {
      turn.submitting = false;
      this.unlockTurn(turn);
      this.setBanner(`Saving your verdict failed (${(err as Error).message}).`);
    }
  }

  private turnElement(turn: ChatTurn): HTMLElement | null {
    const index = this.turns.indexOf(turn);
    return this.root.querySelector(`[data-turn="${index}"]`);
  }

  private lockTurn(turn: ChatTurn): void {
    this.turnElement(turn)?.querySelectorAll("button")
      .forEach((b) => (b.disabled = true));
  }

  private unlockTurn(turn: ChatTurn): void {
    this.turnElement(turn)?.querySelectorAll("button")
      .forEach((b) => (b.disabled = false));
  }

  private renderOutcome(turn: ChatTurn, message: string): void {
    const element = this.turnElement(turn);
    if (element) {
      element.querySelector("[data-role=outcome]")!.textContent = message;
    }
  }

  private updateScore(): void {
    this.root.querySelector("[data-role=score]")!.textContent = `score ${this.score}`;
  }
}

function escapeHtml(text: string): string {
  const div = document.createElement("div");
  div.textContent = text;
  return div.innerHTML;
}

export function createGame(root: HTMLElement, api: ApiClient): GameView {
  return new GameView(root, api);
}
