// Typed client for the annotation service endpoints.

export interface PredictionResponse {
  label: string;
  confidence: number;
  language: string;
  language_low_confidence?: boolean;
}

export interface FeedbackRecord {
  id: string;
  text: string;
  predicted_label: string;
  predicted_confidence: number;
  user_verdict: string;
  derived_label: string;
  language: string;
  timestamp: number;
  review_status: "pending" | "confirmed" | "rejected";
}

export interface StatsResponse {
  languages: Record<string, Record<string, number>>;
  confirmed: number;
  pending: number;
  rejected: number;
  churn_ratio: number;
}

export type Verdict = "approve" | "disapprove";

export class ApiError extends Error {
  constructor(public status: number, message: string) {
    super(message);
    this.name = "ApiError";
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  private fetchFn: FetchLike;

  constructor(private baseUrl: string = "", fetchFn?: FetchLike) {
    // bind so jsdom/window fetch keeps its receiver
    this.fetchFn = fetchFn ?? ((input, init) => fetch(input, init));
  }

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchFn(`${this.baseUrl}${path}`, init);
    const body = await response.json().catch(() => ({}));
    if (!response.ok) {
      throw new ApiError(response.status, body.error ?? `HTTP ${response.status}`);
    }
    return body as T;
  }

  private post<T>(path: string, payload: unknown): Promise<T> {
    return this.request<T>(path, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(payload),
    });
  }

  predict(text: string, language?: string): Promise<PredictionResponse> {
    return this.post("/predict", language ? { text, language } : { text });
  }

  feedback(
    text: string,
    predictedLabel: string,
    verdict: Verdict,
    predictedConfidence?: number,
  ): Promise<FeedbackRecord> {
    return this.post("/feedback", {
      text,
      predicted_label: predictedLabel,
      verdict,
      predicted_confidence: predictedConfidence ?? 1.0,
    });
  }

  review(id: string, reviewerLabel: string): Promise<FeedbackRecord> {
    return this.post("/review", { id, reviewer_label: reviewerLabel });
  }

  stats(): Promise<StatsResponse> {
    return this.request("/stats");
  }

  async records(status?: string): Promise<FeedbackRecord[]> {
    const query = status ? `?status=${encodeURIComponent(status)}` : "";
    const body = await this.request<{ records: FeedbackRecord[] }>(`/records${query}`);
    return body.records;
  }

  health(): Promise<{ status: string }> {
    return this.request("/health");
  }
}

export function flipLabel(label: string): string {
  return label === "churn" ? "non_churn" : "churn";
}
