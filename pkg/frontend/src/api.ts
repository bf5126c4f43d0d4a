/** Typed client for the annotation service; the UI's only backend. */

export interface SessionInfo {
  annotator_id: string;
  replay_limit: number;
  direction_total: number;
  direction_remaining: number;
  ranking_total: number;
  ranking_remaining: number;
}

export interface DirectionTask {
  done: boolean;
  remaining: number;
  video_id?: string;
  prompt?: string;
  clip_a?: string;
  clip_b?: string;
  replay_limit?: number;
}

export interface RankingCandidate {
  model_id: string;
  clip: string;
}

export interface RankingTask {
  done: boolean;
  remaining: number;
  prompt_id?: string;
  prompt?: string;
  candidates?: RankingCandidate[];
  n_candidates?: number;
  display_seed?: number;
}

export type Choice = "A" | "B" | "unknown";

export interface DirectionJudgmentPayload {
  annotator_id: string;
  video_id: string;
  choice: Choice;
  replays_a: number;
  replays_b: number;
}

export interface RankingPayload {
  annotator_id: string;
  prompt_id: string;
  ranks: Record<string, number>;
}

export type SubmitResult = { accepted: true } | { accepted: false; reason: string };

export class AnnotationApi {
  constructor(private baseUrl: string) {}

  private url(path: string): string {
    return `${this.baseUrl}${path}`;
  }

  async session(annotatorId: string): Promise<SessionInfo> {
    const resp = await fetch(this.url(`/api/session?annotator_id=${encodeURIComponent(annotatorId)}`));
    if (!resp.ok) throw new Error(`session failed: ${resp.status}`);
    return resp.json();
  }

  async nextDirectionTask(annotatorId: string, skip = 0): Promise<DirectionTask> {
    const resp = await fetch(
      this.url(`/api/direction/next?annotator_id=${encodeURIComponent(annotatorId)}&skip=${skip}`),
    );
    if (!resp.ok) throw new Error(`direction/next failed: ${resp.status}`);
    return resp.json();
  }

  async submitDirectionJudgment(payload: DirectionJudgmentPayload): Promise<SubmitResult> {
    return this.post("/api/direction/judgment", payload);
  }

  async nextRankingTask(annotatorId: string): Promise<RankingTask> {
    const resp = await fetch(this.url(`/api/ranking/next?annotator_id=${encodeURIComponent(annotatorId)}`));
    if (!resp.ok) throw new Error(`ranking/next failed: ${resp.status}`);
    return resp.json();
  }

  async submitRanking(payload: RankingPayload): Promise<SubmitResult> {
    return this.post("/api/ranking", payload);
  }

  private async post(path: string, body: unknown): Promise<SubmitResult> {
    const resp = await fetch(this.url(path), {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
    if (resp.ok) return { accepted: true };
    let reason = `HTTP ${resp.status}`;
    try {
      const data = await resp.json();
      if (data && typeof data.detail === "string") reason = data.detail;
    } catch {
      // keep the status-code reason
    }
    return { accepted: false, reason };
  }
}
