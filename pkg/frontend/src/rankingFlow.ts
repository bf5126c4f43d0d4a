/**
 * Six-clip causality ranking with ties.
 *
 * Clips render in an order shuffled by the server-provided seed, so server
 * and client agree on what was displayed without the order crossing the wire.
 * Ranks may be shared; the client validates the tie structure before posting.
 */

import type { RankingPayload, RankingTask } from "./api.js";
import { nextAssignableRank, validateTieStructure } from "./ties.js";

/** Deterministic 32-bit PRNG so display order is reproducible from the seed. */
export function mulberry32(seed: number): () => number {
  let state = seed >>> 0;
  return () => {
    state = (state + 0x6d2b79f5) >>> 0;
    let t = state;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

export function seededShuffle<T>(items: T[], seed: number): T[] {
  const rand = mulberry32(seed);
  const out = [...items];
  for (let i = out.length - 1; i > 0; i--) {
    const j = Math.floor(rand() * (i + 1));
    [out[i], out[j]] = [out[j], out[i]];
  }
  return out;
}

export class RankingFlow {
  readonly task: RankingTask;
  readonly displayOrder: string[];
  private ranks = new Map<string, number>();

  constructor(task: RankingTask) {
    if (task.done || !task.candidates) throw new Error("no ranking task to run");
    this.task = task;
    this.displayOrder = seededShuffle(
      task.candidates.map((c) => c.model_id),
      task.display_seed ?? 0,
    );
  }

  assign(modelId: string, rank: number): void {
    if (!this.displayOrder.includes(modelId)) throw new Error(`unknown candidate '${modelId}'`);
    this.ranks.set(modelId, rank);
  }

  clear(modelId: string): void {
    this.ranks.delete(modelId);
  }

  rankOf(modelId: string): number | undefined {
    return this.ranks.get(modelId);
  }

  get unranked(): string[] {
    return this.displayOrder.filter((m) => !this.ranks.has(m));
  }

  /** Where the next new tie group would start, shown next to the rank picker. */
  nextRank(): number {
    return nextAssignableRank([...this.ranks.values()]);
  }

  /** Null when submittable; otherwise the inline message to display. */
  validate(): string | null {
    if (this.unranked.length > 0) {
      return `unranked videos: ${this.unranked.join(", ")}`;
    }
    return validateTieStructure(Object.fromEntries(this.ranks), this.task.n_candidates);
  }

  payload(annotatorId: string): RankingPayload {
    const problem = this.validate();
    if (problem) throw new Error(problem);
    return {
      annotator_id: annotatorId,
      prompt_id: this.task.prompt_id!,
      ranks: Object.fromEntries(this.ranks),
    };
  }
}
