/**
 * Temporal-direction task state machine.
 *
 * Pages advance one way (prompt -> clip A -> clip B -> decision), mirroring
 * how the probed models score each direction independently: the annotator
 * never sees the clips side by side and cannot return to clip A once clip B
 * has started. Playback starts are counted (partial plays included) and the
 * replay control locks at the limit.
 */

import type { Choice, DirectionJudgmentPayload, DirectionTask } from "./api.js";

export type Page = "prompt" | "clipA" | "clipB" | "decision";

const ORDER: Page[] = ["prompt", "clipA", "clipB", "decision"];

export class DirectionFlow {
  readonly task: DirectionTask;
  readonly replayLimit: number;
  private pageIndex = 0;
  private replays: Record<"A" | "B", number> = { A: 0, B: 0 };
  private bStarted = false;
  choice: Choice | null = null;

  constructor(task: DirectionTask, replayLimit?: number) {
    if (task.done || !task.video_id) throw new Error("no task to run");
    this.task = task;
    this.replayLimit = replayLimit ?? task.replay_limit ?? 3;
  }

  get page(): Page {
    return ORDER[this.pageIndex];
  }

  get replaysA(): number {
    return this.replays.A;
  }

  get replaysB(): number {
    return this.replays.B;
  }

  /** Move to the next page; clip pages are strictly sequential. */
  advance(): Page {
    if (this.pageIndex < ORDER.length - 1) this.pageIndex += 1;
    return this.page;
  }

  /** Back-navigation exists only before clip B has started. */
  canGoBackToClipA(): boolean {
    return this.page === "clipB" && !this.bStarted;
  }

  goBackToClipA(): void {
    if (!this.canGoBackToClipA()) {
      throw new Error("cannot revisit clip A after clip B has started");
    }
    this.pageIndex = ORDER.indexOf("clipA");
  }

  canPlay(slot: "A" | "B"): boolean {
    const onRightPage = (slot === "A" && this.page === "clipA") || (slot === "B" && this.page === "clipB");
    return onRightPage && this.replays[slot] < this.replayLimit;
  }

  /** Count a playback start; false means the control is locked. */
  startPlayback(slot: "A" | "B"): boolean {
    if (!this.canPlay(slot)) return false;
    this.replays[slot] += 1;
    if (slot === "B") this.bStarted = true;
    return true;
  }

  /** Whether the replay control for this slot is disabled. */
  replayDisabled(slot: "A" | "B"): boolean {
    return this.replays[slot] >= this.replayLimit;
  }

  choose(choice: Choice): void {
    if (this.page !== "decision") throw new Error("decision comes after both clips");
    this.choice = choice;
  }

  /** The three decision options, in presentation order. */
  static readonly CHOICES: Choice[] = ["A", "B", "unknown"];

  payload(annotatorId: string): DirectionJudgmentPayload {
    if (this.choice === null) throw new Error("no choice made yet");
    return {
      annotator_id: annotatorId,
      video_id: this.task.video_id!,
      choice: this.choice,
      replays_a: this.replays.A,
      replays_b: this.replays.B,
    };
  }
}
