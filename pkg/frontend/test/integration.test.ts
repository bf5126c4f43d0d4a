/**
 * Headless protocol conformance against the real annotation service.
 *
 * The global setup boots the Python service on synthetic fixtures; these
 * tests drive it through the same client the browser UI uses and assert the
 * wire-level invariants: no ground truth before submission, replay limits,
 * Unknown round-trip, and client/server agreement on tie handling.
 */

import { beforeAll, describe, expect, it } from "vitest";

import { AnnotationApi } from "../src/api.js";
import { DirectionFlow } from "../src/directionFlow.js";
import { RankingFlow } from "../src/rankingFlow.js";
import { validateTieStructure } from "../src/ties.js";

let api: AnnotationApi;
let base: string;

beforeAll(() => {
  base = process.env.YOCAUSAL_UI_BASE ?? "http://127.0.0.1:8741";
  api = new AnnotationApi(base);
});

describe("direction study protocol", () => {
  it("task payloads never reveal the ground-truth direction", async () => {
    const task = await api.nextDirectionTask("ui-ann1");
    const raw = JSON.stringify(task);
    expect(raw).not.toContain("forward");
    expect(raw).not.toContain("reversed");
    expect(raw).not.toContain("shown_order");
    expect(task.clip_a).toMatch(/^\/api\/clip\/[0-9a-f]+$/);
    expect(task.clip_b).toMatch(/^\/api\/clip\/[0-9a-f]+$/);
  });

  it("clip handles resolve to playable media", async () => {
    const task = await api.nextDirectionTask("ui-ann1");
    for (const url of [task.clip_a!, task.clip_b!]) {
      const resp = await fetch(`${base}${url}`);
      expect(resp.status).toBe(200);
      const bytes = await resp.arrayBuffer();
      expect(bytes.byteLength).toBeGreaterThan(100);
    }
  });

  it("replay control disables after three plays and the limit survives the round-trip", async () => {
    const task = await api.nextDirectionTask("ui-ann2");
    const flow = new DirectionFlow(task);
    flow.advance();
    for (let i = 0; i < 3; i++) expect(flow.startPlayback("A")).toBe(true);
    expect(flow.replayDisabled("A")).toBe(true);
    expect(flow.startPlayback("A")).toBe(false); // counter cannot exceed the server limit
    flow.advance();
    flow.startPlayback("B");
    flow.advance();
    flow.choose("A");
    const result = await api.submitDirectionJudgment(flow.payload("ui-ann2"));
    expect(result.accepted).toBe(true);
  });

  it("an Unknown submission round-trips into the export", async () => {
    const task = await api.nextDirectionTask("ui-ann1");
    const flow = new DirectionFlow(task);
    flow.advance();
    flow.startPlayback("A");
    flow.advance();
    flow.startPlayback("B");
    flow.advance();
    flow.choose("unknown");
    const result = await api.submitDirectionJudgment(flow.payload("ui-ann1"));
    expect(result.accepted).toBe(true);
    const exportText = await (await fetch(`${base}/api/export/direction`)).text();
    const row = exportText
      .split("\n")
      .filter(Boolean)
      .map((line) => JSON.parse(line))
      .find((r) => r.video_id === task.video_id && r.annotator_id === "ui-ann1");
    expect(row).toBeDefined();
    expect(row.choice).toBe("unknown");
  });

  it("the server rejects replay counts over the limit", async () => {
    const task = await api.nextDirectionTask("ui-ann3");
    const result = await api.submitDirectionJudgment({
      annotator_id: "ui-ann3",
      video_id: task.video_id!,
      choice: "A",
      replays_a: 4,
      replays_b: 0,
    });
    expect(result.accepted).toBe(false);
    if (!result.accepted) expect(result.reason.toLowerCase()).toContain("replay");
  });

  it("duplicate submissions are rejected and surfaced as a reason", async () => {
    const task = await api.nextDirectionTask("ui-ann3");
    const payload = {
      annotator_id: "ui-ann3",
      video_id: task.video_id!,
      choice: "B" as const,
      replays_a: 1,
      replays_b: 1,
    };
    expect((await api.submitDirectionJudgment(payload)).accepted).toBe(true);
    const dup = await api.submitDirectionJudgment(payload);
    expect(dup.accepted).toBe(false);
  });
});

describe("ranking study protocol", () => {
  it("a 3-way tie at rank 2 advances the next rank to 5 and the server accepts it", async () => {
    const task = await api.nextRankingTask("ui-ann1");
    expect(task.done).toBe(false);
    const flow = new RankingFlow(task);
    const [a, b, c, d, e, f] = flow.displayOrder;
    flow.assign(a, 1);
    flow.assign(b, 2);
    flow.assign(c, 2);
    flow.assign(d, 2);
    expect(flow.nextRank()).toBe(5);
    flow.assign(e, 5);
    flow.assign(f, 6);
    expect(flow.validate()).toBeNull();
    const result = await api.submitRanking(flow.payload("ui-ann1"));
    expect(result.accepted).toBe(true);
  });

  it("client and server tie validators agree on live submissions", async () => {
    const task = await api.nextRankingTask("ui-ann2");
    const models = task.candidates!.map((c) => c.model_id);
    // invalid structures first (rejections do not consume the task), one valid last
    const cases: Record<string, number>[] = [
      Object.fromEntries(models.map((m, i) => [m, i + 2])), // starts at 2: invalid
      Object.fromEntries(models.map((m, i) => [m, i < 2 ? 1 : i])), // 1,1,2,..: invalid after tie
      Object.fromEntries(models.map((m) => [m, 1])), // all tied: valid
    ];
    let sawAccept = false;
    for (const ranks of cases) {
      const clientVerdict = validateTieStructure(ranks, models.length) === null;
      const result = await api.submitRanking({ annotator_id: "ui-ann2", prompt_id: task.prompt_id!, ranks });
      expect(result.accepted, JSON.stringify(ranks)).toBe(clientVerdict);
      if (result.accepted) sawAccept = true;
    }
    expect(sawAccept).toBe(true);
  });

  it("candidate clip handles stream media", async () => {
    const task = await api.nextRankingTask("ui-ann3");
    const clip = task.candidates![0].clip;
    const resp = await fetch(`${base}${clip}`);
    expect(resp.status).toBe(200);
    expect((await resp.arrayBuffer()).byteLength).toBeGreaterThan(100);
  });

  it("omitting a candidate is rejected", async () => {
    const task = await api.nextRankingTask("ui-ann3");
    const models = task.candidates!.map((c) => c.model_id);
    const ranks = Object.fromEntries(models.slice(0, 5).map((m, i) => [m, i + 1]));
    const result = await api.submitRanking({ annotator_id: "ui-ann3", prompt_id: task.prompt_id!, ranks });
    expect(result.accepted).toBe(false);
    if (!result.accepted) expect(result.reason).toContain(models[5]);
  });
});
