import { describe, expect, it } from "vitest";

import type { RankingTask } from "../src/api.js";
import { RankingFlow, seededShuffle } from "../src/rankingFlow.js";

function task(seed = 41): RankingTask {
  return {
    done: false,
    remaining: 2,
    prompt_id: "p1",
    prompt: "a ball knocks over a tower",
    candidates: Array.from({ length: 6 }, (_, i) => ({ model_id: `model${i}`, clip: `/api/clip/c${i}` })),
    n_candidates: 6,
    display_seed: seed,
  };
}

describe("seededShuffle", () => {
  it("is deterministic per seed", () => {
    const items = ["a", "b", "c", "d", "e", "f"];
    expect(seededShuffle(items, 7)).toEqual(seededShuffle(items, 7));
    expect(seededShuffle(items, 7)).not.toEqual(seededShuffle(items, 8));
  });

  it("permutes without loss", () => {
    const items = ["a", "b", "c", "d"];
    expect([...seededShuffle(items, 3)].sort()).toEqual(items);
  });
});

describe("RankingFlow", () => {
  it("shuffles display order from the server seed", () => {
    const a = new RankingFlow(task(1));
    const b = new RankingFlow(task(1));
    expect(a.displayOrder).toEqual(b.displayOrder);
    expect([...a.displayOrder].sort()).toEqual(["model0", "model1", "model2", "model3", "model4", "model5"]);
  });

  it("three videos on rank 2 advance the next rank to 5", () => {
    const flow = new RankingFlow(task());
    flow.assign("model0", 1);
    flow.assign("model1", 2);
    flow.assign("model2", 2);
    flow.assign("model3", 2);
    expect(flow.nextRank()).toBe(5);
  });

  it("accepts a full six-way tie", () => {
    const flow = new RankingFlow(task());
    for (const m of flow.displayOrder) flow.assign(m, 1);
    expect(flow.validate()).toBeNull();
  });

  it("blocks submission with an unranked video", () => {
    const flow = new RankingFlow(task());
    for (const m of flow.displayOrder.slice(0, 5)) flow.assign(m, 1);
    expect(flow.validate()).toContain("unranked");
    expect(() => flow.payload("ann")).toThrow();
  });

  it("blocks invalid tie structures client-side", () => {
    const flow = new RankingFlow(task());
    const [a, b, c, ...rest] = flow.displayOrder;
    flow.assign(a, 1);
    flow.assign(b, 1);
    flow.assign(c, 2);
    rest.forEach((m, i) => flow.assign(m, 4 + i));
    expect(flow.validate()).toContain("tie");
  });

  it("produces the server payload shape", () => {
    const flow = new RankingFlow(task());
    flow.displayOrder.forEach((m, i) => flow.assign(m, i + 1));
    const payload = flow.payload("ann-2");
    expect(payload.prompt_id).toBe("p1");
    expect(Object.keys(payload.ranks)).toHaveLength(6);
  });
});
