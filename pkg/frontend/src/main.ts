/** DOM wiring: one screen at a time, driven by the flow state machines. */

import { AnnotationApi, Choice } from "./api.js";
import { DirectionFlow } from "./directionFlow.js";
import { RankingFlow } from "./rankingFlow.js";

const api = new AnnotationApi("");
const root = document.getElementById("app")!;

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  text = "",
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [k, v] of Object.entries(attrs)) node.setAttribute(k, v);
  if (text) node.textContent = text;
  return node;
}

function clear(): void {
  root.replaceChildren();
}

function annotatorId(): string {
  return (document.getElementById("annotator") as HTMLInputElement).value.trim();
}

async function showMenu(): Promise<void> {
  clear();
  const info = await api.session(annotatorId());
  root.append(
    el("h2", {}, `Welcome, ${info.annotator_id}`),
    el("p", {}, `Direction tasks remaining: ${info.direction_remaining} of ${info.direction_total}`),
    el("p", {}, `Ranking tasks remaining: ${info.ranking_remaining} of ${info.ranking_total}`),
  );
  const dirBtn = el("button", {}, "Start direction study");
  dirBtn.onclick = () => runDirectionTask();
  const rankBtn = el("button", {}, "Start ranking study");
  rankBtn.onclick = () => runRankingTask();
  root.append(dirBtn, rankBtn);
}

function clipPage(flow: DirectionFlow, slot: "A" | "B", src: string, onDone: () => void): void {
  clear();
  root.append(el("h3", {}, `Clip ${slot === "A" ? "1" : "2"} of 2`));
  const video = el("video", { width: "480", preload: "auto" });
  video.src = src;
  const play = el("button", {}, "Play");
  const counter = el("span", {}, "");
  const refresh = () => {
    const used = slot === "A" ? flow.replaysA : flow.replaysB;
    counter.textContent = ` plays used: ${used}/${flow.replayLimit}`;
    play.disabled = flow.replayDisabled(slot);
  };
  play.onclick = () => {
    if (flow.startPlayback(slot)) {
      video.currentTime = 0;
      void video.play();
    }
    refresh();
  };
  const next = el("button", {}, slot === "A" ? "Continue to clip 2" : "Continue to decision");
  next.onclick = () => {
    flow.advance();
    onDone();
  };
  refresh();
  root.append(video, el("div", {}), play, counter, el("div", {}), next);
}

async function runDirectionTask(skip = 0): Promise<void> {
  const task = await api.nextDirectionTask(annotatorId(), skip);
  if (task.done) {
    clear();
    root.append(el("p", {}, "All direction tasks complete. Thank you!"));
    return;
  }
  const flow = new DirectionFlow(task);

  const promptPage = () => {
    clear();
    root.append(
      el("h3", {}, "Read the description"),
      el("blockquote", {}, task.prompt ?? ""),
      el("p", {}, "You will watch two versions of this clip, one at a time. One of them is played backwards."),
    );
    const defer = el("button", {}, "Skip for now");
    defer.onclick = () => runDirectionTask(skip + 1);
    const start = el("button", {}, "Watch clip 1");
    start.onclick = () => {
      flow.advance();
      render();
    };
    root.append(start, defer);
  };

  const decisionPage = () => {
    clear();
    root.append(el("h3", {}, "Which version was played backwards?"));
    for (const choice of DirectionFlow.CHOICES) {
      const label = choice === "A" ? "The first clip" : choice === "B" ? "The second clip" : "Unknown";
      const btn = el("button", {}, label);
      btn.onclick = async () => {
        flow.choose(choice as Choice);
        const result = await api.submitDirectionJudgment(flow.payload(annotatorId()));
        if (!result.accepted) {
          root.append(el("p", { class: "error" }, `Rejected: ${result.reason}. Your answers are kept; retry below.`));
          const retry = el("button", {}, "Retry submission");
          retry.onclick = btn.onclick;
          root.append(retry);
          return;
        }
        runDirectionTask();
      };
      root.append(btn, el("span", {}, " "));
    }
  };

  const render = () => {
    switch (flow.page) {
      case "prompt":
        promptPage();
        break;
      case "clipA":
        clipPage(flow, "A", task.clip_a!, render);
        break;
      case "clipB":
        clipPage(flow, "B", task.clip_b!, render);
        break;
      case "decision":
        decisionPage();
        break;
    }
  };
  render();
}

async function runRankingTask(): Promise<void> {
  const task = await api.nextRankingTask(annotatorId());
  if (task.done) {
    clear();
    root.append(el("p", {}, "All ranking tasks complete. Thank you!"));
    return;
  }
  const flow = new RankingFlow(task);
  clear();
  root.append(
    el("h3", {}, "Rank the clips by how plausible their cause-and-effect is"),
    el("blockquote", {}, task.prompt ?? ""),
    el("p", {}, "1 = most plausible. Equal ranks are allowed."),
  );
  const message = el("p", { class: "error" }, "");
  const byModel = new Map(task.candidates!.map((c) => [c.model_id, c.clip]));
  for (const modelId of flow.displayOrder) {
    const row = el("div", { class: "rank-row" });
    const video = el("video", { width: "240", controls: "controls" });
    video.src = byModel.get(modelId)!;
    const select = el("select");
    select.append(el("option", { value: "" }, "unranked"));
    for (let r = 1; r <= (task.n_candidates ?? 6); r++) {
      select.append(el("option", { value: String(r) }, `rank ${r}`));
    }
    select.onchange = () => {
      if (select.value === "") flow.clear(modelId);
      else flow.assign(modelId, Number(select.value));
      message.textContent = `next new rank group would start at ${flow.nextRank()}`;
    };
    row.append(video, select);
    root.append(row);
  }
  const submit = el("button", {}, "Submit ranking");
  submit.onclick = async () => {
    const problem = flow.validate();
    if (problem) {
      message.textContent = problem;
      return;
    }
    const result = await api.submitRanking(flow.payload(annotatorId()));
    if (!result.accepted) {
      message.textContent = `Rejected: ${result.reason}`;
      return;
    }
    runRankingTask();
  };
  root.append(message, submit);
}

document.getElementById("enter")!.addEventListener("click", () => void showMenu());
