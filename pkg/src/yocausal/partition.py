"""Causal / non-causal dataset partitioning via a pluggable VLM judge.

The judge answers a binary question: does the clip contain an obvious
cause-and-effect interaction? Responses are cached per (video, judge) so
re-runs cost nothing; unparseable responses are recorded as abstentions and
the video is excluded from both partitions. Human labels are ingested through
the same CausalLabel record with source="human".
"""

import base64
import re
import threading
import time
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from .aggregate import UndefinedStatisticError, kendall_tau
from .catalog import VideoRecord, decode
from .lineio import read_lines, write_lines

VLM_KEY_ENV = "YOCAUSAL_VLM_KEY"

# Default judge prompt; the shipped copy in assets/causal_judge_prompt.txt can
# be swapped out via the vlm.prompt_asset config key.
DEFAULT_PROMPT = """You will see frames sampled from a short video clip, in temporal order.
Decide whether the clip shows an obvious, visually explicit cause-and-effect
interaction between entities or objects (for example: a collision that moves
something, an action that changes an object's state, pouring that fills a
container). Scene changes with no identifiable cause acting on an effect
(for example: steady cruising, ambient motion, a static scene) do not count.

Answer on the first line with exactly one word: CAUSAL or NON-CAUSAL.
Then briefly explain your reasoning.
"""


def load_prompt_asset(path=None) -> str:
    """The judge prompt from a config-referenced file, or the shipped default."""
    if path is not None:
        return Path(path).read_text()
    shipped = Path(__file__).parent / "assets" / "causal_judge_prompt.txt"
    if shipped.exists():
        return shipped.read_text()
    return DEFAULT_PROMPT

_VERDICT_RE = re.compile(r"\b(NON[\s_-]?CAUSAL|CAUSAL)\b", re.IGNORECASE)


class PartitionError(RuntimeError):
    pass


@dataclass
class CausalLabel:
    video_id: str
    label: str  # "causal" | "noncausal" | "abstain"
    source: str
    raw_response: str
    timestamp: float

    def to_dict(self) -> dict:
        return {
            "video_id": self.video_id,
            "label": self.label,
            "source": self.source,
            "raw_response": self.raw_response,
            "timestamp": self.timestamp,
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "CausalLabel":
        return cls(
            video_id=str(obj["video_id"]),
            label=str(obj["label"]),
            source=str(obj["source"]),
            raw_response=str(obj.get("raw_response", "")),
            timestamp=float(obj.get("timestamp", 0.0)),
        )


def parse_verdict(text: str) -> str | None:
    """First verdict token in the response; None when unparseable."""
    match = _VERDICT_RE.search(text or "")
    if match is None:
        return None
    return "noncausal" if match.group(1).upper().startswith("NON") else "causal"


def sample_judge_frames(record: VideoRecord, max_frames: int = 16) -> list[np.ndarray]:
    """Up to max_frames uniformly spaced uint8 frames for the judge transport."""
    seq = decode(record, "forward")
    n = seq.num_frames
    idx = np.unique(np.round(np.linspace(0, n - 1, min(max_frames, n))).astype(int))
    return [(seq.frames[i] * 255).astype(np.uint8) for i in idx]


def encode_frames_png_b64(frames: list[np.ndarray]) -> list[str]:
    import cv2

    out = []
    for frame in frames:
        img = frame[..., 0] if frame.shape[-1] == 1 else cv2.cvtColor(frame, cv2.COLOR_RGB2BGR)
        ok, buf = cv2.imencode(".png", img)
        if not ok:
            raise PartitionError("failed to encode a judge frame as PNG")
        out.append(base64.b64encode(buf.tobytes()).decode("ascii"))
    return out


class HttpVlmClient:
    """Generic HTTP judge: POSTs the prompt plus base64 frames, expects text back.

    The API key is read from the YOCAUSAL_VLM_KEY environment variable and sent
    as a bearer token. Transient transport failures retry with backoff.
    """

    def __init__(self, endpoint: str, judge_id: str, timeout: float = 60.0, retries: int = 3):
        self.endpoint = endpoint
        self.judge_id = judge_id
        self.timeout = timeout
        self.retries = retries

    def __call__(self, prompt: str, frames: list[np.ndarray]) -> str:
        import os

        import httpx

        key = os.environ.get(VLM_KEY_ENV, "")
        headers = {"Authorization": f"Bearer {key}"} if key else {}
        payload = {
            "judge_id": self.judge_id,
            "prompt": prompt,
            "images": encode_frames_png_b64(frames),
        }
        delay = 0.5
        last_exc: Exception | None = None
        for _ in range(self.retries):
            try:
                resp = httpx.post(self.endpoint, json=payload, headers=headers, timeout=self.timeout)
                if resp.status_code >= 500:
                    raise PartitionError(f"judge endpoint returned {resp.status_code}")
                resp.raise_for_status()
                body = resp.json()
                if "text" in body:
                    return str(body["text"])
                if "choices" in body:  # OpenAI-style shape
                    return str(body["choices"][0]["message"]["content"])
                raise PartitionError(f"judge response has no recognizable text field: {body!r}")
            except (PartitionError, Exception) as exc:  # noqa: BLE001 - retried, then surfaced
                last_exc = exc
                time.sleep(delay)
                delay *= 2
        raise PartitionError(f"judge transport failed after {self.retries} attempts: {last_exc}")


class LabelCache:
    """File-backed label cache keyed by (video_id, source).

    The on-disk form is an append-only line-delimited file; persistence
    rewrites it atomically (temp file then rename) with prior lines preserved
    in order.
    """

    def __init__(self, path):
        self.path = Path(path)
        self._lock = threading.Lock()
        self._labels: dict[tuple[str, str], CausalLabel] = {}
        self._order: list[tuple[str, str]] = []
        if self.path.exists():
            for obj in read_lines(self.path):
                label = CausalLabel.from_dict(obj)
                key = (label.video_id, label.source)
                if key not in self._labels:
                    self._order.append(key)
                self._labels[key] = label

    def get(self, video_id: str, source: str) -> CausalLabel | None:
        with self._lock:
            return self._labels.get((video_id, source))

    def put(self, label: CausalLabel) -> None:
        with self._lock:
            key = (label.video_id, label.source)
            if key not in self._labels:
                self._order.append(key)
            self._labels[key] = label
            write_lines(self.path, (self._labels[k].to_dict() for k in self._order))

    def labels_from(self, source: str) -> list[CausalLabel]:
        with self._lock:
            return [self._labels[k] for k in self._order if k[1] == source]


def judge_video(
    record: VideoRecord,
    judge: Callable[[str, list[np.ndarray]], str],
    judge_id: str,
    cache: LabelCache | None = None,
    prompt: str = DEFAULT_PROMPT,
    max_frames: int = 16,
) -> CausalLabel:
    """Label one video, consulting the cache first.

    An unparseable response becomes an abstention (the video will sit in
    neither partition) with a warning rather than an error: one flaky judge
    reply should not kill a long labeling run.
    """
    if cache is not None:
        hit = cache.get(record.video_id, judge_id)
        if hit is not None:
            return hit
    frames = sample_judge_frames(record, max_frames=max_frames)
    raw = judge(prompt, frames)
    verdict = parse_verdict(raw)
    if verdict is None:
        warnings.warn(
            f"judge '{judge_id}' gave an unparseable response for video "
            f"'{record.video_id}'; recorded as abstention"
        )
        verdict = "abstain"
    label = CausalLabel(
        video_id=record.video_id,
        label=verdict,
        source=judge_id,
        raw_response=raw,
        timestamp=time.time(),
    )
    if cache is not None:
        cache.put(label)
    return label


def judge_records(
    records: list[VideoRecord],
    judge: Callable[[str, list[np.ndarray]], str],
    judge_id: str,
    cache: LabelCache | None = None,
    prompt: str = DEFAULT_PROMPT,
    max_frames: int = 16,
    max_workers: int = 4,
    min_interval_s: float = 0.0,
) -> list[CausalLabel]:
    """Label a batch in parallel under a concurrency cap and rate limiter."""
    from concurrent.futures import ThreadPoolExecutor

    gate = threading.Lock()
    last_launch = [0.0]

    def one(record: VideoRecord) -> CausalLabel:
        if min_interval_s > 0:
            with gate:
                wait = last_launch[0] + min_interval_s - time.monotonic()
                if wait > 0:
                    time.sleep(wait)
                last_launch[0] = time.monotonic()
        return judge_video(record, judge, judge_id, cache=cache, prompt=prompt, max_frames=max_frames)

    if max_workers <= 1:
        return [one(r) for r in records]
    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        return list(pool.map(one, records))


def partition_dataset(labels: list[CausalLabel]) -> tuple[set[str], set[str]]:
    """Split labeled ids into (causal, noncausal); abstentions in neither."""
    sources = {lab.source for lab in labels}
    if len(sources) > 1:
        raise PartitionError(f"labels mix sources {sorted(sources)}; partition from a single source")
    seen: dict[str, str] = {}
    causal: set[str] = set()
    noncausal: set[str] = set()
    for lab in labels:
        if lab.video_id in seen and seen[lab.video_id] != lab.label:
            raise PartitionError(
                f"conflicting labels for video '{lab.video_id}': "
                f"{seen[lab.video_id]} vs {lab.label}"
            )
        seen[lab.video_id] = lab.label
        if lab.label == "causal":
            causal.add(lab.video_id)
        elif lab.label == "noncausal":
            noncausal.add(lab.video_id)
    return causal, noncausal


def labels_as_map(labels: list[CausalLabel]) -> dict[str, str]:
    return {lab.video_id: lab.label for lab in labels}


@dataclass
class AgreementStats:
    confusion: dict[str, int]  # tp, fp, fn, tn with "causal" as positive
    f1: float
    kendall_tau_rankings: float | None
    cohens_d_motion: float | None

    @property
    def n(self) -> int:
        return sum(self.confusion.values())


def cohens_d(group_a: list[float], group_b: list[float]) -> float:
    """Standardized mean difference with Bessel-corrected pooled deviation.

    Positive when group_a has the larger mean.
    """
    a = np.asarray(group_a, dtype=np.float64)
    b = np.asarray(group_b, dtype=np.float64)
    if len(a) < 2 or len(b) < 2:
        raise PartitionError("Cohen's d needs at least 2 samples per group")
    pooled_var = ((len(a) - 1) * a.var(ddof=1) + (len(b) - 1) * b.var(ddof=1)) / (len(a) + len(b) - 2)
    diff = float(a.mean() - b.mean())
    if pooled_var == 0.0:
        return 0.0 if diff == 0.0 else float("inf") * np.sign(diff)
    return diff / float(np.sqrt(pooled_var))


def agreement_stats(
    judge_labels: dict[str, str],
    reference_labels: dict[str, str],
    model_rankings: tuple[dict[str, float], dict[str, float]] | None = None,
    motion_magnitude: dict[str, float] | None = None,
) -> AgreementStats:
    """Judge-vs-reference reliability statistics.

    The confusion matrix and F1 treat "causal" as the positive class over the
    compared video set. model_rankings, when given, holds the model ranking
    induced by the judge split and by the reference split; their tau-b is the
    ranking-stability statistic. motion_magnitude (per-video mean flow
    magnitude) yields Cohen's d between the judge's two partitions.
    """
    common = sorted(set(judge_labels) & set(reference_labels))
    common = [v for v in common if judge_labels[v] != "abstain" and reference_labels[v] != "abstain"]
    if not common:
        raise PartitionError("judge and reference label sets share no videos")
    tp = fp = fn = tn = 0
    for vid in common:
        j_causal = judge_labels[vid] == "causal"
        r_causal = reference_labels[vid] == "causal"
        if j_causal and r_causal:
            tp += 1
        elif j_causal:
            fp += 1
        elif r_causal:
            fn += 1
        else:
            tn += 1
    f1 = tp / (tp + 0.5 * (fp + fn)) if (tp + fp + fn) else 1.0

    tau = None
    if model_rankings is not None:
        try:
            tau = kendall_tau(model_rankings[0], model_rankings[1])
        except UndefinedStatisticError:
            warnings.warn("ranking-agreement tau-b undefined (fully tied ranking)")

    d = None
    if motion_magnitude is not None:
        causal_m = [motion_magnitude[v] for v in judge_labels if judge_labels[v] == "causal" and v in motion_magnitude]
        noncausal_m = [
            motion_magnitude[v] for v in judge_labels if judge_labels[v] == "noncausal" and v in motion_magnitude
        ]
        d = cohens_d(causal_m, noncausal_m)

    return AgreementStats(
        confusion={"tp": tp, "fp": fp, "fn": fn, "tn": tn},
        f1=f1,
        kendall_tau_rankings=tau,
        cohens_d_motion=d,
    )


def write_labels(path, labels: list[CausalLabel]) -> None:
    write_lines(Path(path), (lab.to_dict() for lab in labels))


def load_labels(path) -> list[CausalLabel]:
    return [CausalLabel.from_dict(obj) for obj in read_lines(Path(path))]
