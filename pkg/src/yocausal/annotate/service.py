"""HTTP service for the two human studies.

Direction study: an annotator reads the clip's prompt, watches the forward and
reversed versions sequentially in a randomized, seeded slot order, and answers
which slot held the reversed clip (or Unknown). The true-forward slot is
recomputable server-side and never crosses the wire before submission; clip
URLs are opaque tokens.

Preference study: each annotator ranks the candidate clips of their assigned
prompt groups, ties allowed, validated against the consecutive-positions tie
rule before persisting.
"""

import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..aggregate import AggregateError, PreferenceRanking, validate_tie_structure
from ..catalog import Catalog, decode
from ..seeding import derive_seed
from .assignment import AssignmentPlan
from .records import DEFAULT_REPLAY_LIMIT, DirectionJudgment
from .store import AnnotationStore, DuplicateSubmission


@dataclass
class RankingGroup:
    prompt_id: str
    prompt: str
    candidates: dict[str, str]  # model_id -> clip file path


@dataclass
class ServiceConfig:
    data_dir: str
    catalog: Catalog
    seed: int = 0
    replay_limit: int = DEFAULT_REPLAY_LIMIT
    ranking_groups: list[RankingGroup] = field(default_factory=list)
    plan: AssignmentPlan | None = None


def forward_slot(seed: int, annotator_id: str, video_id: str) -> str:
    """Which slot (A/B) holds the true forward clip; seeded per (annotator, video)."""
    return "A" if derive_seed("slot", seed, annotator_id, video_id) % 2 == 0 else "B"


def _clip_token(seed: int, *parts) -> str:
    return format(derive_seed("clip", seed, *parts), "016x")


def encode_clip_file(frames: np.ndarray, fps: float, out_path: Path) -> Path:
    """Write float [0,1] frames as an mp4 the browser can play."""
    import cv2

    out_path.parent.mkdir(parents=True, exist_ok=True)
    t, h, w = frames.shape[0], frames.shape[1], frames.shape[2]
    tmp = out_path.with_suffix(".tmp.mp4")
    writer = cv2.VideoWriter(str(tmp), cv2.VideoWriter_fourcc(*"mp4v"), max(1.0, fps), (w, h))
    if not writer.isOpened():
        raise RuntimeError("cv2 VideoWriter could not open an mp4 stream")
    try:
        for i in range(t):
            img = (frames[i] * 255).astype(np.uint8)
            if img.shape[-1] == 1:
                img = np.repeat(img, 3, axis=2)
            writer.write(cv2.cvtColor(img, cv2.COLOR_RGB2BGR))
    finally:
        writer.release()
    tmp.replace(out_path)
    return out_path


def create_app(config: ServiceConfig):
    from fastapi import FastAPI, HTTPException
    from fastapi.responses import FileResponse, PlainTextResponse

    app = FastAPI(title="yocausal annotation service")
    store = AnnotationStore(config.data_dir)
    clips_dir = Path(config.data_dir) / "clips"
    videos = sorted(config.catalog.records, key=lambda r: r.video_id)
    groups = {g.prompt_id: g for g in config.ranking_groups}

    # token -> ("direction", video_id, direction) | ("file", path)
    clip_map: dict[str, tuple] = {}
    for rec in videos:
        for direction in ("forward", "reversed"):
            clip_map[_clip_token(config.seed, rec.video_id, direction)] = ("direction", rec.video_id, direction)
    for g in config.ranking_groups:
        for model_id, uri in g.candidates.items():
            clip_map[_clip_token(config.seed, "rank", g.prompt_id, model_id)] = ("file", uri)

    def direction_task_payload(annotator_id: str, rec) -> dict:
        slot_forward = forward_slot(config.seed, annotator_id, rec.video_id)
        tok_f = _clip_token(config.seed, rec.video_id, "forward")
        tok_r = _clip_token(config.seed, rec.video_id, "reversed")
        clip_a, clip_b = (tok_f, tok_r) if slot_forward == "A" else (tok_r, tok_f)
        return {
            "video_id": rec.video_id,
            "prompt": rec.caption,
            "clip_a": f"/api/clip/{clip_a}",
            "clip_b": f"/api/clip/{clip_b}",
            "replay_limit": config.replay_limit,
        }

    @app.get("/api/session")
    def session(annotator_id: str):
        judged = store.judged_videos(annotator_id)
        assigned = config.plan.assignments.get(annotator_id, []) if config.plan else []
        ranked = store.ranked_prompts(annotator_id)
        return {
            "annotator_id": annotator_id,
            "replay_limit": config.replay_limit,
            "direction_total": len(videos),
            "direction_remaining": len(videos) - len(judged),
            "ranking_total": len(assigned),
            "ranking_remaining": len([p for p in assigned if p not in ranked]),
        }

    @app.get("/api/direction/next")
    def direction_next(annotator_id: str, skip: int = 0):
        judged = store.judged_videos(annotator_id)
        pending = [r for r in videos if r.video_id not in judged]
        if not pending:
            return {"done": True, "remaining": 0}
        rec = pending[min(max(0, skip), len(pending) - 1)]
        payload = direction_task_payload(annotator_id, rec)
        payload.update({"done": False, "remaining": len(pending)})
        return payload

    @app.post("/api/direction/judgment")
    def direction_judgment(body: dict):
        try:
            annotator_id = str(body["annotator_id"])
            video_id = str(body["video_id"])
            choice = str(body["choice"])
            replays_a = int(body.get("replays_a", 0))
            replays_b = int(body.get("replays_b", 0))
        except (KeyError, TypeError, ValueError) as exc:
            raise HTTPException(status_code=422, detail=f"malformed judgment: {exc}")
        try:
            rec = config.catalog.record(video_id)
        except KeyError:
            raise HTTPException(status_code=404, detail=f"no open task: unknown video '{video_id}'")
        if store.has_judgment(annotator_id, video_id):
            raise HTTPException(status_code=409, detail="duplicate submission for this task")
        judgment = DirectionJudgment(
            annotator_id=annotator_id,
            video_id=video_id,
            shown_order=forward_slot(config.seed, annotator_id, video_id),
            choice=choice,
            replays_a=replays_a,
            replays_b=replays_b,
            prompt_shown=rec.caption,
            timestamp=time.time(),
        )
        try:
            judgment.validate(replay_limit=config.replay_limit)
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        store.add_judgment(judgment)
        return {"status": "accepted"}

    @app.get("/api/ranking/next")
    def ranking_next(annotator_id: str):
        if config.plan is None:
            return {"done": True, "remaining": 0}
        assigned = config.plan.assignments.get(annotator_id, [])
        ranked = store.ranked_prompts(annotator_id)
        pending = [p for p in assigned if p not in ranked]
        if not pending:
            return {"done": True, "remaining": 0}
        group = groups[pending[0]]
        candidates = [
            {"model_id": m, "clip": f"/api/clip/{_clip_token(config.seed, 'rank', group.prompt_id, m)}"}
            for m in sorted(group.candidates)
        ]
        return {
            "done": False,
            "remaining": len(pending),
            "prompt_id": group.prompt_id,
            "prompt": group.prompt,
            "candidates": candidates,
            "n_candidates": len(candidates),
            # 32-bit so JS number arithmetic reproduces the same shuffle
            "display_seed": derive_seed("display", config.seed, annotator_id, group.prompt_id) % (2**32),
        }

    @app.post("/api/ranking")
    def ranking_submit(body: dict):
        try:
            annotator_id = str(body["annotator_id"])
            prompt_id = str(body["prompt_id"])
            ranks = {str(k): int(v) for k, v in body["ranks"].items()}
        except (KeyError, TypeError, ValueError, AttributeError) as exc:
            raise HTTPException(status_code=422, detail=f"malformed ranking: {exc}")
        if prompt_id not in groups:
            raise HTTPException(status_code=404, detail=f"unknown prompt group '{prompt_id}'")
        if config.plan is not None and prompt_id not in config.plan.assignments.get(annotator_id, []):
            raise HTTPException(status_code=403, detail="prompt group not assigned to this annotator")
        if store.has_ranking(annotator_id, prompt_id):
            raise HTTPException(status_code=409, detail="duplicate submission for this prompt group")
        expected = set(groups[prompt_id].candidates)
        missing = expected - set(ranks)
        if missing:
            raise HTTPException(status_code=400, detail=f"missing candidates: {sorted(missing)}")
        extra = set(ranks) - expected
        if extra:
            raise HTTPException(status_code=400, detail=f"unknown candidates: {sorted(extra)}")
        try:
            validate_tie_structure(ranks, n_candidates=len(expected))
        except AggregateError as exc:
            raise HTTPException(status_code=400, detail=f"invalid tie structure: {exc}")
        try:
            store.add_ranking(PreferenceRanking(annotator_id=annotator_id, prompt_id=prompt_id, ranks=ranks))
        except DuplicateSubmission as exc:
            raise HTTPException(status_code=409, detail=str(exc))
        return {"status": "accepted"}

    @app.get("/api/export/{kind}")
    def export(kind: str):
        try:
            return PlainTextResponse(store.export(kind))
        except ValueError as exc:
            raise HTTPException(status_code=404, detail=str(exc))

    @app.get("/api/clip/{token}")
    def clip(token: str):
        entry = clip_map.get(token)
        if entry is None:
            raise HTTPException(status_code=404, detail="unknown clip handle")
        if entry[0] == "file":
            path = Path(entry[1])
            if path.suffix.lower() in (".mp4", ".webm", ".mov", ".gif"):
                return FileResponse(path)
            cached = clips_dir / f"{token}.mp4"
            if not cached.exists():
                from ..catalog import _decode_media_file, _to_unit_float

                frames = _to_unit_float(_decode_media_file(path))
                encode_clip_file(frames, 8.0, cached)
            return FileResponse(cached, media_type="video/mp4")
        _, video_id, direction = entry
        cached = clips_dir / f"{token}.mp4"
        if not cached.exists():
            rec = config.catalog.record(video_id)
            seq = decode(rec, direction)
            encode_clip_file(seq.frames, rec.fps_native, cached)
        return FileResponse(cached, media_type="video/mp4")

    app.state.store = store
    app.state.config = config
    return app


def run_service(config: ServiceConfig, host: str = "127.0.0.1", port: int = 8710):
    import uvicorn

    uvicorn.run(create_app(config), host=host, port=port, log_level="warning")
