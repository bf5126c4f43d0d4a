"""Forward/reversed denoising-loss probe.

For each video, K timesteps are spaced uniformly over the open interior of the
model's diffusion schedule; at each (timestep, draw) the same content-addressed
seed goes to the adapter for the forward and the reversed sequence, so both
face identical noise. The reversed sequence is the preprocessed forward pixel
frames in reverse order, guaranteeing both directions carry the same frame
multiset through the same window plan.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .. import catalog as cat
from ..preprocess import ModelSpec, plan_windows, preprocess_sequence
from ..seeding import noise_seed
from .adapters import AdapterContractError, AdapterError, DenoiserAdapter
from .records import LossRecord, PairOutcome, ProbeConfig, make_outcome


class ProbeError(RuntimeError):
    pass


def sample_timesteps(config: ProbeConfig, T: int) -> list[int]:
    """K timesteps uniformly spaced inside (0, T), boundaries excluded.

    Deterministic spacing (no random draws) removes evaluation variance when
    only one noise draw per timestep is affordable.
    """
    if T <= config.K:
        raise ProbeError(f"schedule too coarse: T={T} must exceed K={config.K}")
    lo = T * config.t_exclusion
    span = T * (1.0 - 2.0 * config.t_exclusion)
    steps = []
    for k in range(config.K):
        t = int(round(lo + span * (k + 1) / (config.K + 1)))
        steps.append(min(T - 1, max(1, t)))
    return steps


@dataclass
class ProbeResult:
    outcome: PairOutcome
    forward: LossRecord
    reversed: LossRecord


def _direction_loss(
    adapter: DenoiserAdapter,
    frames: np.ndarray,
    plan,
    timesteps: list[int],
    config: ProbeConfig,
    video_id: str,
    prompt: str,
    direction: str,
) -> LossRecord:
    T = adapter.spec.diffusion_steps_T
    masks = []
    weights = []
    for w in plan.windows:
        mask = [i >= w.context_prefix_len for i in range(w.length)]
        masks.append((w, mask))
        weights.append(w.length - w.context_prefix_len)
    total_counted = float(sum(weights))

    fracs: list[float] = []
    losses: list[float] = []
    first_call: tuple | None = None
    for k_idx, t in enumerate(timesteps):
        for draw in range(config.n_noise):
            seed = noise_seed(config.base_seed, video_id, k_idx, draw)
            acc = 0.0
            for (w, mask), weight in zip(masks, weights):
                window_frames = frames[w.start : w.end]
                try:
                    loss = adapter.denoising_loss(window_frames, t, seed, prompt, mask)
                except AdapterError as exc:
                    raise ProbeError(f"adapter failed on video '{video_id}' at timestep {t}: {exc}") from exc
                if not np.isfinite(loss) or loss < 0:
                    raise ProbeError(
                        f"adapter returned invalid loss {loss!r} on video '{video_id}' at timestep {t}"
                    )
                acc += loss * weight
                if first_call is None:
                    first_call = (window_frames, t, seed, mask, loss)
            fracs.append(t / T)
            losses.append(acc / total_counted)

    if config.check_determinism and first_call is not None:
        window_frames, t, seed, mask, loss = first_call
        again = adapter.denoising_loss(window_frames, t, seed, prompt, mask)
        if again != loss:
            raise AdapterContractError(
                f"adapter is nondeterministic on video '{video_id}' at timestep {t}: "
                f"{loss!r} != {again!r}"
            )

    return LossRecord(
        video_id=video_id,
        model_id=adapter.spec.model_id,
        direction=direction,
        timestep_fracs=fracs,
        per_timestep_loss=losses,
        mean_loss=float(np.mean(losses)),
        window_count=len(plan.windows),
    )


def probe_pair(
    record: cat.VideoRecord,
    adapter: DenoiserAdapter,
    config: ProbeConfig,
    frames: np.ndarray | None = None,
) -> ProbeResult:
    """Probe one video in both temporal directions under identical noise.

    `frames` may carry already-preprocessed forward pixel frames (from the
    preprocess stage cache); otherwise the record is decoded and adapted here.
    """
    if config.prompt_mode == "caption":
        if not record.caption:
            raise ProbeError(f"video '{record.video_id}' has an empty caption but prompt_mode=caption")
        prompt = record.caption
    else:
        prompt = ""

    if frames is None:
        seq = cat.decode(record, "forward")
        seq = preprocess_sequence(seq, adapter.spec, record.fps_native)
        frames = seq.frames
    frames = np.ascontiguousarray(frames, dtype=np.float32)

    timesteps = sample_timesteps(config, adapter.spec.diffusion_steps_T)
    plan = plan_windows(frames.shape[0], adapter.spec.frame_window)

    fwd = _direction_loss(adapter, frames, plan, timesteps, config, record.video_id, prompt, "forward")
    rev_frames = np.ascontiguousarray(frames[::-1])
    rev = _direction_loss(adapter, rev_frames, plan, timesteps, config, record.video_id, prompt, "reversed")

    outcome = make_outcome(record.video_id, fwd.mean_loss, rev.mean_loss)
    return ProbeResult(outcome=outcome, forward=fwd, reversed=rev)


def probe_records(
    records: list[cat.VideoRecord],
    adapter: DenoiserAdapter,
    config: ProbeConfig,
    frames_loader=None,
    workers: int = 1,
    on_result=None,
) -> list[ProbeResult]:
    """Probe a batch of videos; safe to parallelize since seeds are content-addressed.

    frames_loader(video_id) -> preprocessed frames or None lets callers feed a
    per-video cache without holding every video in memory at once.
    """

    def one(record: cat.VideoRecord) -> ProbeResult:
        cached = frames_loader(record.video_id) if frames_loader else None
        result = probe_pair(record, adapter, config, frames=cached)
        if on_result is not None:
            on_result(result)
        return result

    if workers <= 1:
        return [one(r) for r in records]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(one, records))
