"""Synthetic grayscale clips for desk-scale verification.

Four kinds with known temporal character:
  shatter    - a block falls and breaks apart on impact (irreversible, salient
               cause-effect event)
  smoke      - a blob diffuses outward (irreversible, no discrete event)
  drift      - constant-velocity translation with wraparound (near symmetric)
  palindrome - a half clip concatenated with its own reversal (exactly symmetric)

Clips are uint8 (T, H, W) arrays, deterministic given the seed.
"""

from pathlib import Path

import numpy as np

from ..catalog import Catalog, SubsetManifest, VideoRecord
from ..seeding import derive_seed

KINDS = ("shatter", "smoke", "drift", "palindrome")
DEFAULT_FRAMES = 16
DEFAULT_SIZE = 32
TOY_FPS = 8.0


def _fragments_connected(a: tuple[int, int], b: tuple[int, int]) -> bool:
    # 2x2 fragments are 8-connected while their integer anchors are within 2.
    return max(abs(a[0] - b[0]), abs(a[1] - b[1])) <= 2


def _gen_shatter(rng: np.random.Generator, frames: int, size: int) -> np.ndarray:
    clip = np.zeros((frames, size, size), dtype=np.uint8)
    bw, bh = 6, 5
    x0 = int(rng.integers(8, size - bw - 8))
    y0 = int(rng.integers(1, 4))
    g = float(rng.uniform(1.1, 1.7))
    floor = size - 2

    impact_frame = frames
    ys = []
    for t in range(frames):
        y = y0 + 0.5 * g * t * t
        if y + bh >= floor:
            impact_frame = t
            break
        ys.append(int(round(y)))

    for t, y in enumerate(ys):
        clip[t, y : y + bh, x0 : x0 + bw] = 255

    # Fragments fly outward along well-separated rays from the impact point at
    # a common radial speed, capped so nothing leaves the frame. Exiting or
    # re-touching fragments would break the monotone fragment-count property,
    # so once a pair has separated an enforcement pass keeps it separated.
    n_frag = int(rng.integers(4, 7))
    cx, cy = x0 + bw / 2.0, float(floor - 2)
    base = np.linspace(np.pi * 0.1, np.pi * 0.9, n_frag)
    angles = base + rng.uniform(-0.06, 0.06, size=n_frag)
    rays = [(float(np.cos(a)), float(-np.sin(a))) for a in angles]
    remaining = max(1, frames - impact_frame)
    limits = [_ray_limit(cx, cy, ux, uy, size) for ux, uy in rays]
    speed = min(float(rng.uniform(1.1, 1.7)), (min(limits) - 3.0) / remaining)
    speed = max(speed, 0.5)

    def clamp_pos(px: float, py: float) -> tuple[int, int]:
        return int(np.clip(round(py), 1, size - 3)), int(np.clip(round(px), 1, size - 3))

    separated: set[tuple[int, int]] = set()
    for t in range(impact_frame, frames):
        dt = t - impact_frame
        radius = 1.0 + speed * dt
        pos = [clamp_pos(cx + ux * radius, cy + uy * radius) for ux, uy in rays]
        for _ in range(6 * n_frag):  # bounded enforcement of past separations
            violation = None
            for i in range(n_frag):
                for j in range(i + 1, n_frag):
                    if (i, j) in separated and _fragments_connected(pos[i], pos[j]):
                        violation = (i, j)
                        break
                if violation:
                    break
            if violation is None:
                break
            i, j = violation
            ux, uy = rays[j]
            pos[j] = clamp_pos(pos[j][1] + np.sign(ux) + ux, pos[j][0] + np.sign(uy) + uy)
        for i in range(n_frag):
            for j in range(i + 1, n_frag):
                if not _fragments_connected(pos[i], pos[j]):
                    separated.add((i, j))
        for iy, ix in pos:
            clip[t, iy : iy + 2, ix : ix + 2] = 255
    return clip


def _ray_limit(cx: float, cy: float, ux: float, uy: float, size: int) -> float:
    """Distance from (cx, cy) to the frame border along direction (ux, uy)."""
    limit = float(size)
    for pos, u, hi in ((cx, ux, size - 3.0), (cy, uy, size - 3.0)):
        if u > 1e-9:
            limit = min(limit, (hi - pos) / u)
        elif u < -1e-9:
            limit = min(limit, (1.0 - pos) / u)
    return max(limit, 1.0)


_BLUR_1D = np.array([1.0, 2.0, 1.0]) / 4.0


def _blur(img: np.ndarray) -> np.ndarray:
    padded = np.pad(img, 1, mode="constant")
    h = padded[:, :-2] * _BLUR_1D[0] + padded[:, 1:-1] * _BLUR_1D[1] + padded[:, 2:] * _BLUR_1D[2]
    return h[:-2] * _BLUR_1D[0] + h[1:-1] * _BLUR_1D[1] + h[2:] * _BLUR_1D[2]


def _gen_smoke(rng: np.random.Generator, frames: int, size: int) -> np.ndarray:
    field = np.zeros((size, size), dtype=np.float64)
    cx = int(rng.integers(12, size - 12))
    cy = int(rng.integers(12, size - 12))
    field[cy - 3 : cy + 4, cx - 3 : cx + 4] = 240.0
    clip = np.zeros((frames, size, size), dtype=np.uint8)
    for t in range(frames):
        clip[t] = np.clip(np.round(field), 0, 255).astype(np.uint8)
        field = _blur(field)
    return clip


def _gen_texture(rng: np.random.Generator, size: int) -> np.ndarray:
    noise = rng.uniform(0.0, 1.0, size=(size, size))
    smooth = _blur(_blur(noise))
    smooth = (smooth - smooth.min()) / max(1e-9, smooth.max() - smooth.min())
    return (smooth * 255).astype(np.uint8)


def _gen_drift(rng: np.random.Generator, frames: int, size: int) -> np.ndarray:
    pattern = _gen_texture(rng, size)
    vx = int(rng.choice([-3, -2, -1, 1, 2, 3]))
    vy = int(rng.choice([-2, -1, 0, 1, 2]))
    clip = np.zeros((frames, size, size), dtype=np.uint8)
    for t in range(frames):
        clip[t] = np.roll(pattern, shift=(t * vy, t * vx), axis=(0, 1))
    return clip


def _gen_palindrome(rng: np.random.Generator, frames: int, size: int) -> np.ndarray:
    half = frames // 2
    base_kind = rng.choice(["smoke", "drift"])
    base = _gen_smoke(rng, half, size) if base_kind == "smoke" else _gen_drift(rng, half, size)
    return np.concatenate([base, base[::-1]], axis=0)


_GENERATORS = {
    "shatter": _gen_shatter,
    "smoke": _gen_smoke,
    "drift": _gen_drift,
    "palindrome": _gen_palindrome,
}

CAPTIONS = {
    "shatter": "a block falls and shatters into scattering fragments",
    "smoke": "a puff of smoke spreads slowly outward",
    "drift": "a textured pattern drifts steadily across the frame",
    "palindrome": "a pattern moves and then retraces its motion exactly",
}


def toy_generate(kind: str, n: int, seed: int, frames: int = DEFAULT_FRAMES, size: int = DEFAULT_SIZE) -> list[np.ndarray]:
    """Generate n clips of one kind; clip i depends only on (seed, kind, i)."""
    if kind not in _GENERATORS:
        raise ValueError(f"unknown synthetic kind {kind!r}; expected one of {KINDS}")
    if n < 1:
        raise ValueError("n must be >= 1")
    gen = _GENERATORS[kind]
    out = []
    for i in range(n):
        rng = np.random.default_rng(derive_seed("toy", seed, kind, i))
        out.append(gen(rng, frames, size))
    return out


def write_toy_subset(
    out_dir,
    kind: str,
    n: int,
    seed: int,
    subset_id: str | None = None,
    frames: int = DEFAULT_FRAMES,
    size: int = DEFAULT_SIZE,
) -> tuple[SubsetManifest, list[VideoRecord]]:
    """Materialize a synthetic subset as .npy files plus catalog records."""
    subset_id = subset_id or kind
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    clips = toy_generate(kind, n, seed, frames=frames, size=size)
    subset = SubsetManifest(subset_id=subset_id, display_name=subset_id.title(), intended_clip_seconds=frames / TOY_FPS)
    records = []
    for i, clip in enumerate(clips):
        video_id = f"{subset_id}-{i:04d}"
        path = out_dir / f"{video_id}.npy"
        np.save(path, clip)
        rec = VideoRecord(
            video_id=video_id,
            subset_id=subset_id,
            uri=str(path),
            caption=CAPTIONS[kind],
            duration_s=frames / TOY_FPS,
            fps_native=TOY_FPS,
            num_frames=frames,
            width=size,
            height=size,
        )
        subset.record_ids.append(video_id)
        records.append(rec)
    return subset, records


def build_toy_catalog(out_dir, spec: dict[str, tuple[str, int]], seed: int) -> Catalog:
    """spec maps subset_id -> (kind, n)."""
    subsets, records = [], []
    for subset_id, (kind, n) in spec.items():
        sub, recs = write_toy_subset(
            Path(out_dir) / subset_id, kind, n, derive_seed("subset", seed, subset_id), subset_id=subset_id
        )
        subsets.append(sub)
        records.extend(recs)
    return Catalog(subsets=subsets, records=records)
