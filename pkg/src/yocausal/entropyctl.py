"""Motion-magnitude trajectories and the entropy-symmetry control subset.

Motion magnitude serves as an entropy proxy. For each video we compute one
mean displacement magnitude per consecutive frame pair, score how asymmetric
that trajectory is under reversal, and retain the lowest-asymmetry fraction
as a control subset on which the reverse-surprise score is recomputed.

The reference flow estimator is a coarse-to-fine block matcher: no neural
weights, deterministic, adequate at desk scale. Externally computed magnitude
sequences can be ingested instead for fidelity runs.
"""

from dataclasses import dataclass
from pathlib import Path

import numpy as np

DEFAULT_SYMMETRIC_FRACTION = 0.30


class EntropyError(ValueError):
    pass


@dataclass
class FlowProfile:
    video_id: str
    magnitudes: np.ndarray  # pixels/frame, length num_frames - 1
    asymmetry: float | None  # None when the trajectory has zero norm

    @classmethod
    def from_magnitudes(cls, video_id: str, magnitudes) -> "FlowProfile":
        mags = np.asarray(magnitudes, dtype=np.float64)
        norm = float(np.linalg.norm(mags))
        asym = None if norm == 0.0 else asymmetry_score(mags)
        return cls(video_id=video_id, magnitudes=mags, asymmetry=asym)


def asymmetry_score(magnitudes) -> float:
    """||M - reverse(M)||_2 / ||M||_2; zero exactly when M is palindromic."""
    mags = np.asarray(magnitudes, dtype=np.float64)
    norm = float(np.linalg.norm(mags))
    if norm == 0.0:
        raise EntropyError("asymmetry undefined for a zero-norm magnitude sequence")
    return float(np.linalg.norm(mags - mags[::-1]) / norm)


class BlockMatchingFlow:
    """Coarse-to-fine block matching over a box-filtered image pyramid.

    Each level refines the upsampled coarser flow by searching a window of
    integer offsets per block; a candidate must strictly beat the inherited
    offset to replace it. Untextured blocks carry no evidence, so they take
    the mean flow of the textured blocks at their level (or keep the inherited
    flow when nothing at the level is textured).
    """

    def __init__(self, levels: int = 3, block_size: int = 8, search: int = 4, texture_eps: float = 1e-3):
        self.levels = levels
        self.block_size = block_size
        self.search = search
        self.texture_eps = texture_eps

    def _pyramid(self, img: np.ndarray) -> list[np.ndarray]:
        levels = [img]
        for _ in range(self.levels - 1):
            prev = levels[-1]
            h, w = prev.shape[0] // 2 * 2, prev.shape[1] // 2 * 2
            if h < self.block_size or w < self.block_size:
                break
            down = prev[:h, :w].reshape(h // 2, 2, w // 2, 2).mean(axis=(1, 3))
            levels.append(down)
        return levels[::-1]  # coarsest first

    def _match_level(self, f0: np.ndarray, f1: np.ndarray, init: np.ndarray) -> np.ndarray:
        h, w = f0.shape
        flow = init.copy()
        textured: list[tuple[slice, slice, float, float]] = []
        flat: list[tuple[slice, slice]] = []
        for by in range(0, h, self.block_size):
            for bx in range(0, w, self.block_size):
                ys = slice(by, min(by + self.block_size, h))
                xs = slice(bx, min(bx + self.block_size, w))
                block = f0[ys, xs]
                if float(block.max() - block.min()) <= self.texture_eps:
                    flat.append((ys, xs))
                    continue
                iy = int(round(float(init[ys, xs, 0].mean())))
                ix = int(round(float(init[ys, xs, 1].mean())))
                best_dy, best_dx, best_cost = self._search_block(f0, f1, ys, xs, iy, ix)
                flow[ys, xs, 0] = best_dy
                flow[ys, xs, 1] = best_dx
                textured.append((ys, xs, best_dy, best_dx))
        if textured and flat:
            fill_dy = float(np.mean([t[2] for t in textured]))
            fill_dx = float(np.mean([t[3] for t in textured]))
            for ys, xs in flat:
                flow[ys, xs, 0] = fill_dy
                flow[ys, xs, 1] = fill_dx
        return flow

    def _search_block(self, f0, f1, ys, xs, init_dy, init_dx):
        h, w = f0.shape
        block = f0[ys, xs]
        bh, bw = block.shape

        def cost_at(dy, dx):
            y0, x0 = ys.start + dy, xs.start + dx
            if y0 < 0 or x0 < 0 or y0 + bh > h or x0 + bw > w:
                return None
            window = f1[y0 : y0 + bh, x0 : x0 + bw]
            return float(np.abs(block - window).sum())

        best_dy, best_dx = init_dy, init_dx
        best_cost = cost_at(init_dy, init_dx)
        if best_cost is None:
            best_cost = np.inf
        for dy in range(init_dy - self.search, init_dy + self.search + 1):
            for dx in range(init_dx - self.search, init_dx + self.search + 1):
                if (dy, dx) == (init_dy, init_dx):
                    continue
                cost = cost_at(dy, dx)
                if cost is not None and cost < best_cost:
                    best_cost = cost
                    best_dy, best_dx = dy, dx
        return best_dy, best_dx, best_cost

    def __call__(self, frame0: np.ndarray, frame1: np.ndarray) -> np.ndarray:
        """Per-pixel displacement field (H, W, 2) from frame0 to frame1."""
        if frame0.shape != frame1.shape:
            raise EntropyError("frame pair shapes differ")
        pyr0 = self._pyramid(frame0.astype(np.float64))
        pyr1 = self._pyramid(frame1.astype(np.float64))
        flow = np.zeros((*pyr0[0].shape, 2))
        for level, (p0, p1) in enumerate(zip(pyr0, pyr1)):
            if level > 0:
                flow = 2.0 * np.repeat(np.repeat(flow, 2, axis=0), 2, axis=1)
                flow = flow[: p0.shape[0], : p0.shape[1]]
                if flow.shape[:2] != p0.shape:
                    pad_y = p0.shape[0] - flow.shape[0]
                    pad_x = p0.shape[1] - flow.shape[1]
                    flow = np.pad(flow, ((0, pad_y), (0, pad_x), (0, 0)), mode="edge")
            flow = self._match_level(p0, p1, flow)
        return flow


def _to_gray(frames: np.ndarray) -> np.ndarray:
    if frames.ndim == 4:
        return frames.mean(axis=3)
    return frames


def flow_magnitudes(frames: np.ndarray, video_id: str, estimator: BlockMatchingFlow | None = None) -> FlowProfile:
    """One mean displacement magnitude per consecutive frame pair.

    The spatial reduction is the mean over pixels of the per-pixel
    displacement norm.
    """
    gray = _to_gray(np.asarray(frames, dtype=np.float64))
    if gray.shape[0] < 2:
        raise EntropyError("need at least 2 frames")
    estimator = estimator or BlockMatchingFlow()
    mags = []
    for i in range(gray.shape[0] - 1):
        field = estimator(gray[i], gray[i + 1])
        mags.append(float(np.sqrt((field**2).sum(axis=2)).mean()))
    return FlowProfile.from_magnitudes(video_id, mags)


def symmetric_subset(profiles: list[FlowProfile], fraction: float = DEFAULT_SYMMETRIC_FRACTION) -> list[str]:
    """Ids of the floor(fraction * N) lowest-asymmetry videos.

    N counts profiles with a defined asymmetry; zero-motion videos cannot be
    ranked and are never retained. Ties break on lexicographic video_id.
    """
    if not 0.0 < fraction <= 1.0:
        raise EntropyError("fraction must lie in (0, 1]")
    defined = [(p.asymmetry, p.video_id) for p in profiles if p.asymmetry is not None]
    if not defined:
        raise EntropyError("all profiles have undefined asymmetry")
    defined.sort()
    keep = int(len(defined) * fraction)
    return [vid for _, vid in defined[:keep]]


def write_flow_profiles(path, profiles: list[FlowProfile]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        for p in profiles:
            mags = ",".join(f"{m:.6g}" for m in p.magnitudes)
            fh.write(f"{p.video_id},{mags}\n")


def load_flow_profiles(path) -> list[FlowProfile]:
    """Ingest precomputed magnitude sequences: `video_id, m_1, ..., m_{F-1}` lines."""
    profiles = []
    with open(Path(path), encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) < 2:
                raise EntropyError(f"{path}:{lineno}: expected video_id plus magnitudes")
            profiles.append(FlowProfile.from_magnitudes(parts[0].strip(), [float(x) for x in parts[1:]]))
    return profiles
