"""Built-in pixel-space toy diffusion model.

A small spatiotemporal epsilon-prediction denoiser trained with the standard
DDPM objective on forward-direction clips. A class-label embedding stands in
for the text prompt (the null prompt maps to an exact zero embedding). Big
enough to internalize the toy dynamics, small enough to train on a CPU.
"""

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F

from ..preprocess import ModelSpec, ResolutionMode
from .adapters import AdapterError, DenoiserAdapter
from .synthetic import DEFAULT_FRAMES, DEFAULT_SIZE, TOY_FPS


class ToyTrainError(RuntimeError):
    pass


def toy_model_spec(model_id: str = "toy-ddpm", frames: int = DEFAULT_FRAMES, size: int = DEFAULT_SIZE) -> ModelSpec:
    return ModelSpec(
        model_id=model_id,
        family="toy",
        params_billions=3e-4,
        release_date="2025-01-01",
        operating_space="pixel",
        resolution_mode=ResolutionMode(mode="fixed", sizes=((size, size),)),
        frame_window=frames,
        target_fps=TOY_FPS,
        diffusion_steps_T=1000,
    )


def _sinusoidal_embedding(t: torch.Tensor, dim: int) -> torch.Tensor:
    half = dim // 2
    freqs = torch.exp(-math.log(10000.0) * torch.arange(half, dtype=torch.float32) / half)
    args = t[:, None].float() * freqs[None, :]
    return torch.cat([torch.sin(args), torch.cos(args)], dim=-1)


class _FilmBlock(nn.Module):
    def __init__(self, channels: int, emb_dim: int):
        super().__init__()
        self.conv = nn.Conv3d(channels, channels, kernel_size=3, padding=1)
        self.norm = nn.GroupNorm(4, channels)
        self.film = nn.Linear(emb_dim, 2 * channels)

    def forward(self, x, emb):
        h = self.norm(self.conv(x))
        scale, shift = self.film(emb)[:, :, None, None, None].chunk(2, dim=1)
        return F.silu(h * (1 + scale) + shift) + x


class ToyDenoiser(nn.Module):
    """Patchified 3D conv net predicting the injected noise."""

    def __init__(self, num_classes: int, width: int = 16, blocks: int = 3, emb_dim: int = 64):
        super().__init__()
        self.emb_dim = emb_dim
        self.time_mlp = nn.Sequential(nn.Linear(emb_dim, emb_dim), nn.SiLU(), nn.Linear(emb_dim, emb_dim))
        self.class_emb = nn.Embedding(num_classes + 1, emb_dim)  # index 0 reserved for null
        self.stem = nn.Conv3d(1, width, kernel_size=2, stride=2)
        self.blocks = nn.ModuleList(_FilmBlock(width, emb_dim) for _ in range(blocks))
        self.head = nn.ConvTranspose3d(width, 1, kernel_size=2, stride=2)

    def forward(self, x_t: torch.Tensor, t_frac: torch.Tensor, class_idx: torch.Tensor) -> torch.Tensor:
        emb = self.time_mlp(_sinusoidal_embedding(t_frac * 1000.0, self.emb_dim))
        # Null conditioning is an exact zero vector, not a learned row.
        cond = self.class_emb(class_idx) * (class_idx > 0).float()[:, None]
        emb = emb + cond
        h = self.stem(x_t)
        for block in self.blocks:
            h = block(h, emb)
        return self.head(h)


@dataclass
class ToyTrainConfig:
    epochs: int = 12
    batch_size: int = 16
    lr: float = 2e-3
    width: int = 16
    blocks: int = 3
    timesteps_T: int = 1000
    cond_drop_prob: float = 0.1


class ToyDiffusionAdapter(DenoiserAdapter):
    """DenoiserAdapter over a trained (or freshly initialized) ToyDenoiser."""

    def __init__(self, net: ToyDenoiser, vocab: dict[str, int], spec: ModelSpec, loss_curve=None):
        self.net = net.eval()
        self.vocab = vocab
        self.spec = spec
        self.loss_curve = list(loss_curve or [])
        T = spec.diffusion_steps_T
        betas = np.linspace(1e-4, 0.02, T, dtype=np.float64)
        self.alpha_bar = np.cumprod(1.0 - betas).astype(np.float32)

    def class_index(self, prompt: str) -> int:
        return self.vocab.get(prompt, 0)

    def denoising_loss(self, frames, timestep, seed, prompt, counted_mask) -> float:
        t_dim, h, w = frames.shape[0], frames.shape[1], frames.shape[2]
        if t_dim % 2 or h % 2 or w % 2:
            raise AdapterError(f"toy adapter needs even dims, got ({t_dim},{h},{w})")
        if not 0 < timestep < self.spec.diffusion_steps_T:
            raise AdapterError(f"timestep {timestep} outside (0, {self.spec.diffusion_steps_T})")
        gray = frames.mean(axis=3) if frames.shape[3] > 1 else frames[..., 0]
        x0 = torch.from_numpy(np.ascontiguousarray(gray, dtype=np.float32))[None, None] * 2.0 - 1.0
        eps = torch.from_numpy(
            np.random.default_rng(seed).standard_normal(x0.shape).astype(np.float32)
        )
        ab = float(self.alpha_bar[timestep - 1])
        x_t = math.sqrt(ab) * x0 + math.sqrt(1.0 - ab) * eps
        with torch.no_grad():
            t_frac = torch.tensor([timestep / self.spec.diffusion_steps_T], dtype=torch.float32)
            cls = torch.tensor([self.class_index(prompt)], dtype=torch.long)
            eps_hat = self.net(x_t, t_frac, cls)
        mask = torch.from_numpy(np.asarray(counted_mask, dtype=bool))
        sq = (eps[0, 0, mask] - eps_hat[0, 0, mask]) ** 2
        return float(sq.double().mean().item())

    def save(self, path) -> None:
        torch.save(
            {
                "state_dict": self.net.state_dict(),
                "vocab": self.vocab,
                "width": self.net.stem.out_channels,
                "blocks": len(self.net.blocks),
                "model_id": self.spec.model_id,
                "frame_window": self.spec.frame_window,
                "size": self.spec.resolution_mode.sizes[0][0],
                "loss_curve": self.loss_curve,
            },
            path,
        )

    @classmethod
    def load(cls, path) -> "ToyDiffusionAdapter":
        blob = torch.load(path, map_location="cpu", weights_only=False)
        net = ToyDenoiser(num_classes=len(blob["vocab"]), width=blob["width"], blocks=blob["blocks"])
        net.load_state_dict(blob["state_dict"])
        spec = toy_model_spec(blob["model_id"], frames=blob["frame_window"], size=blob["size"])
        return cls(net, blob["vocab"], spec, loss_curve=blob.get("loss_curve"))


def _clips_to_tensor(clips: list[np.ndarray]) -> torch.Tensor:
    arr = np.stack(clips).astype(np.float32) / 255.0
    return torch.from_numpy(arr)[:, None] * 2.0 - 1.0  # (N, 1, T, H, W) in [-1, 1]


def toy_train(
    dataset: list[tuple[np.ndarray, str]],
    epochs: int,
    seed: int,
    config: ToyTrainConfig | None = None,
    model_id: str = "toy-ddpm",
    log=None,
) -> ToyDiffusionAdapter:
    """Train the toy denoiser on forward-direction clips.

    dataset holds (clip uint8 (T,H,W), caption) pairs; captions become class
    labels. Deterministic given the seed. epochs=0 yields a seeded untrained
    adapter (useful for pipeline smoke tests).
    """
    if not dataset:
        raise ToyTrainError("empty training dataset")
    config = config or ToyTrainConfig(epochs=epochs)
    torch.manual_seed(seed)
    torch.use_deterministic_algorithms(True)

    captions = sorted({cap for _, cap in dataset})
    vocab = {cap: i + 1 for i, cap in enumerate(captions)}  # 0 = null
    clips = _clips_to_tensor([c for c, _ in dataset])
    labels = torch.tensor([vocab[cap] for _, cap in dataset], dtype=torch.long)
    frames, size = clips.shape[2], clips.shape[3]

    net = ToyDenoiser(num_classes=len(vocab), width=config.width, blocks=config.blocks)
    T = config.timesteps_T
    betas = torch.linspace(1e-4, 0.02, T, dtype=torch.float64)
    alpha_bar = torch.cumprod(1.0 - betas, dim=0).float()

    gen = torch.Generator().manual_seed(seed)
    opt = torch.optim.Adam(net.parameters(), lr=config.lr)
    n = clips.shape[0]
    loss_curve: list[float] = []
    for epoch in range(epochs):
        perm = torch.randperm(n, generator=gen)
        epoch_losses = []
        for start in range(0, n, config.batch_size):
            idx = perm[start : start + config.batch_size]
            x0 = clips[idx]
            cls = labels[idx].clone()
            drop = torch.rand(len(idx), generator=gen) < config.cond_drop_prob
            cls[drop] = 0
            t = torch.randint(1, T, (len(idx),), generator=gen)
            eps = torch.randn(x0.shape, generator=gen)
            ab = alpha_bar[t - 1][:, None, None, None, None]
            x_t = ab.sqrt() * x0 + (1 - ab).sqrt() * eps
            eps_hat = net(x_t, t.float() / T, cls)
            loss = F.mse_loss(eps_hat, eps)
            if not torch.isfinite(loss):
                raise ToyTrainError(f"training diverged (non-finite loss) at epoch {epoch}")
            opt.zero_grad()
            loss.backward()
            opt.step()
            epoch_losses.append(loss.item())
        loss_curve.append(float(np.mean(epoch_losses)))
        if log is not None:
            log(f"epoch {epoch + 1}/{epochs}: loss {loss_curve[-1]:.4f}")

    spec = toy_model_spec(model_id, frames=frames, size=size)
    return ToyDiffusionAdapter(net, vocab, spec, loss_curve=loss_curve)
