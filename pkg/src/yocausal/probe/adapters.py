"""Denoiser adapter contract.

An adapter wraps one diffusion model behind a single call that returns the
denoising loss for a window of pixel frames at a given timestep. The adapter
draws its own noise from the seed it receives (latent models need
latent-shaped noise the harness cannot know about); the draw must depend only
on the input shape, never on frame content, so forward and reversed windows
of one video receive identical noise from the same seed. Classifier-free
guidance must not be applied.
"""

import json
import subprocess
import tempfile
import threading
from abc import ABC, abstractmethod
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from ..preprocess import ModelSpec


class AdapterError(RuntimeError):
    """Adapter call failed."""


class AdapterContractError(RuntimeError):
    """Adapter violated a contract guarantee (e.g. nondeterminism)."""


class DenoiserAdapter(ABC):
    spec: ModelSpec

    @abstractmethod
    def denoising_loss(
        self,
        frames: np.ndarray,
        timestep: int,
        seed: int,
        prompt: str,
        counted_mask: Sequence[bool],
    ) -> float:
        """Mean squared error between drawn and predicted noise.

        frames: (T, H, W, C) float32 in [0,1], already preprocessed for this
        model. counted_mask marks which frames contribute to the loss (context
        prefix frames excluded); the mean is taken over counted elements only.
        Must be deterministic given identical arguments.
        """


class EpsilonPredictionAdapter(DenoiserAdapter):
    """Base for in-process epsilon-prediction models.

    Subclasses supply representation encoding, the noising schedule, and the
    noise predictor; this class handles seeded noise draws and masked MSE.
    """

    @abstractmethod
    def prepare(self, frames: np.ndarray) -> np.ndarray:
        """Pixel frames (T,H,W,C) -> model input representation with frame axis 0."""

    @abstractmethod
    def add_noise(self, x0: np.ndarray, eps: np.ndarray, timestep: int) -> np.ndarray:
        ...

    @abstractmethod
    def predict_noise(self, x_t: np.ndarray, timestep: int, prompt: str) -> np.ndarray:
        ...

    def draw_noise(self, shape: tuple[int, ...], seed: int) -> np.ndarray:
        rng = np.random.default_rng(seed)
        return rng.standard_normal(shape).astype(np.float32)

    def denoising_loss(self, frames, timestep, seed, prompt, counted_mask) -> float:
        x0 = self.prepare(frames)
        if x0.shape[0] != len(counted_mask):
            raise AdapterError(
                f"representation frame axis ({x0.shape[0]}) does not match mask length "
                f"({len(counted_mask)}); override denoising_loss for compressed representations"
            )
        eps = self.draw_noise(x0.shape, seed)
        x_t = self.add_noise(x0, eps, timestep)
        eps_hat = self.predict_noise(x_t, timestep, prompt)
        mask = np.asarray(counted_mask, dtype=bool)
        sq = (eps[mask] - eps_hat[mask]) ** 2
        return float(np.mean(sq, dtype=np.float64))


class RemoteAdapter(DenoiserAdapter):
    """Out-of-process adapter speaking a line-delimited request/response protocol.

    Each request line is a JSON object {frames_path, timestep, seed, prompt,
    loss_mask}; the worker answers one line {"loss": float} or {"error": str}.
    Frames are handed over as .npy files in a scratch directory.
    """

    def __init__(self, spec: ModelSpec, command: list[str], scratch_dir=None):
        self.spec = spec
        self._command = list(command)
        self._scratch = Path(scratch_dir) if scratch_dir else Path(tempfile.mkdtemp(prefix="yocausal-frames-"))
        self._scratch.mkdir(parents=True, exist_ok=True)
        self._proc: subprocess.Popen | None = None
        self._counter = 0
        self._lock = threading.Lock()  # one pipe, so round-trips serialize

    def _ensure_proc(self) -> subprocess.Popen:
        if self._proc is None or self._proc.poll() is not None:
            self._proc = subprocess.Popen(
                self._command,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                text=True,
                bufsize=1,
            )
        return self._proc

    def denoising_loss(self, frames, timestep, seed, prompt, counted_mask) -> float:
        with self._lock:
            proc = self._ensure_proc()
            self._counter += 1
            frames_path = self._scratch / f"req{self._counter}.npy"
            np.save(frames_path, frames)
            request = {
                "frames_path": str(frames_path),
                "timestep": int(timestep),
                "seed": int(seed),
                "prompt": prompt,
                "loss_mask": [bool(m) for m in counted_mask],
            }
            try:
                proc.stdin.write(json.dumps(request) + "\n")
                proc.stdin.flush()
                line = proc.stdout.readline()
            except (BrokenPipeError, OSError) as exc:
                raise AdapterError(f"adapter worker pipe failure: {exc}") from exc
            finally:
                frames_path.unlink(missing_ok=True)
        if not line:
            raise AdapterError("adapter worker closed its output stream")
        response = json.loads(line)
        if "error" in response:
            raise AdapterError(f"adapter worker error: {response['error']}")
        return float(response["loss"])

    def close(self) -> None:
        if self._proc is not None and self._proc.poll() is None:
            self._proc.stdin.close()
            self._proc.wait(timeout=10)
        self._proc = None


def serve_adapter(adapter: DenoiserAdapter, stdin=None, stdout=None) -> None:
    """Run the worker side of the line-delimited protocol until EOF."""
    import sys

    stdin = stdin or sys.stdin
    stdout = stdout or sys.stdout
    for line in stdin:
        line = line.strip()
        if not line:
            continue
        try:
            req = json.loads(line)
            frames = np.load(req["frames_path"])
            loss = adapter.denoising_loss(
                frames, int(req["timestep"]), int(req["seed"]), req.get("prompt", ""), req["loss_mask"]
            )
            out: dict[str, Any] = {"loss": loss}
        except Exception as exc:  # surfaced to the harness, never crash the worker
            out = {"error": f"{type(exc).__name__}: {exc}"}
        stdout.write(json.dumps(out) + "\n")
        stdout.flush()
