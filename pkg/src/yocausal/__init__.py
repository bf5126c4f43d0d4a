"""yocausal: probes whether video diffusion models internalize the arrow of
time and causal structure, by comparing denoising losses on forward versus
temporally reversed videos."""

__version__ = "0.1.0"
