"""Deterministic seed derivation.

All randomness in the harness flows from one base seed through content-addressed
derived seeds, so results do not depend on worker scheduling or evaluation order.
"""

import hashlib


def derive_seed(*parts) -> int:
    """Hash an arbitrary tuple of parts into a 63-bit seed.

    Parts are joined by a separator that cannot appear in decimal integers, so
    ("a", 12) and ("a1", 2) never collide.
    """
    key = "\x1f".join(str(p) for p in parts)
    digest = hashlib.blake2b(key.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "big") >> 1


def noise_seed(base_seed: int, video_id: str, timestep_index: int, draw_index: int) -> int:
    """Seed for the noise tensor of one (video, timestep, draw) cell.

    Identical for the forward and reversed probe of the same video by
    construction: direction is not part of the key.
    """
    return derive_seed("noise", base_seed, video_id, timestep_index, draw_index)


def stage_seed(base_seed: int, stage: str) -> int:
    """Per-pipeline-stage seed derived from the run's base seed."""
    return derive_seed("stage", base_seed, stage)
