"""Deterministic per-task seed derivation from one root seed."""

from __future__ import annotations

import numpy as np


def derive_seed(root: int, *keys: int) -> int:
    """Stable 32-bit seed for ``(root, *keys)``; independent of call order."""
    entropy = [int(root) & 0xFFFFFFFF] + [int(k) & 0xFFFFFFFF for k in keys]
    return int(np.random.SeedSequence(entropy).generate_state(1)[0])
