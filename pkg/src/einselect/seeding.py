"""Counter-based seed splitting.

Every random draw is keyed by ``(root, purpose, N, replica)`` and fed to
``numpy.random.SeedSequence([root, purpose, N, replica])``, which backs a
``PCG64`` generator. Any implementation that reproduces SeedSequence's
entropy mixing reproduces the streams.
"""
from __future__ import annotations

import numpy as np

COUPLINGS = 1
ENV_STATE = 2
LOCAL_UNITARY = 3
INTERACTION = 4
STABILITY = 5


def stream(root: int, purpose: int, n: int = 0, replica: int = 0) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(root), purpose, int(n), int(replica)]))
