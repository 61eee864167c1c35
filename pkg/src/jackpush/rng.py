"""Counter-based random streams.

Every trial owns an independent Philox4x64 stream keyed by
``(seed, namespace, trial)``, so results do not depend on how trials are
split across workers.
"""
from __future__ import annotations

import os
import zlib

import numpy as np

RNG_ALGORITHM = "numpy.random.Philox (4x64-10), SeedSequence(seed, spawn_key=(namespace, trial))"
NAMESPACE_ENV = "JACKPUSH_SEED_NAMESPACE"


def namespace_id(namespace: str | int | None = None) -> int:
    """Integer namespace; defaults to the environment variable, else 0."""
    if namespace is None:
        namespace = os.environ.get(NAMESPACE_ENV, "0")
    if isinstance(namespace, int):
        return namespace
    return int(namespace) if namespace.isdigit() else zlib.crc32(namespace.encode())


def trial_rng(seed: int, trial: int = 0, namespace: str | int | None = None) -> np.random.Generator:
    ss = np.random.SeedSequence(int(seed), spawn_key=(namespace_id(namespace), int(trial)))
    return np.random.Generator(np.random.Philox(ss))


def rng_metadata(seed: int, namespace: str | int | None = None) -> dict:
    return {"seed": int(seed), "namespace": namespace_id(namespace), "rng_algorithm": RNG_ALGORITHM}
