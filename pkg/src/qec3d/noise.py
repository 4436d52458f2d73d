"""Phase-flip and syndrome measurement noise with reproducible streams.

Randomness is counter-based: a stream is identified by a 64-bit master
seed plus a (trial, cycle, phase) triple, mixed through numpy's
SeedSequence.  The same (seed, stream id) always produces the same
samples, independent of thread scheduling or trial execution order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class NoiseModel:
    """Independent per-qubit flip probability p and per-syndrome-bit flip
    probability q."""

    p: float
    q: float

    def __post_init__(self):
        if not (0.0 <= self.p <= 1.0 and 0.0 <= self.q <= 1.0):
            raise ValueError("probabilities must lie in [0, 1]")


# phases within a cycle, for stream separation
PHASE_QUBIT = 0
PHASE_SYNDROME = 1


@dataclass(frozen=True)
class RngStream:
    """A value-type handle on one deterministic sample stream."""

    master_seed: int
    trial: int
    cycle: int = 0
    phase: int = 0

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(
            entropy=self.master_seed,
            spawn_key=(self.trial, self.cycle, self.phase))
        return np.random.Generator(np.random.Philox(ss))

    def at(self, cycle: int, phase: int) -> "RngStream":
        return RngStream(self.master_seed, self.trial, cycle, phase)


def _sample(length: int, prob: float, stream: RngStream) -> np.ndarray:
    if not (0.0 <= prob <= 1.0):
        raise ValueError("probability must lie in [0, 1]")
    if prob == 0.0:
        return np.zeros(length, dtype=np.uint8)
    if prob == 1.0:
        return np.ones(length, dtype=np.uint8)
    gen = stream.generator()
    return (gen.random(length) < prob).astype(np.uint8)


def sample_qubit_error(n: int, p: float, stream: RngStream) -> np.ndarray:
    """iid phase-flip pattern over n qubits."""
    return _sample(n, p, stream)


def sample_syndrome_error(m: int, q: float, stream: RngStream) -> np.ndarray:
    """iid measurement-flip pattern over m syndrome bits."""
    return _sample(m, q, stream)
