"""Counter-based random streams keyed by (seed, generation, phase, agent).

Every draw is a pure function of its key, so any partition of agents across
workers reproduces the same numbers. The mixing function is the SplitMix64
output finalizer; keys are absorbed one 64-bit word at a time.
"""
from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15

# phase tags
CHEAT = 1
REPRODUCE = 2
MUTATE_FLAG = 3
MUTATE_TARGET = 4

_G = np.uint64(GOLDEN)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_S30, _S27, _S31 = np.uint64(30), np.uint64(27), np.uint64(31)


def mix64(z: int) -> int:
    """SplitMix64 finalizer on a Python int."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def splitmix64(state: int) -> tuple[int, int]:
    """One step of the reference SplitMix64 generator: ``(new_state, output)``."""
    state = (state + GOLDEN) & MASK64
    return state, mix64(state)


def _mix64_array(z: np.ndarray) -> np.ndarray:
    # uint64 arithmetic wraps modulo 2**64, which is what we want
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


def derive_key(*words: int) -> int:
    """Fold integer words into one 64-bit key."""
    k = 0
    for w in words:
        k = mix64(k ^ (((int(w) & MASK64) + 1) * GOLDEN & MASK64))
        k = mix64(k + GOLDEN)
    return k


def uniforms(key: int, ids) -> np.ndarray:
    """Uniform doubles in [0, 1), one per counter in ``ids``."""
    ids = np.asarray(ids, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = np.uint64(key) + (ids + np.uint64(1)) * _G
        z = _mix64_array(_mix64_array(z))
    return (z >> np.uint64(11)).astype(np.float64) * (1.0 / (1 << 53))


def phase_uniforms(seed: int, generation: int, phase: int, ids) -> np.ndarray:
    return uniforms(derive_key(seed, generation, phase), ids)
