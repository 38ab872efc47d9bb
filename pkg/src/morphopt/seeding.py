"""Deterministic seed derivation.

Every random draw in a run is keyed by the master seed plus the indices
that identify the draw (generation, candidate, rollout, ...), never by
call order or scheduling.  This is what makes results independent of the
worker count and makes checkpoint resume exact: there is no RNG stream
state to carry around, only integers to recombine.
"""

from __future__ import annotations

_MASK64 = (1 << 64) - 1

# Stream tags keep unrelated uses of the same master seed apart.
STREAM_INIT = 0x11
STREAM_SAMPLE = 0x22
STREAM_EVAL = 0x44


def splitmix64(x: int) -> int:
    """One step of the splitmix64 hash, a well-mixed 64-bit permutation."""
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


def mix_seed(*parts: int) -> int:
    """Collapse integer parts into one 64-bit seed.

    Order matters: mix_seed(a, b) != mix_seed(b, a) in general.  Negative
    parts are accepted and folded into 64 bits.
    """
    h = 0
    for p in parts:
        h = splitmix64(h ^ (int(p) & _MASK64))
    return h
