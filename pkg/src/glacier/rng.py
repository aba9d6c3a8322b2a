"""Counter-based random streams for reproducible parallel Monte Carlo.

Every trial owns a private xoshiro256++ generator whose state is derived
from ``(master_seed, label, trial_index)`` through a splitmix64 chain:

    z = mix64(master_seed + GOLDEN)
    z = mix64(z ^ label_key)         # label_key = first 8 bytes of sha256(label)
    z = mix64(z + trial_index)
    state[i] = splitmix64 outputs seeded by z   (i = 0..3)

``mix64`` is the splitmix64 finalizer (a bijection on 64-bit words), so
distinct trial indices always map to distinct states.  Aggregating trials
in any order, on any number of workers, therefore reproduces the same
result bit for bit.
"""

from __future__ import annotations

import hashlib

import numpy as np
from numba import njit

U64 = np.uint64
_MASK64 = (1 << 64) - 1

GOLDEN = U64(0x9E3779B97F4A7C15)
_MIX_A = U64(0xBF58476D1CE4E5B9)
_MIX_B = U64(0x94D049BB133111EB)
_INV53 = 1.0 / 9007199254740992.0  # 2**-53


def label_key(label: str) -> np.uint64:
    """Stable 64-bit key for an experiment label (little-endian sha256 prefix)."""
    digest = hashlib.sha256(label.encode("utf-8")).digest()
    return U64(int.from_bytes(digest[:8], "little"))


@njit(cache=True, nogil=True, inline="always")
def _mix64(z):
    z = (z ^ (z >> U64(30))) * _MIX_A
    z = (z ^ (z >> U64(27))) * _MIX_B
    return z ^ (z >> U64(31))


@njit(cache=True, nogil=True)
def trial_state(master_seed, key, trial):
    """xoshiro256++ state for one (master_seed, label_key, trial) triple."""
    z = _mix64(master_seed + GOLDEN)
    z = _mix64(z ^ key)
    z = _mix64(z + trial)
    s = np.empty(4, np.uint64)
    for i in range(4):
        z = z + GOLDEN
        s[i] = _mix64(z)
    if s[0] | s[1] | s[2] | s[3] == U64(0):
        s[0] = GOLDEN
    return s


@njit(cache=True, nogil=True, inline="always")
def _rotl(x, k):
    return (x << k) | (x >> (U64(64) - k))


@njit(cache=True, nogil=True, inline="always")
def next_u64(s):
    out = _rotl(s[0] + s[3], U64(23)) + s[0]
    t = s[1] << U64(17)
    s[2] ^= s[0]
    s[3] ^= s[1]
    s[1] ^= s[2]
    s[0] ^= s[3]
    s[2] ^= t
    s[3] = _rotl(s[3], U64(45))
    return out


@njit(cache=True, nogil=True, inline="always")
def next_uniform(s):
    """Uniform on [0, 1) with 53 random bits."""
    return np.float64(next_u64(s) >> U64(11)) * _INV53


@njit(cache=True, nogil=True, inline="always")
def next_below(s, n):
    """Uniform integer in [0, n) by masked rejection (unbiased)."""
    m = U64(n - 1)
    m |= m >> U64(1)
    m |= m >> U64(2)
    m |= m >> U64(4)
    m |= m >> U64(8)
    m |= m >> U64(16)
    m |= m >> U64(32)
    while True:
        r = next_u64(s) & m
        if r < U64(n):
            return np.int64(r)


@njit(cache=True, nogil=True)
def fill_uniforms(s, out):
    for i in range(out.size):
        out[i] = next_uniform(s)


@njit(cache=True, nogil=True)
def fill_permutation(s, out):
    """Uniform permutation of 0..len(out)-1 (Fisher-Yates)."""
    n = out.size
    for i in range(n):
        out[i] = i
    for i in range(n - 1, 0, -1):
        j = next_below(s, i + 1)
        tmp = out[i]
        out[i] = out[j]
        out[j] = tmp


class Stream:
    """A single reproducible stream; thin Python handle over the kernels."""

    def __init__(self, master_seed: int, label: str, trial: int = 0):
        self.master_seed = int(master_seed) & _MASK64
        self.label = label
        self.trial = int(trial)
        self.state = trial_state(U64(self.master_seed), label_key(label), U64(self.trial))

    def uniforms(self, k: int) -> np.ndarray:
        out = np.empty(int(k), dtype=np.float64)
        fill_uniforms(self.state, out)
        return out

    def permutation(self, k: int) -> np.ndarray:
        out = np.empty(int(k), dtype=np.int64)
        fill_permutation(self.state, out)
        return out

    def integers_below(self, n: int, k: int) -> np.ndarray:
        out = np.empty(int(k), dtype=np.int64)
        for i in range(int(k)):
            out[i] = next_below(self.state, np.int64(n))
        return out
