"""Counter-based random streams (Philox4x64-10).

Every draw is a pure function of ``(master_seed, stream_id, counter, tag)``,
so a trial's noise does not depend on which worker runs it or in what order.
The block function matches ``numpy.random.Philox`` bit for bit: the block at
counter ``c`` equals the first four outputs of ``Philox(key=k, counter=c-1)``.

The helpers below use only uint64 arithmetic that wraps silently on numpy
arrays and on numba scalars, so one definition serves both backends.
"""

from dataclasses import dataclass, replace

import numpy as np

from ._backend import USE_NUMBA, njit

_M0 = np.uint64(0xD2E7470EE14C6C93)
_M1 = np.uint64(0xCA5A826395121157)
_W0 = np.uint64(0x9E3779B97F4A7C15)
_W1 = np.uint64(0xBB67AE8584CAA73B)
_LO32 = np.uint64(0xFFFFFFFF)
_S32 = np.uint64(32)
_S11 = np.uint64(11)
_TWO_M53 = 1.0 / 9007199254740992.0
_TWO_PI = 6.283185307179586

TAG_DYNAMICS = 0
TAG_INITIAL_ANGLE = 1


@njit
def mulhilo(a, b):
    """Full 64x64 -> 128 bit product of ``a`` and ``b`` as ``(hi, lo)``."""
    a_lo = a & _LO32
    a_hi = a >> _S32
    b_lo = b & _LO32
    b_hi = b >> _S32
    ll = a_lo * b_lo
    lh = a_lo * b_hi
    hl = a_hi * b_lo
    hh = a_hi * b_hi
    mid = (ll >> _S32) + (lh & _LO32) + (hl & _LO32)
    hi = hh + (lh >> _S32) + (hl >> _S32) + (mid >> _S32)
    lo = ((mid & _LO32) << _S32) | (ll & _LO32)
    return hi, lo


@njit
def philox4x64(c0, c1, c2, c3, k0, k1):
    for _ in range(10):
        hi0, lo0 = mulhilo(_M0, c0)
        hi1, lo1 = mulhilo(_M1, c2)
        c0, c1, c2, c3 = hi1 ^ c1 ^ k0, lo1, hi0 ^ c3 ^ k1, lo0
        k0 = k0 + _W0
        k1 = k1 + _W1
    return c0, c1, c2, c3


@njit
def to_unit_open(x):
    """Map 64 random bits to (0, 1]."""
    return ((x >> _S11) + np.uint64(1)) * _TWO_M53


@njit
def to_unit(x):
    """Map 64 random bits to [0, 1)."""
    return (x >> _S11) * _TWO_M53


@njit
def uniform4(seed, stream, counter, tag):
    """Four uniforms in (0, 1] from one block."""
    r0, r1, r2, r3 = philox4x64(counter, tag, np.uint64(0) * counter, np.uint64(0) * counter, seed, stream)
    return to_unit_open(r0), to_unit_open(r1), to_unit_open(r2), to_unit_open(r3)


@njit
def normal4(seed, stream, counter, tag):
    """Four independent standard normals (Box-Muller) from one block."""
    u0, u1, u2, u3 = uniform4(seed, stream, counter, tag)
    ra = np.sqrt(-2.0 * np.log(u0))
    rb = np.sqrt(-2.0 * np.log(u2))
    return (
        ra * np.cos(_TWO_PI * u1),
        ra * np.sin(_TWO_PI * u1),
        rb * np.cos(_TWO_PI * u3),
        rb * np.sin(_TWO_PI * u3),
    )


def make_stream_id(device_id: int, trial_index: int) -> int:
    """Combine a device id and a trial index into one 64-bit stream id."""
    return ((int(device_id) << 32) ^ int(trial_index)) & 0xFFFFFFFFFFFFFFFF


@dataclass(frozen=True)
class RngStream:
    """Position in a counter-based random stream."""

    master_seed: int
    stream_id: int = 0
    counter: int = 0

    def __post_init__(self):
        for name in ("master_seed", "stream_id", "counter"):
            v = getattr(self, name)
            if not 0 <= int(v) < 2**64:
                raise ValueError(f"{name} must fit in 64 unsigned bits, got {v}")

    def advance(self, n: int = 1) -> "RngStream":
        return replace(self, counter=self.counter + n)

    def _args(self, tag):
        vals = (self.master_seed, self.stream_id, self.counter, tag)
        if USE_NUMBA:
            return tuple(np.uint64(v) for v in vals)
        return tuple(np.array([v], dtype=np.uint64) for v in vals)

    def normals(self, tag: int = TAG_DYNAMICS) -> np.ndarray:
        """The four normals of the block at the current counter."""
        return np.array(normal4(*self._args(tag)), dtype=np.float64).reshape(4)

    def uniforms(self, tag: int = TAG_DYNAMICS) -> np.ndarray:
        return np.array(uniform4(*self._args(tag)), dtype=np.float64).reshape(4)

    def raw(self, tag: int = TAG_DYNAMICS) -> tuple:
        seed, stream, ctr, t = self._args(tag)
        zero = ctr * np.uint64(0)
        r = philox4x64(ctr, t, zero, zero, seed, stream)
        return tuple(int(np.asarray(v).reshape(-1)[0]) for v in r)
