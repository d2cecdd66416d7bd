"""Counter-based random streams (Philox4x64-10) shared by Python code and jitted kernels.

A stream is keyed by ``(master_seed, stream_index)``; its k-th block of four
64-bit words is Philox applied to counter ``k + 1``.  This is bit-identical to
``numpy.random.Philox(key=[master_seed, stream_index]).random_raw()``, which the
test-suite uses as an independent reference.

Draws derived from the word sequence:

* bits: words consumed least-significant bit first;
* trits (exact uniform on {0, 1, 2}): words split into bytes (low byte first),
  bytes >= 243 rejected, each accepted byte read as 5 base-3 digits (low digit
  first);
* geometric(p=2/3): number of trits equal to 2 before the first trit in {0, 1}.

Bits and trits keep separate partial buffers but pull whole words from the same
counter, so any interleaving of draws is reproducible.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numba import njit

UINT64_MASK = (1 << 64) - 1

_M0 = np.uint64(0xD2E7470EE14C6C93)
_M1 = np.uint64(0xCA5A826395121157)
_W0 = np.uint64(0x9E3779B97F4A7C15)
_W1 = np.uint64(0xBB67AE8584CAA73B)
_MASK32 = np.uint64(0xFFFFFFFF)
_S32 = np.uint64(32)
_ONE = np.uint64(1)
_ZERO = np.uint64(0)
_BYTE = np.uint64(255)
_S8 = np.uint64(8)

# Domain separator placed in the top counter word; walker streams never touch it.
ENV_DOMAIN = np.uint64(0x0E5B)

# state layout (uint64): key0 key1 ctr_lo ctr_hi buf0..buf3 buf_pos bitword nbits byteword nbytes tblock tpos
ST_K0, ST_K1, ST_CLO, ST_CHI = 0, 1, 2, 3
ST_BUF = 4
ST_BPOS = 8
ST_BITW, ST_NBITS = 9, 10
ST_BYTEW, ST_NBYTES = 11, 12
ST_TBLOCK, ST_TPOS = 13, 14
STATE_SIZE = 15


def _trit_table() -> np.ndarray:
    table = np.zeros((243, 5), dtype=np.int64)
    for b in range(243):
        v = b
        for j in range(5):
            table[b, j] = v % 3
            v //= 3
    return table


TRITS = _trit_table()


@njit(inline="always")
def _mulhilo(a, b):
    lo = a * b
    a0 = a & _MASK32
    a1 = a >> _S32
    b0 = b & _MASK32
    b1 = b >> _S32
    t = a1 * b0 + ((a0 * b0) >> _S32)
    w1 = (t & _MASK32) + a0 * b1
    hi = a1 * b1 + (t >> _S32) + (w1 >> _S32)
    return hi, lo


@njit
def philox4x64(c0, c1, c2, c3, k0, k1, out):
    """Philox4x64 with 10 rounds; writes the four output words into ``out``."""
    for _ in range(10):
        h0, l0 = _mulhilo(_M0, c0)
        h1, l1 = _mulhilo(_M1, c2)
        c0, c1, c2, c3 = h1 ^ c1 ^ k0, l1, h0 ^ c3 ^ k1, l0
        k0 = k0 + _W0
        k1 = k1 + _W1
    out[0] = c0
    out[1] = c1
    out[2] = c2
    out[3] = c3


@njit
def init_state(st, k0, k1):
    for i in range(STATE_SIZE):
        st[i] = _ZERO
    st[ST_K0] = k0
    st[ST_K1] = k1
    st[ST_BPOS] = np.uint64(4)
    st[ST_TPOS] = np.uint64(5)


@njit(inline="always")
def next_u64(st):
    if st[ST_BPOS] == np.uint64(4):
        lo = st[ST_CLO] + _ONE
        st[ST_CLO] = lo
        if lo == _ZERO:
            st[ST_CHI] = st[ST_CHI] + _ONE
        philox4x64(st[ST_CLO], st[ST_CHI], _ZERO, _ZERO, st[ST_K0], st[ST_K1], st[ST_BUF:ST_BUF + 4])
        st[ST_BPOS] = _ZERO
    w = st[ST_BUF + np.int64(st[ST_BPOS])]
    st[ST_BPOS] = st[ST_BPOS] + _ONE
    return w


@njit(inline="always")
def next_bit(st):
    if st[ST_NBITS] == _ZERO:
        st[ST_BITW] = next_u64(st)
        st[ST_NBITS] = np.uint64(64)
    b = st[ST_BITW] & _ONE
    st[ST_BITW] = st[ST_BITW] >> _ONE
    st[ST_NBITS] = st[ST_NBITS] - _ONE
    return np.int64(b)


@njit(inline="always")
def next_trit(st, trits):
    if st[ST_TPOS] == np.uint64(5):
        while True:
            if st[ST_NBYTES] == _ZERO:
                st[ST_BYTEW] = next_u64(st)
                st[ST_NBYTES] = np.uint64(8)
            b = st[ST_BYTEW] & _BYTE
            st[ST_BYTEW] = st[ST_BYTEW] >> _S8
            st[ST_NBYTES] = st[ST_NBYTES] - _ONE
            if b < np.uint64(243):
                break
        st[ST_TBLOCK] = b
        st[ST_TPOS] = _ZERO
    t = trits[np.int64(st[ST_TBLOCK]), np.int64(st[ST_TPOS])]
    st[ST_TPOS] = st[ST_TPOS] + _ONE
    return t


@njit(inline="always")
def next_geometric(st, trits):
    k = 0
    while next_trit(st, trits) == 2:
        k += 1
    return k


@njit
def _u64_block(st, out):
    for i in range(out.shape[0]):
        out[i] = next_u64(st)


@njit
def _bit_block(st, out):
    for i in range(out.shape[0]):
        out[i] = next_bit(st)


@njit
def _trit_block(st, trits, out):
    for i in range(out.shape[0]):
        out[i] = next_trit(st, trits)


@njit
def _geometric_block(st, trits, out):
    for i in range(out.shape[0]):
        out[i] = next_geometric(st, trits)


@njit
def rademacher_table(seed, y_lo, y_hi, out):
    """Write the keyed sign for every row in [y_lo, y_hi] into ``out``."""
    buf = np.zeros(4, dtype=np.uint64)
    k0 = np.uint64(seed)
    for i in range(y_hi - y_lo + 1):
        c = np.uint64(y_lo + i)  # two's complement wrap for negative rows
        philox4x64(c, _ZERO, _ZERO, ENV_DOMAIN, k0, _ZERO, buf)
        out[i] = 1 if (buf[0] & _ONE) == _ONE else -1


def rademacher_sign(seed: int, y: int) -> int:
    out = np.zeros(1, dtype=np.int8)
    rademacher_table(np.uint64(seed & UINT64_MASK), y, y, out)
    return int(out[0])


def _as_u64(value: int, name: str) -> np.uint64:
    if not 0 <= value <= UINT64_MASK:
        raise ValueError(f"{name} must be an unsigned 64-bit integer, got {value}")
    return np.uint64(value)


@dataclass
class RngStream:
    """Reproducible stream keyed by ``(master_seed, stream_index)``.

    ``counter`` is the number of Philox blocks consumed so far (128-bit).
    """

    master_seed: int
    stream_index: int = 0
    _state: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        self._state = np.zeros(STATE_SIZE, dtype=np.uint64)
        init_state(self._state, _as_u64(self.master_seed, "master_seed"),
                   _as_u64(self.stream_index, "stream_index"))

    @property
    def counter(self) -> int:
        return int(self._state[ST_CLO]) | (int(self._state[ST_CHI]) << 64)

    @property
    def state(self) -> np.ndarray:
        """Raw state array, for handing to jitted kernels (mutated in place)."""
        return self._state

    def snapshot(self) -> "RngStream":
        clone = RngStream(self.master_seed, self.stream_index)
        clone._state[:] = self._state
        return clone

    def u64(self, size: int | None = None):
        out = np.empty(1 if size is None else size, dtype=np.uint64)
        _u64_block(self._state, out)
        return int(out[0]) if size is None else out

    def bits(self, size: int) -> np.ndarray:
        out = np.empty(size, dtype=np.int64)
        _bit_block(self._state, out)
        return out

    def bit(self) -> int:
        return int(self.bits(1)[0])

    def trits(self, size: int) -> np.ndarray:
        out = np.empty(size, dtype=np.int64)
        _trit_block(self._state, TRITS, out)
        return out

    def trit(self) -> int:
        return int(self.trits(1)[0])

    def geometric(self, size: int | None = None):
        """Geometric draws on {0, 1, ...} with success probability 2/3."""
        out = np.empty(1 if size is None else size, dtype=np.int64)
        _geometric_block(self._state, TRITS, out)
        return int(out[0]) if size is None else out

    def spawn(self, index: int) -> "RngStream":
        """Independent stream under the same master seed."""
        return RngStream(self.master_seed, index)
