"""Run-length prefix coding of symbolic orbits.

A symbol string is compressed by writing, for each nonzero symbol in order,
the codeword of the number of 0s since the previous nonzero symbol, followed by
the symbol itself in ceil(log2(alphabet_size - 1)) fixed bits (no bits at all
for a binary alphabet).  Trailing zeros are implied by a length header and
cost nothing.  The codeword of a natural v is

    1^(m+1)  0  a_0 ... a_m       with m+1 = floor(log2(v+1))

where v = 2^(m+1) - 1 + (a_0...a_m read as a big-endian integer); v = 0 is
the single bit 0.  The code is prefix-free with |code(v)| =
2*floor(log2(v+1)) + 1, so the body length of a binary string is exactly
sum_j (2*floor(log2(1 + run_j)) + 1) over its zero-run digits — the
information value reported by :func:`information_length`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .errors import DomainError, MalformedStreamError
from .symbolic import SymbolString

STREAM_MAGIC = b"WCC1"


def symbol_bit_width(alphabet_size):
    """Fixed bits used to spell a nonzero symbol: ceil(log2(N - 1))."""
    if alphabet_size < 2:
        raise DomainError("alphabet needs at least two symbols")
    return int(alphabet_size - 2).bit_length()


def nat_code_length(v):
    """Codeword length 2*floor(log2(v+1)) + 1, vectorised over integers >= 0."""
    vv = np.asarray(v, dtype=np.int64)
    if vv.size and vv.min() < 0:
        raise DomainError("naturals only")
    expo = np.frexp((vv + 1).astype(np.float64))[1] - 1  # exact for v < 2**53
    out = 2 * expo.astype(np.int64) + 1
    return int(out) if np.isscalar(v) or np.ndim(v) == 0 else out


def prefix_encode_nat(v):
    """Codeword of a natural number as a 0/1 uint8 array."""
    v = int(v)
    if v < 0:
        raise DomainError("naturals only")
    m1 = (v + 1).bit_length() - 1  # = floor(log2(v+1))
    out = np.empty(2 * m1 + 1, dtype=np.uint8)
    out[:m1] = 1
    out[m1] = 0
    payload = v - ((1 << m1) - 1)
    for i in range(m1):  # big-endian payload
        out[m1 + 1 + i] = (payload >> (m1 - 1 - i)) & 1
    return out


def prefix_decode_nat(bits, pos=0):
    """Decode one codeword starting at ``pos``; returns (value, next_pos)."""
    bits = np.asarray(bits, dtype=np.uint8)
    total = bits.shape[0]
    m1 = 0
    while pos + m1 < total and bits[pos + m1] == 1:
        m1 += 1
    if pos + m1 >= total:
        raise MalformedStreamError("truncated codeword (unary part)")
    pos += m1 + 1  # past the terminating 0
    if pos + m1 > total:
        raise MalformedStreamError("truncated codeword (payload)")
    payload = 0
    for i in range(m1):
        payload = (payload << 1) | int(bits[pos + i])
    return (1 << m1) - 1 + payload, pos + m1


@dataclass
class RunString:
    """Run-length form of a symbol string.

    ``zero_runs[j]`` counts the 0s immediately before the j-th nonzero
    symbol ``symbols[j]``; zeros after the last nonzero symbol are kept in
    ``trailing_zeros``.
    """

    zero_runs: np.ndarray
    symbols: np.ndarray
    trailing_zeros: int
    alphabet_size: int

    @property
    def n(self):
        return int(self.zero_runs.sum() + self.zero_runs.shape[0]
                   + self.trailing_zeros)

    @property
    def passages(self):
        return int(self.zero_runs.shape[0])

    def digits(self):
        """The run digits as a plain tuple (handy in tests and reports)."""
        return tuple(int(d) for d in self.zero_runs)


@dataclass
class CodedStream:
    """A coded symbol string: length header plus run/symbol body bits."""

    bits: np.ndarray
    n: int
    alphabet_size: int
    runs: int

    @property
    def total_bits(self):
        return int(self.bits.shape[0])

    @property
    def header_bits(self):
        return int(nat_code_length(self.n))

    @property
    def body_bits(self):
        return self.total_bits - self.header_bits


def run_length(omega: SymbolString) -> RunString:
    """Zero-run digits of a symbol string (the coder's intermediate form)."""
    sym = omega.symbols
    nz = np.flatnonzero(sym)
    runs = np.diff(nz, prepend=-1) - 1
    trailing = sym.shape[0] - (int(nz[-1]) + 1) if nz.size else sym.shape[0]
    return RunString(runs.astype(np.int64), sym[nz].astype(np.int16),
                     int(trailing), omega.alphabet_size)


def trunc_k(rs: RunString, k) -> RunString:
    """Clip every zero-run digit at k, keeping symbols and digit count."""
    k = int(k)
    if k < 1:
        raise DomainError("need k >= 1")
    return RunString(np.minimum(rs.zero_runs, k), rs.symbols.copy(),
                     rs.trailing_zeros, rs.alphabet_size)


def _encode_runs(rs: RunString, n) -> np.ndarray:
    w = symbol_bit_width(rs.alphabet_size)
    pieces = [prefix_encode_nat(n)]
    for d, s in zip(rs.zero_runs, rs.symbols):
        pieces.append(prefix_encode_nat(int(d)))
        if w:
            sval = int(s) - 1
            sym_bits = np.empty(w, dtype=np.uint8)
            for i in range(w):
                sym_bits[i] = (sval >> (w - 1 - i)) & 1
            pieces.append(sym_bits)
    return np.concatenate(pieces) if len(pieces) > 1 else pieces[0]


def encode(omega: SymbolString) -> CodedStream:
    """Losslessly code a symbol string; trailing zeros ride on the header."""
    rs = run_length(omega)
    bits = _encode_runs(rs, len(omega))
    return CodedStream(bits, len(omega), omega.alphabet_size, rs.passages)


def decode(stream: CodedStream) -> SymbolString:
    """Invert :func:`encode`; exact, including trailing zeros."""
    bits = np.asarray(stream.bits, dtype=np.uint8)
    n, pos = prefix_decode_nat(bits, 0)
    if n != stream.n:
        raise MalformedStreamError(
            f"stream header declares n={n} but the stream says n={stream.n}")
    w = symbol_bit_width(stream.alphabet_size)
    out = np.zeros(n, dtype=np.int16)
    produced = 0
    total = bits.shape[0]
    while pos < total:
        run, pos = prefix_decode_nat(bits, pos)
        if w:
            if pos + w > total:
                raise MalformedStreamError("truncated symbol bits")
            sval = 0
            for i in range(w):
                sval = (sval << 1) | int(bits[pos + i])
            pos += w
            symbol = sval + 1
            if symbol >= stream.alphabet_size:
                raise MalformedStreamError(
                    f"symbol index {symbol} outside alphabet of size "
                    f"{stream.alphabet_size}")
        else:
            symbol = 1
        if produced + run + 1 > n:
            raise MalformedStreamError("reconstructed length exceeds the header")
        produced += run
        out[produced] = symbol
        produced += 1
    return SymbolString(out, stream.alphabet_size, validate=False)


def information_length(omega: SymbolString) -> int:
    """Body bit length of the coded string (the information value).

    Equal to sum_j (2*floor(log2(1 + run_j)) + 1) plus the fixed symbol bits;
    excludes the length header, so an all-zero string scores 0.
    """
    sym = omega.symbols
    nz = np.flatnonzero(sym)
    if nz.size == 0:
        return 0
    runs = np.diff(nz, prepend=-1) - 1
    w = symbol_bit_width(omega.alphabet_size)
    return int(np.sum(nat_code_length(runs))) + int(nz.size) * w


def information_length_of_runs(rs: RunString) -> int:
    """Information value of an explicit run string (used by truncation)."""
    w = symbol_bit_width(rs.alphabet_size)
    if rs.zero_runs.size == 0:
        return 0
    return int(np.sum(nat_code_length(rs.zero_runs))) + rs.passages * w


class BoundsCheck(NamedTuple):
    lower: float
    information: int
    upper: float
    ok: bool


def verify_bounds(omega: SymbolString) -> BoundsCheck:
    """Two-sided passage-count bounds on the information value (binary only).

    With N nonzero symbols out of n, the body length I is squeezed between
    N + 2 log2(n - N + 1) and N + 2 N log2(n/N) up to an additive constant
    C = 2*floor(log2(n+1)) + 3 that covers trailing-run and integer-part
    slack (the extreme cases N = 0 and N = n are handled directly).
    """
    if omega.alphabet_size != 2:
        raise DomainError("bounds are stated for binary strings")
    n = len(omega)
    passages = int(np.count_nonzero(omega.symbols))
    info = information_length(omega)
    if passages == 0:
        lower = upper = 2.0 * math.log2(n + 1)
    elif passages == n:
        lower = upper = float(n)
    else:
        lower = passages + 2.0 * math.log2(n - passages + 1)
        upper = passages + 2.0 * passages * math.log2(n / passages)
    slack = 2 * math.floor(math.log2(n + 1)) + 3
    ok = (lower - slack) <= info <= (upper + slack)
    return BoundsCheck(lower, info, upper, ok)


# ---------------------------------------------------------------------------
# stream files
# ---------------------------------------------------------------------------


def write_stream(stream: CodedStream, path):
    """Write magic, alphabet byte, then the bit stream padded with zero bits.

    The on-disk bit stream carries one extra codeword after the length
    header: the number of coded runs.  Without it a padded file would be
    ambiguous — a trailing run of zero-bits is indistinguishable from
    padding once the byte boundary is reached.
    """
    if stream.alphabet_size > 255:
        raise DomainError("stream files support alphabets up to 255 symbols")
    hlen = stream.header_bits
    file_bits = np.concatenate([
        stream.bits[:hlen],
        prefix_encode_nat(stream.runs),
        stream.bits[hlen:],
    ])
    with open(path, "wb") as fh:
        fh.write(STREAM_MAGIC)
        fh.write(bytes([stream.alphabet_size]))
        fh.write(np.packbits(file_bits).tobytes())


def read_stream(path) -> CodedStream:
    """Read a stream file back into an in-memory coded stream."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:4] != STREAM_MAGIC:
        raise MalformedStreamError("bad magic bytes (not a coded-stream file)")
    if len(blob) < 5:
        raise MalformedStreamError("truncated stream file")
    alphabet_size = blob[4]
    if alphabet_size < 2:
        raise MalformedStreamError(f"bad alphabet size {alphabet_size}")
    bits = np.unpackbits(np.frombuffer(blob[5:], dtype=np.uint8))
    n, pos = prefix_decode_nat(bits, 0)
    runs, body_start = prefix_decode_nat(bits, pos)
    w = symbol_bit_width(alphabet_size)
    end = body_start
    for _ in range(runs):
        _, end = prefix_decode_nat(bits, end)
        end += w
        if end > bits.shape[0]:
            raise MalformedStreamError("truncated stream body")
    stream_bits = np.concatenate([bits[:pos], bits[body_start:end]])
    return CodedStream(stream_bits, n, alphabet_size, runs)


# ---------------------------------------------------------------------------
# batch interfaces (hot paths; dispatched to the active kernel)
# ---------------------------------------------------------------------------


def encode_many(strings: Sequence[SymbolString]) -> list[CodedStream]:
    """Code a batch of strings through the active kernel implementation."""
    from . import _kernels

    if not strings:
        return []
    offsets = np.zeros(len(strings) + 1, dtype=np.int64)
    for i, s in enumerate(strings):
        offsets[i + 1] = offsets[i] + len(s)
    concat = np.empty(int(offsets[-1]), dtype=np.int16)
    alphabets = np.empty(len(strings), dtype=np.int16)
    for i, s in enumerate(strings):
        concat[offsets[i]:offsets[i + 1]] = s.symbols
        alphabets[i] = s.alphabet_size
    bits_concat, bit_offsets, runs = _kernels.active.encode_batch(
        concat, offsets, alphabets)
    out = []
    for i, s in enumerate(strings):
        out.append(CodedStream(
            bits_concat[bit_offsets[i]:bit_offsets[i + 1]],
            len(s), s.alphabet_size, int(runs[i])))
    return out


def decode_many(streams: Sequence[CodedStream]) -> list[SymbolString]:
    """Decode a batch of streams through the active kernel implementation."""
    from . import _kernels

    if not streams:
        return []
    bit_offsets = np.zeros(len(streams) + 1, dtype=np.int64)
    for i, st in enumerate(streams):
        bit_offsets[i + 1] = bit_offsets[i] + st.total_bits
    bits_concat = np.empty(int(bit_offsets[-1]), dtype=np.uint8)
    ns = np.empty(len(streams), dtype=np.int64)
    alphabets = np.empty(len(streams), dtype=np.int16)
    for i, st in enumerate(streams):
        bits_concat[bit_offsets[i]:bit_offsets[i + 1]] = st.bits
        ns[i] = st.n
        alphabets[i] = st.alphabet_size
    sym_concat, sym_offsets = _kernels.active.decode_batch(
        bits_concat, bit_offsets, ns, alphabets)
    return [
        SymbolString(sym_concat[sym_offsets[i]:sym_offsets[i + 1]],
                     int(alphabets[i]), validate=False)
        for i in range(len(streams))
    ]
