"""Symbolic orbits of interval maps over finite interval partitions.

A partition splits [0, 1] into cells I_0 = [0, b_1], I_j = (b_j, b_{j+1}];
symbol 0 always labels the cell containing the indifferent fixed point, which
is what gives the run-length coder its semantics.  The symbol string of an
orbit records the cell index of every iterate.
"""

from __future__ import annotations

import math
from bisect import bisect_left
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ParseError
from .maps import MapSpec, _mp_step, _resolve_laminar, pl_apply

_SYMBOL_CHARS = "0123456789ABCDEFGHIJKLMNOPQRSTUVWXYZ"


@dataclass(frozen=True)
class Partition:
    """Ordered interior breakpoints 0 < b_1 < ... < b_{N-1} < 1.

    The leftmost cell [0, b_1] carries symbol 0 and contains the fixed
    point by construction; cells are right-closed, so an orbit value equal
    to a breakpoint belongs to the lower cell.
    """

    breakpoints: tuple

    def __post_init__(self):
        bps = tuple(float(b) for b in self.breakpoints)
        if len(bps) < 1:
            raise DomainError("a partition needs at least one breakpoint")
        if any(not (0.0 < b < 1.0) or not math.isfinite(b) for b in bps):
            raise DomainError("breakpoints must lie strictly inside (0, 1)")
        if any(b2 <= b1 for b1, b2 in zip(bps, bps[1:])):
            raise DomainError("breakpoints must be strictly increasing")
        object.__setattr__(self, "breakpoints", bps)

    @classmethod
    def from_text(cls, text):
        """Parse a partition literal like '0.618' or '0.3,0.618'."""
        text = text.strip()
        if text.startswith("Z="):
            text = text[2:]
        try:
            values = tuple(float(tok) for tok in text.split(",") if tok.strip())
        except ValueError:
            raise ParseError(f"bad partition literal {text!r}") from None
        if not values:
            raise ParseError("empty partition literal")
        return cls(values)

    @property
    def alphabet_size(self):
        return len(self.breakpoints) + 1

    @property
    def is_binary(self):
        return len(self.breakpoints) == 1

    def breaks_array(self):
        return np.asarray(self.breakpoints, dtype=np.float64)

    def symbol_of(self, x):
        """Cell index of x: the number of breakpoints strictly below x."""
        if not (0.0 <= x <= 1.0):
            raise DomainError(f"point must lie in [0, 1], got {x!r}")
        return bisect_left(self.breakpoints, x)

    def describe(self):
        return ",".join(f"{b:g}" for b in self.breakpoints)


class SymbolString:
    """A finite symbol sequence over the alphabet {0, ..., alphabet_size-1}."""

    __slots__ = ("symbols", "alphabet_size", "boundary_hits")

    def __init__(self, symbols, alphabet_size, boundary_hits=0, validate=True):
        symbols = np.asarray(symbols, dtype=np.int16)
        alphabet_size = int(alphabet_size)
        if validate:
            if alphabet_size < 2:
                raise DomainError("alphabet needs at least two symbols")
            if symbols.size and (symbols.min() < 0
                                 or symbols.max() >= alphabet_size):
                raise DomainError("symbol out of range for the alphabet")
        self.symbols = symbols
        self.alphabet_size = alphabet_size
        self.boundary_hits = int(boundary_hits)

    @classmethod
    def from_text(cls, text, alphabet_size=None):
        """Parse a compact digit string such as '00010110' (bases up to 36)."""
        text = text.strip().upper()
        try:
            vals = [_SYMBOL_CHARS.index(ch) for ch in text]
        except ValueError:
            bad = next(ch for ch in text if ch not in _SYMBOL_CHARS)
            raise ParseError(f"bad symbol character {bad!r}") from None
        if alphabet_size is None:
            alphabet_size = max(vals, default=1) + 1
            alphabet_size = max(alphabet_size, 2)
        return cls(np.asarray(vals, dtype=np.int16), alphabet_size)

    def to_text(self):
        if self.alphabet_size > len(_SYMBOL_CHARS):
            raise DomainError("alphabet too large for compact text form")
        lut = np.frombuffer(_SYMBOL_CHARS.encode(), dtype=np.uint8)
        return lut[self.symbols].tobytes().decode()

    def __len__(self):
        return int(self.symbols.shape[0])

    def __eq__(self, other):
        if not isinstance(other, SymbolString):
            return NotImplemented
        return (self.alphabet_size == other.alphabet_size
                and np.array_equal(self.symbols, other.symbols))

    def __repr__(self):
        head = self.to_text() if len(self) <= 40 and self.alphabet_size <= 36 \
            else f"<{len(self)} symbols>"
        return f"SymbolString({head!r}, alphabet_size={self.alphabet_size})"


def default_partition(spec: MapSpec) -> Partition:
    """The two-cell partition at the expanding-branch point."""
    return Partition((spec.branch_point,))


def symbolize(x0, n, spec: MapSpec, partition: Partition | None = None) -> SymbolString:
    """Symbols of the first n iterates of x0 (the point itself included).

    Iteration follows the map spec's precision policy; exact breakpoint hits
    are resolved to the lower cell and counted in ``boundary_hits``.
    """
    n = int(n)
    if n < 1:
        raise DomainError("need n >= 1")
    if not (0.0 <= x0 <= 1.0) or not math.isfinite(x0):
        raise DomainError(f"x0 must lie in [0, 1], got {x0!r}")
    partition = partition or default_partition(spec)
    breaks = partition.breakpoints
    out = np.zeros(n, dtype=np.int16)
    hits = 0
    if spec.kind == "mp":
        thr = min(spec.effective_threshold(), spec.branch_point)
        mode = spec.precision.mode
        if mode != "plain" and breaks[0] <= thr:
            raise DomainError(
                "smallest breakpoint lies below the laminar threshold; use "
                "plain precision or a coarser partition")
        y = x0
        i = 0
        while i < n:
            if mode != "plain" and 0.0 < y < thr:
                seg, y2, _ = _resolve_laminar(y, n - i, spec, thr)
                i += seg  # all skipped symbols are 0 (the array is prefilled)
                if y2 is None:
                    break
                y = y2
                continue
            s = bisect_left(breaks, y)
            if s < len(breaks) and breaks[s] == y:
                hits += 1
            out[i] = s
            y = _mp_step(y, spec.z, spec.r)
            i += 1
    else:
        y = x0
        for i in range(n):
            s = bisect_left(breaks, y)
            if s < len(breaks) and breaks[s] == y:
                hits += 1
            out[i] = s
            y = pl_apply(y, spec) if y > 0.0 else 0.0
    return SymbolString(out, partition.alphabet_size, boundary_hits=hits,
                        validate=False)


def count_passages(omega: SymbolString, n=None) -> int:
    """Number of nonzero symbols among the first n (passages outside I_0)."""
    if n is None:
        n = len(omega)
    n = int(n)
    if n < 0 or n > len(omega):
        raise DomainError(f"prefix length {n} out of range for {len(omega)} symbols")
    return int(np.count_nonzero(omega.symbols[:n]))
