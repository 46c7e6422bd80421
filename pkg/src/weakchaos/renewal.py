"""Renewal chain attached to a piecewise-linear intermittent map.

A PL map is determined by a strictly decreasing positive sequence eps_k -> 0
(with eps_{-1} = 1 by convention).  The interval (eps_{k-1}, eps_{k-2}] is the
k-th level set of the first-passage time, with length ell_k; under Lebesgue
measure the symbolic dynamics of the map is an infinite-state Markov chain
whose state-1 row is the distribution (ell_k) and whose other rows move
deterministically one state down.  This module provides the sequence
families, the exact chain quantities (mean recurrence time, invariant
measure, regime classification, induced-map entropy) and a seeded Monte
Carlo sampler for ensembles of chain paths.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass

import mpmath
import numpy as np

from .errors import (
    DomainError,
    InconclusiveTailError,
    ParseError,
    PassageBudgetError,
    UnsupportedRegimeError,
)

_E2 = math.exp(2.0)
_MAX_INDEX = 1 << 62  # cell indexes beyond this are treated as unreachable

#: number of leading terms validated against the defining inequalities
VALIDATION_TERMS = 1000


def _codeword_length(k):
    """Bit cost of recording one renewal interval k >= 1: 2*floor(log2 k) + 1."""
    kk = np.asarray(k, dtype=np.int64)
    expo = np.frexp(kk.astype(np.float64))[1] - 1  # exact floor(log2) for k < 2**53
    return 2 * expo.astype(np.int64) + 1


class EpsilonSequence:
    """Cell-boundary sequence of a piecewise-linear intermittent map.

    ``eps(k)`` is defined for k >= -1 with eps(-1) == 1; it is strictly
    decreasing, positive and converges to 0.  Cell k (k >= 1) is the interval
    (eps(k-1), eps(k-2)] with length ``ell(k) = eps(k-2) - eps(k-1)``, and the
    lengths must themselves decrease: ell(k+1)/ell(k) < 1 for all k.

    Construct through the factories :meth:`geometric`, :meth:`power`,
    :meth:`logarithmic`, :meth:`from_table` or :meth:`from_file`.
    """

    def __init__(self, kind, params, table=None, tail=None):
        self.kind = kind
        self.params = dict(params)
        self._table = None if table is None else np.asarray(table, dtype=np.float64)
        self.tail = tail  # ("pow", alpha, A) or None, tables only
        self._cache = np.array([1.0], dtype=np.float64)  # eps(-1..len-2)
        self._cache_lock = threading.Lock()
        self._validate()

    # -- construction ------------------------------------------------------

    @classmethod
    def geometric(cls, a):
        """eps_k = a**-(k+1) for a > 1; cell lengths (a-1) * a**-k."""
        if not (a > 1.0) or not math.isfinite(a):
            raise DomainError(f"geometric family needs a > 1, got {a}")
        return cls("geometric", {"a": float(a)})

    @classmethod
    def power(cls, alpha):
        """eps_k = (k+2)**-alpha for alpha > 0 (so eps(-1) = 1 exactly)."""
        if not (alpha > 0.0) or not math.isfinite(alpha):
            raise DomainError(f"power family needs alpha > 0, got {alpha}")
        return cls("power", {"alpha": float(alpha)})

    @classmethod
    def logarithmic(cls):
        """eps_k = 1/log(k + e**2) for k >= 0, eps(-1) = 1 by convention."""
        return cls("logarithmic", {})

    @classmethod
    def from_table(cls, values, tail=None):
        """Explicit eps_0, eps_1, ... values plus an optional declared tail.

        ``tail`` is either None or ("pow", alpha, A) meaning eps_k = A*k**-alpha
        for indexes past the end of the table.
        """
        values = np.asarray(list(values), dtype=np.float64)
        if values.size == 0:
            raise DomainError("explicit table needs at least one value")
        return cls("table", {}, table=values, tail=tail)

    @classmethod
    def from_file(cls, path):
        """Load an explicit table: a 'tail: ...' header line, one value per line."""
        tail = None
        values = []
        with open(path, "r", encoding="utf-8") as fh:
            lines = fh.read().splitlines()
        if not lines:
            raise ParseError("empty cell-sequence file", line=1)
        head = lines[0].strip()
        if not head.startswith("tail:"):
            raise ParseError("first line must declare a tail rule ('tail: ...')", line=1)
        rule = head[len("tail:"):].strip()
        if rule == "none":
            tail = None
        elif rule.startswith("pow"):
            fields = {}
            for tok in rule[len("pow"):].replace(",", " ").split():
                if "=" not in tok:
                    raise ParseError(f"bad tail token {tok!r}", line=1)
                key, _, val = tok.partition("=")
                fields[key.strip()] = float(val)
            if "alpha" not in fields:
                raise ParseError("pow tail needs alpha=...", line=1)
            tail = ("pow", fields["alpha"], fields.get("A", 1.0))
        else:
            raise ParseError(f"unknown tail rule {rule!r}", line=1)
        for i, raw in enumerate(lines[1:], start=2):
            raw = raw.strip()
            if not raw or raw.startswith("#"):
                continue
            try:
                values.append(float(raw))
            except ValueError:
                raise ParseError(f"bad cell value {raw!r}", line=i) from None
        return cls.from_table(values, tail=tail)

    # -- evaluation --------------------------------------------------------

    def eps(self, k):
        """eps_k for an integer k >= -1 (scalar)."""
        if k < -1:
            raise DomainError("eps defined for k >= -1 only")
        if k == -1:
            return 1.0
        kind = self.kind
        if kind == "geometric":
            return self.params["a"] ** (-(k + 1))
        if kind == "power":
            return (k + 2.0) ** (-self.params["alpha"])
        if kind == "logarithmic":
            return 1.0 / math.log(k + _E2)
        # table
        if k < self._table.size:
            return float(self._table[k])
        if self.tail is None:
            raise InconclusiveTailError(
                f"cell sequence table ends at index {self._table.size - 1} and "
                "declares no tail rule"
            )
        _, alpha, amp = self.tail
        return amp * float(k) ** (-alpha)

    def eps_array(self, ks):
        """Vectorised eps over an integer array (entries >= -1)."""
        ks = np.asarray(ks, dtype=np.int64)
        out = np.empty(ks.shape, dtype=np.float64)
        kind = self.kind
        if kind == "geometric":
            out[:] = self.params["a"] ** (-(ks + 1.0))
        elif kind == "power":
            out[:] = (ks + 2.0) ** (-self.params["alpha"])
        elif kind == "logarithmic":
            out[:] = 1.0 / np.log(ks + _E2)
        else:
            in_table = (ks >= 0) & (ks < self._table.size)
            out[in_table] = self._table[ks[in_table]]
            beyond = ks >= self._table.size
            if np.any(beyond):
                if self.tail is None:
                    raise InconclusiveTailError(
                        f"cell sequence table ends at index "
                        f"{self._table.size - 1} and declares no tail rule")
                _, alpha, amp = self.tail
                out[beyond] = amp * ks[beyond].astype(np.float64) ** (-alpha)
        out[ks == -1] = 1.0
        return out

    def ell(self, k):
        """Length of cell k >= 1: eps(k-2) - eps(k-1)."""
        if k < 1:
            raise DomainError("cells are indexed from 1")
        return self.eps(k - 2) - self.eps(k - 1)

    def ell_array(self, ks):
        ks = np.asarray(ks, dtype=np.int64)
        return self.eps_array(ks - 2) - self.eps_array(ks - 1)

    def F(self, x):
        """Distribution function of the renewal interval: 1 - eps(floor(x) - 1)."""
        k = int(math.floor(x))
        if k < 1:
            return 0.0
        return 1.0 - self.eps(k - 1)

    # -- cell lookup -------------------------------------------------------

    def _cached_eps(self, upto):
        """eps(-1..upto) as an array, extended lazily and thread-safely."""
        cache = self._cache
        if cache.size >= upto + 2:
            return cache
        with self._cache_lock:
            cache = self._cache
            if cache.size < upto + 2:
                new_size = max(upto + 2, 2 * cache.size)
                ks = np.arange(-1, new_size - 1, dtype=np.int64)
                self._cache = self.eps_array(ks)
            return self._cache

    def cell_index(self, x):
        """Smallest k >= 1 with eps(k-1) < x, i.e. the cell containing x.

        Exact with respect to the floating-point eps values.  Raises
        :class:`PassageBudgetError` when the index would exceed 2**62 (the
        point is numerically indistinguishable from 0 for orbit purposes).
        """
        if not (0.0 < x <= 1.0):
            raise DomainError(f"cell lookup needs x in (0, 1], got {x}")
        kind = self.kind
        if kind == "geometric":
            a = self.params["a"]
            guess = int(math.floor(-math.log(x) / math.log(a))) + 1
        elif kind == "power":
            alpha = self.params["alpha"]
            t = x ** (-1.0 / alpha)
            if t > _MAX_INDEX:
                raise PassageBudgetError(
                    f"cell index for x={x!r} exceeds the supported depth")
            guess = int(math.floor(t - 1.0)) + 1
        elif kind == "logarithmic":
            inv = 1.0 / x
            if inv > math.log(_MAX_INDEX):
                raise PassageBudgetError(
                    f"cell index for x={x!r} exceeds the supported depth")
            guess = int(math.floor(math.exp(inv) - _E2 + 1.0)) + 1
        else:
            return self._cell_index_table(x)
        guess = max(guess, 1)
        # fix any off-by-one from the float estimate using exact comparisons:
        # want the smallest k >= 1 with eps(k-1) < x
        while guess > 1 and self.eps(guess - 2) < x:
            guess -= 1
        while not self.eps(guess - 1) < x:
            guess += 1
        return guess

    def _cell_index_table(self, x):
        table = self._table
        if x > table[-1]:
            # inside the tabulated range: want smallest k with eps(k-1) < x;
            # arr[i] = eps(i-1) over i = 0..len(table)
            arr = self._cached_eps(table.size - 1)
            lo, hi = 1, arr.size - 1
            # arr is strictly decreasing; binary search for first arr[k] < x
            while lo < hi:
                mid = (lo + hi) // 2
                if arr[mid] < x:
                    hi = mid
                else:
                    lo = mid + 1
            return int(lo)
        if self.tail is None:
            raise InconclusiveTailError(
                "point lies below the tabulated cells and no tail rule is declared")
        _, alpha, amp = self.tail
        t = (amp / x) ** (1.0 / alpha)
        if t > _MAX_INDEX:
            raise PassageBudgetError(
                f"cell index for x={x!r} exceeds the supported depth")
        guess = max(int(math.floor(t)) + 1, table.size + 1)
        while guess > table.size + 1 and self.eps(guess - 2) < x:
            guess -= 1
        while not self.eps(guess - 1) < x:
            guess += 1
        return guess

    # -- sampling ----------------------------------------------------------

    def intervals_from_uniform(self, u, clip):
        """Map uniforms in [0, 1) to renewal intervals, clipped to ``clip``.

        The interval law is P(K = k) = ell(k); inversion uses
        K = min{k >= 1 : eps(k-1) <= 1-u}.  Values that would exceed ``clip``
        are reported as ``clip`` (callers only use that they overshoot the
        horizon, never their exact value).
        """
        u = np.asarray(u, dtype=np.float64)
        clip = int(clip)
        kind = self.kind
        if kind == "geometric":
            lna = math.log(self.params["a"])
            raw = np.ceil(np.log1p(-u) / (-lna))
        elif kind == "power":
            alpha = self.params["alpha"]
            raw = np.ceil((1.0 - u) ** (-1.0 / alpha) - 1.0)
        elif kind == "logarithmic":
            y = 1.0 / (1.0 - u)
            y_cap = math.log(clip + _E2)
            raw = np.ceil(np.exp(np.minimum(y, y_cap)) - _E2 + 1.0)
            raw[y >= y_cap] = clip
        else:
            return self._intervals_from_uniform_table(u, clip)
        raw = np.where(np.isfinite(raw), raw, np.float64(clip))
        raw = np.minimum(raw, np.float64(clip))
        out = raw.astype(np.int64)
        np.maximum(out, 1, out=out)
        return out

    def _intervals_from_uniform_table(self, u, clip):
        table = self._table
        arr = self._cached_eps(table.size - 1)  # arr[i] = eps(i-1), i = 0..K+1
        v = 1.0 - u
        # first index i with arr[i] <= v  (arr strictly decreasing)
        idx = np.searchsorted(-arr, -v, side="left").astype(np.int64)
        out = np.maximum(idx, 1)
        deep = idx >= arr.size  # below the tabulated range
        if np.any(deep):
            if self.tail is None:
                raise InconclusiveTailError(
                    "sampling reached below the tabulated cells and no tail "
                    "rule is declared")
            _, alpha, amp = self.tail
            vv = v[deep]
            raw = np.ceil((amp / vv) ** (1.0 / alpha)) + 1.0
            raw = np.where(np.isfinite(raw), raw, np.float64(clip))
            out[deep] = np.maximum(raw, float(table.size + 1)).astype(np.int64)
        np.minimum(out, clip, out=out)
        return out

    def sample_intervals(self, rng, size, clip):
        """Draw renewal intervals from a Generator, clipped to ``clip``.

        The geometric family uses the generator's native geometric sampler
        (cell lengths are exactly geometric with p = 1 - 1/a); other
        families invert uniforms.  The compiled chain kernel consumes the
        generator the same way, so both implementations see identical draws.
        """
        if self.kind == "geometric":
            a = self.params["a"]
            out = rng.geometric(1.0 - 1.0 / a, size=size).astype(
                np.int64, copy=False)
            np.minimum(out, int(clip), out=out)
            return out
        return self.intervals_from_uniform(rng.random(size), clip)

    def neg_log_cell_length_from_uniform(self, u):
        """-(log ell(K)) for K drawn by inversion from uniforms, overflow-safe.

        Used by the induced-entropy Monte Carlo: the value equals the log
        derivative of the induced map on the sampled cell.
        """
        u = np.asarray(u, dtype=np.float64)
        kind = self.kind
        if kind == "geometric":
            a = self.params["a"]
            k = self.intervals_from_uniform(u, _MAX_INDEX).astype(np.float64)
            return -math.log(a - 1.0) + (k + 0.0) * math.log(a)
        if kind == "logarithmic":
            y = 1.0 / (1.0 - u)  # ~ log of the sampled index
            k = np.where(y < 700.0, np.exp(np.minimum(y, 700.0)) - _E2 + 1.0, np.inf)
            out = np.empty(u.shape, dtype=np.float64)
            small = k < 1e15
            if np.any(small):
                ks = np.maximum(np.ceil(k[small]), 1.0)
                e2m2 = np.where(ks >= 2, 1.0 / np.log(ks + _E2 - 2.0), 1.0)
                e2m1 = 1.0 / np.log(ks + _E2 - 1.0)
                out[small] = -np.log(e2m2 - e2m1)
            big = ~small
            # ell_k ~ 1/(k log^2 k): -log ell ~ log k + 2 log log k = y + 2 log y
            out[big] = y[big] + 2.0 * np.log(y[big])
            return out
        if kind == "power":
            alpha = self.params["alpha"]
            k = np.maximum(np.ceil((1.0 - u) ** (-1.0 / alpha) - 1.0), 1.0)
            out = np.empty(u.shape, dtype=np.float64)
            small = k < 1e14
            ks = k[small]
            out[small] = -np.log(ks ** (-alpha) - (ks + 1.0) ** (-alpha))
            # ell_k ~ alpha k^-(1+alpha)
            out[~small] = (1.0 + alpha) * np.log(k[~small]) - math.log(alpha)
            return out
        k = self.intervals_from_uniform(u, _MAX_INDEX)
        return -np.log(self.ell_array(k))

    # -- validation --------------------------------------------------------

    def _validate(self):
        n_check = VALIDATION_TERMS
        if self.kind == "table":
            n_check = min(n_check, self._table.size)
            if self.tail is not None:
                _, alpha, amp = self.tail
                if not (alpha > 0 and amp > 0):
                    raise DomainError("pow tail needs alpha > 0 and A > 0")
                k_seam = self._table.size
                if not amp * k_seam ** (-alpha) < self._table[-1]:
                    raise DomainError(
                        "tail rule does not continue the table decreasingly")
        ks = np.arange(-1, n_check, dtype=np.int64)
        vals = self.eps_array(ks)
        if self.kind != "table":
            # analytic families may underflow float range at large depth;
            # validate the representable prefix only
            alive = vals > 1e-305
            if not np.all(alive):
                first = int(np.argmin(alive))
                if first < 8:
                    raise DomainError("cell sequence underflows immediately")
                vals = vals[:first]
        if not np.all(vals > 0.0):
            raise DomainError("cell sequence must stay positive")
        if not np.all(np.diff(vals) < 0.0):
            raise DomainError("cell sequence must be strictly decreasing")
        lengths = -np.diff(vals)  # lengths[i] = ell(i+1)
        if not np.all(lengths[1:] < lengths[:-1]):
            raise DomainError(
                "cell lengths must be strictly decreasing (ratio condition)")
        # telescoping mass check at the truncation point
        mass = float(np.sum(lengths)) + float(vals[-1])
        if abs(mass - 1.0) > 1e-10:
            raise DomainError(
                f"cell lengths plus tail bound must sum to 1, got {mass!r}")

    # -- misc ----------------------------------------------------------------

    def describe(self):
        if self.kind == "geometric":
            return f"geometric(a={self.params['a']:g})"
        if self.kind == "power":
            return f"power(alpha={self.params['alpha']:g})"
        if self.kind == "logarithmic":
            return "logarithmic"
        tail = "none" if self.tail is None else (
            f"pow alpha={self.tail[1]:g} A={self.tail[2]:g}")
        return f"table({self._table.size} cells, tail: {tail})"

    def __repr__(self):
        return f"EpsilonSequence.{self.describe()}"


# ---------------------------------------------------------------------------
# analytic chain quantities
# ---------------------------------------------------------------------------


def mean_recurrence_time(eps: EpsilonSequence):
    """Mean return time to state 1: t0 = sum_k k*ell(k) = sum_{j>=-1} eps(j).

    Returns math.inf when the series diverges; raises
    :class:`InconclusiveTailError` for tables without a declared tail.
    """
    kind = eps.kind
    if kind == "geometric":
        a = eps.params["a"]
        return a / (a - 1.0)
    if kind == "power":
        alpha = eps.params["alpha"]
        if alpha <= 1.0:
            return math.inf
        return float(mpmath.zeta(alpha))
    if kind == "logarithmic":
        return math.inf
    if eps.tail is None:
        raise InconclusiveTailError(
            "mean recurrence time of a table needs a declared tail rule")
    _, alpha, amp = eps.tail
    if alpha <= 1.0:
        return math.inf
    table = eps._table
    head = 1.0 + float(np.sum(table))  # eps(-1) + eps(0 .. size-1)
    k0 = table.size  # first index governed by the tail rule
    # tail: sum_{k >= k0} A k^-alpha, exact via Hurwitz zeta
    return head + amp * float(mpmath.zeta(alpha, k0))


def invariant_measure(k, eps: EpsilonSequence, normalized=False):
    """Stationary weight of chain state k: pbar(k) = sum_{n>=0} ell(n+k) = eps(k-2).

    With ``normalized=True`` the probability pbar(k)/t0 is returned (finite
    mean recurrence time required).
    """
    if k < 1:
        raise DomainError("chain states are indexed from 1")
    raw = eps.eps(k - 2)
    if not normalized:
        return raw
    t0 = mean_recurrence_time(eps)
    if not math.isfinite(t0):
        raise DomainError(
            "no normalized invariant measure: mean recurrence time is infinite")
    return raw / t0


class TransitionDistribution:
    """One row of the chain's transition kernel.

    State k > 1 moves to k-1 with probability one; state 1 jumps to state k
    with probability ell(k).
    """

    def __init__(self, state, eps):
        if state < 1:
            raise DomainError("chain states are indexed from 1")
        self.state = int(state)
        self.eps = eps

    def prob(self, k):
        if k < 1:
            return 0.0
        if self.state > 1:
            return 1.0 if k == self.state - 1 else 0.0
        return self.eps.ell(k)

    def items(self, max_states=64, min_mass=1e-12):
        """Leading (state, probability) pairs; stops once the remaining mass
        (= eps of the last boundary) drops below ``min_mass``."""
        if self.state > 1:
            yield (self.state - 1, 1.0)
            return
        for k in range(1, max_states + 1):
            p = self.eps.ell(k)
            yield (k, p)
            if self.eps.eps(k - 1) < min_mass:
                return

    def sample(self, rng, size=None):
        if self.state > 1:
            if size is None:
                return self.state - 1
            return np.full(size, self.state - 1, dtype=np.int64)
        u = rng.random(size if size is not None else 1)
        out = self.eps.intervals_from_uniform(u, _MAX_INDEX)
        return int(out[0]) if size is None else out


def transition_distribution(state, eps: EpsilonSequence) -> TransitionDistribution:
    """Distribution of the next state given the current one."""
    return TransitionDistribution(state, eps)


# ---------------------------------------------------------------------------
# regime classification
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RegimePrediction:
    """Predicted growth law for the expected passage count E[N_n]."""

    regime: str                       # "linear" | "power" | "logarithmic"
    t0: float                         # mean recurrence time (may be inf)
    alpha: float | None = None        # tail exponent of F for the power regime
    amplitude: float | None = None    # A in F(x) ~ 1 - A x^-alpha
    coefficient: float | None = None  # prefactor of the predicted law
    entropy: float | None = None      # induced-map entropy H (nats; may be inf)
    description: str = ""

    def predicted_mean_passages(self, n):
        n = np.asarray(n, dtype=np.float64)
        if self.regime == "linear":
            return n / self.t0
        if self.regime == "power":
            return self.coefficient * n ** self.alpha
        return np.log(n)

    def chaos_index(self):
        """Asymptotic power-law exponent implied by the regime."""
        if self.regime == "linear":
            return 1.0
        if self.regime == "power":
            return self.alpha
        return 0.0

    def to_dict(self):
        return {
            "regime": self.regime,
            "t0": self.t0,
            "alpha": self.alpha,
            "amplitude": self.amplitude,
            "coefficient": self.coefficient,
            "entropy": self.entropy,
            "chaos_index": self.chaos_index(),
            "description": self.description,
        }


def classify(eps: EpsilonSequence) -> RegimePrediction:
    """Predict the E[N_n] growth regime from the tail of the cell sequence.

    Geometric tails and power tails with exponent above 1 have a finite mean
    recurrence time and a linear law n/t0.  Power tails with exponent in
    (0, 1) give the sublinear law sin(pi*a)/(A*a*pi) * n^a.  Logarithmic
    decay gives log n.  The boundary exponent 1 has no prediction.
    """
    kind = eps.kind
    H = induced_entropy_pl(eps)
    if kind == "geometric":
        t0 = mean_recurrence_time(eps)
        return RegimePrediction(
            "linear", t0, coefficient=1.0 / t0, entropy=H,
            description=f"E[N_n] ~ n/{t0:g}")
    if kind == "logarithmic":
        return RegimePrediction(
            "logarithmic", math.inf, entropy=H, description="E[N_n] ~ log n")
    if kind == "power":
        alpha, amp = eps.params["alpha"], 1.0
    elif eps.tail is not None:
        _, alpha, amp = eps.tail
    else:
        raise InconclusiveTailError(
            "regime classification of a table needs a declared tail rule")
    if alpha == 1.0:
        raise UnsupportedRegimeError(
            "tail exponent exactly 1 is a boundary case with no predicted law")
    if alpha > 1.0:
        t0 = mean_recurrence_time(eps)
        return RegimePrediction(
            "linear", t0, alpha=alpha, amplitude=amp, coefficient=1.0 / t0,
            entropy=H, description=f"E[N_n] ~ n/{t0:g}")
    coeff = math.sin(alpha * math.pi) / (amp * alpha * math.pi)
    return RegimePrediction(
        "power", math.inf, alpha=alpha, amplitude=amp, coefficient=coeff,
        entropy=H,
        description=f"E[N_n] ~ {coeff:g} * n^{alpha:g}")


# ---------------------------------------------------------------------------
# induced-map entropy
# ---------------------------------------------------------------------------


def _power_tail_entropy_bound(amp, alpha, m):
    """Upper bound for sum_{k>m} ell_k * (-log ell_k) when eps_j ~ A j^-alpha.

    Uses ell_k <= A*alpha*(k-2)^-(1+alpha) and -log ell_k <= (1+alpha)log(k)
    - log(A*alpha) + O(1), integrated from m-2.
    """
    m = float(m - 2)
    c = abs(math.log(amp * alpha)) + (1.0 + alpha) * math.log(2.0)
    i0 = m ** (-alpha) / alpha
    i1 = m ** (-alpha) * (math.log(m) / alpha + 1.0 / alpha ** 2)
    return amp * alpha * ((1.0 + alpha) * i1 + c * i0)


def induced_entropy_series(eps: EpsilonSequence, max_terms=1 << 21):
    """(value, tail_bound, terms) for H = -sum_k ell(k) log ell(k), in nats.

    Exact closed form for the geometric family; analytic divergence for the
    logarithmic family (returns (inf, 0, 0)); otherwise a partial sum with an
    analytic bound on the discarded tail.
    """
    kind = eps.kind
    if kind == "geometric":
        a = eps.params["a"]
        t0 = a / (a - 1.0)
        return (-math.log(a - 1.0) + t0 * math.log(a), 0.0, 0)
    if kind == "logarithmic":
        # ell_k ~ 1/(k log^2 k) so the terms ~ 1/(k log k) sum to infinity
        return (math.inf, 0.0, 0)
    if kind == "power":
        alpha, amp = eps.params["alpha"], 1.0
    else:
        if eps.tail is None:
            raise InconclusiveTailError(
                "induced entropy of a table needs a declared tail rule")
        _, alpha, amp = eps.tail
        max_terms = max(int(max_terms), eps._table.size + 16)
    ks = np.arange(1, max_terms + 1, dtype=np.int64)
    lengths = eps.ell_array(ks)
    value = float(-np.sum(lengths * np.log(lengths)))
    bound = _power_tail_entropy_bound(amp, alpha, max_terms + 1)
    return (value, bound, int(max_terms))


def induced_entropy_pl(eps: EpsilonSequence):
    """Entropy H of the induced-map cell partition (nats); may be math.inf."""
    value, _bound, _terms = induced_entropy_series(eps)
    return value


# ---------------------------------------------------------------------------
# Monte Carlo chain sampling
# ---------------------------------------------------------------------------


@dataclass
class ChainPathSummary:
    """Summary of one sampled chain path."""

    n: int
    initial_state: int
    passages: int
    information_bits: int
    last_passage_time: int
    intervals_drawn: int


@dataclass
class ChainEnsemble:
    """Seeded ensemble of chain paths evaluated on a grid of horizons.

    ``passages[r, g]`` counts visits to state 1 in the first ``grid[g]`` steps
    of replica r; ``information_bits[r, g]`` is the run-length prefix-code bit
    cost of those visits.  ``occupation[r, j-1]`` counts the steps replica r
    spent in state j (within the largest horizon).  ``tau_hist[k]`` counts
    completed renewal intervals of length k across the ensemble, with the
    final slot collecting overflows.
    """

    grid: np.ndarray
    passages: np.ndarray
    information_bits: np.ndarray
    occupation: np.ndarray | None
    tau_hist: np.ndarray | None
    intervals_drawn: np.ndarray
    seed: int

    def merged_with(self, other: "ChainEnsemble") -> "ChainEnsemble":
        if not np.array_equal(self.grid, other.grid):
            raise ValueError("cannot merge ensembles on different grids")
        cat = lambda a, b: None if a is None else np.concatenate([a, b])
        hist = None
        if self.tau_hist is not None:
            hist = self.tau_hist + other.tau_hist
        return ChainEnsemble(
            self.grid,
            np.concatenate([self.passages, other.passages]),
            np.concatenate([self.information_bits, other.information_bits]),
            cat(self.occupation, other.occupation),
            hist,
            np.concatenate([self.intervals_drawn, other.intervals_drawn]),
            self.seed,
        )


def _replica_rng(seed, index):
    return np.random.Generator(
        np.random.PCG64(np.random.SeedSequence([int(seed), int(index)])))


def _sample_one_chain(eps, grid, horizon, rng, k_max, hist_max, kernels):
    """One replica: returns (counts, bits, occ, hist_counts, intervals_drawn)."""
    G = grid.shape[0]
    counts = np.zeros(G, dtype=np.int64)
    bits = np.zeros(G, dtype=np.int64)
    occ_bin = np.zeros(k_max + 2, dtype=np.int64) if k_max else None
    occ = np.zeros(k_max, dtype=np.int64) if k_max else None
    hist = np.zeros(hist_max + 2, dtype=np.int64) if hist_max else None
    occ_view = occ_bin if occ_bin is not None else _EMPTY_I64
    hist_view = hist if hist is not None else _EMPTY_I64
    if eps.kind == "geometric":
        # whole-replica kernel; draw-for-draw identical across implementations
        p = 1.0 - 1.0 / eps.params["a"]
        clip = int(horizon) + k_max + 3
        k_partial, s_partial, drawn = kernels.chain_run_geometric(
            rng, p, horizon, grid, counts, bits, occ_view, hist_view, clip)
        if occ is not None and k_partial > 0:
            lo = max(int(1 + s_partial - horizon), 1)
            hi = min(int(k_partial), k_max)
            if lo <= hi:
                occ[lo - 1:hi] += 1
    else:
        mean_iv = None
        if eps.kind == "power" and eps.params["alpha"] > 1.0:
            mean_iv = float(mpmath.zeta(eps.params["alpha"]))
        t = np.int64(-1)
        drawn = 0
        chunk = 256
        finished = False
        while not finished and t < horizon:
            remaining = int(horizon - t)
            if mean_iv is not None:
                need = int(remaining / mean_iv * 1.2) + 32
                chunk = min(max(need, 32), 1 << 20)
            else:
                chunk = min(chunk * 4, 1 << 20)
            clip = remaining + k_max + 2
            intervals = eps.sample_intervals(rng, chunk, clip)
            drawn += chunk
            t, finished, k_partial, s_partial = kernels.chain_process_chunk(
                intervals, t, horizon, grid, counts, bits, occ_view, hist_view)
            if finished and occ is not None and k_partial > 0:
                # partial descent: states 1 + s_partial - T for T in (t, horizon]
                lo = max(int(1 + s_partial - horizon), 1)
                hi = min(int(k_partial), k_max)
                if lo <= hi:
                    occ[lo - 1:hi] += 1
    if occ is not None:
        # completed interval of length k visits every state j <= k once
        suffix = np.cumsum(occ_bin[::-1])[::-1]
        occ += suffix[1:k_max + 1]
    return counts, bits, occ, hist, drawn


_EMPTY_I64 = np.zeros(0, dtype=np.int64)


def sample_chain_ensemble(
    eps: EpsilonSequence,
    n_grid,
    replicas,
    seed,
    k_max_occupation=0,
    tau_hist_max=0,
    threads=1,
    replica_start=0,
) -> ChainEnsemble:
    """Simulate ``replicas`` independent chain paths with per-replica seeding.

    The initial state is the cell of a Lebesgue-uniform point (probability
    ell(k)), matching an absolutely continuous start of the underlying map.
    Replica r uses the generator seeded by (seed, replica_start + r), so
    results do not depend on the thread count, and consecutive blocks merge
    into exactly the single full ensemble.
    """
    from . import _kernels

    kernels = _kernels.active
    grid = np.asarray(sorted(set(int(n) for n in np.atleast_1d(n_grid))), dtype=np.int64)
    if grid.size == 0 or grid[0] < 1:
        raise DomainError("n grid must contain integers >= 1")
    replicas = int(replicas)
    horizon = int(grid[-1]) - 1
    G = grid.shape[0]
    out_counts = np.zeros((replicas, G), dtype=np.int64)
    out_bits = np.zeros((replicas, G), dtype=np.int64)
    out_occ = (np.zeros((replicas, k_max_occupation), dtype=np.int64)
               if k_max_occupation else None)
    hist_total = (np.zeros(tau_hist_max + 2, dtype=np.int64)
                  if tau_hist_max else None)
    drawn = np.zeros(replicas, dtype=np.int64)

    def run_range(lo, hi):
        local_hist = (np.zeros(tau_hist_max + 2, dtype=np.int64)
                      if tau_hist_max else None)
        for rep in range(lo, hi):
            rng = _replica_rng(seed, replica_start + rep)
            counts, bits, occ, hist, nd = _sample_one_chain(
                eps, grid, horizon, rng, k_max_occupation, tau_hist_max, kernels)
            out_counts[rep] = counts
            out_bits[rep] = bits
            if occ is not None:
                out_occ[rep] = occ
            if hist is not None:
                local_hist += hist
            drawn[rep] = nd
        return local_hist

    threads = max(1, int(threads))
    if threads == 1 or replicas < 2:
        part = run_range(0, replicas)
        if hist_total is not None and part is not None:
            hist_total += part
    else:
        from concurrent.futures import ThreadPoolExecutor

        bounds = np.linspace(0, replicas, threads + 1, dtype=int)
        with ThreadPoolExecutor(max_workers=threads) as pool:
            futs = [pool.submit(run_range, int(a), int(b))
                    for a, b in zip(bounds[:-1], bounds[1:]) if a < b]
            for fut in futs:
                part = fut.result()
                if hist_total is not None and part is not None:
                    hist_total += part
    return ChainEnsemble(grid, out_counts, out_bits, out_occ, hist_total,
                         drawn, int(seed))


def sample_chain(n, eps: EpsilonSequence, seed):
    """One chain path of length n; returns (N_n, ChainPathSummary).

    Uses the same per-replica stream as replica 0 of
    :func:`sample_chain_ensemble`, so the passage count agrees with it.
    """
    n = int(n)
    if n < 1:
        raise DomainError("need n >= 1")
    rng = _replica_rng(seed, 0)
    horizon = n - 1
    t = -1
    passages = 0
    bits = 0
    last = -1
    drawn = 0
    k0 = None
    while True:
        chunk = 256
        intervals = eps.sample_intervals(rng, chunk, horizon - t + 2)
        drawn += chunk
        stop = False
        for k in intervals:
            k = int(k)
            if k0 is None:
                k0 = k
            t += k
            if t > horizon:
                stop = True
                break
            passages += 1
            bits += int(_codeword_length(k))
            last = t
        if stop:
            break
    summary = ChainPathSummary(
        n=n,
        initial_state=k0,
        passages=passages,
        information_bits=bits,
        last_passage_time=last,
        intervals_drawn=drawn,
    )
    return passages, summary
