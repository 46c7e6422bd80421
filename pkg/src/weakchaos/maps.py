"""Intermittent interval maps with an indifferent fixed point at 0.

Two families are supported: the smooth family T(x) = x + r*x**z (mod 1) with
exponent z > 1, whose branch point c solves c + r*c**z = 1, and piecewise
linear maps built from a decreasing cell sequence eps_k (module
:mod:`weakchaos.renewal`), where each cell (eps_k, eps_{k-1}] maps affinely
onto the next cell outward.  Besides single map steps, the module computes
first-passage times through the expanding branch, the level sets of the
passage time, and the induced (first-passage accelerated) map.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from ._kernels import laminar
from .errors import (
    ConvergenceError,
    DomainError,
    ParseError,
    PassageBudgetError,
)
from .renewal import EpsilonSequence

_EPS_MACH = float(np.finfo(np.float64).eps)

PRECISION_MODES = ("plain", "extended", "ode-approx")


@dataclass(frozen=True)
class PrecisionPolicy:
    """How laminar segments (orbit values below ``threshold``) are handled.

    plain       -- raw double precision; deep laminar orbits stall silently.
    extended    -- software floats with ``digits`` significant digits resolve
                   the segment exactly (the default).
    ode-approx  -- segment length estimated from the continuum flow; cheap
                   but biased, and flagged as such in ensemble metadata.

    ``threshold`` defaults to eps_mach**(1/(z-1)), the point where the
    increment r*x**z drops below the float spacing at x.
    """

    mode: str = "extended"
    threshold: float | None = None
    digits: int = 50

    def __post_init__(self):
        if self.mode not in PRECISION_MODES:
            raise DomainError(
                f"precision mode must be one of {PRECISION_MODES}, got {self.mode!r}")
        if self.threshold is not None and not (0.0 < self.threshold < 1.0):
            raise DomainError("precision threshold must lie in (0, 1)")
        if self.digits < 20:
            raise DomainError("extended precision needs at least 20 digits")


@dataclass(frozen=True)
class MapSpec:
    """One concrete interval map plus its precision policy.

    kind "mp": T(x) = x + r*x**z (mod 1) with z > 1 and 0 < r <= 1
    (r above 1 would push T(1) = r past the end of the interval).
    kind "pl": the piecewise linear map of an :class:`EpsilonSequence`.
    """

    kind: str
    z: float | None = None
    r: float = 1.0
    eps: EpsilonSequence | None = None
    precision: PrecisionPolicy = field(default_factory=PrecisionPolicy)

    def __post_init__(self):
        if self.kind not in ("mp", "pl"):
            raise DomainError(f"map kind must be 'mp' or 'pl', got {self.kind!r}")
        if self.kind == "mp":
            if self.z is None or not math.isfinite(self.z) or self.z <= 1.0:
                raise DomainError(f"mp maps need a finite exponent z > 1, got {self.z}")
            if not (0.0 < self.r <= 1.0) or not math.isfinite(self.r):
                raise DomainError(f"mp maps need 0 < r <= 1, got {self.r}")
            object.__setattr__(self, "z", float(self.z))
            object.__setattr__(self, "r", float(self.r))
        else:
            if not isinstance(self.eps, EpsilonSequence):
                raise DomainError("pl maps need an EpsilonSequence")

    @property
    def branch_point(self):
        """Left endpoint of the expanding branch I_1 = (c, 1]."""
        if self.kind == "mp":
            return mp_branch_point(self.z, self.r)
        return self.eps.eps(0)

    def effective_threshold(self):
        """Laminar switch point for this map under its precision policy."""
        if self.precision.threshold is not None:
            return self.precision.threshold
        if self.kind == "mp":
            return _EPS_MACH ** (1.0 / (self.z - 1.0))
        return 0.0  # piecewise linear steps are affine: no laminar stalling

    def describe(self):
        if self.kind == "mp":
            return f"mp:z={self.z:g},r={self.r:g}"
        eps = self.eps
        if eps.kind == "geometric":
            return f"pl:geom,a={eps.params['a']:g}"
        if eps.kind == "power":
            return f"pl:pow,alpha={eps.params['alpha']:g}"
        if eps.kind == "logarithmic":
            return "pl:log"
        return f"pl:{eps.describe()}"


# ---------------------------------------------------------------------------
# elementary steps
# ---------------------------------------------------------------------------


def _pow_z(x, z):
    # keep the multiplication order in sync with both kernel implementations;
    # integer exponents must round identically across them
    if z == 2.0:
        return x * x
    if z == 3.0:
        return (x * x) * x
    if z == 4.0:
        xx = x * x
        return xx * xx
    return x ** z


def _mp_step(x, z, r):
    y = x + r * _pow_z(x, z)
    return y - 1.0 if y > 1.0 else y


def _check_unit_interval(x):
    if not (0.0 <= x <= 1.0) or not math.isfinite(x):
        raise DomainError(f"point must lie in [0, 1], got {x!r}")


@lru_cache(maxsize=None)
def mp_branch_point(z, r=1.0):
    """The unique c in (0, 1) with c + r*c**z = 1, to ~1e-15.

    Bisection to width 1e-14 followed by two Newton polish steps; the left
    side is strictly increasing from 0 to 1 + r, so the root always exists.
    """
    if z <= 1.0 or r <= 0.0:
        raise DomainError("branch point needs z > 1 and r > 0")
    lo, hi = 0.0, 1.0
    while hi - lo > 1e-14:
        mid = 0.5 * (lo + hi)
        if mid + r * mid ** z < 1.0:
            lo = mid
        else:
            hi = mid
    c = 0.5 * (lo + hi)
    for _ in range(2):
        f = c + r * c ** z - 1.0
        c -= f / (1.0 + r * z * c ** (z - 1.0))
    return c


def mp_apply(x, spec: MapSpec):
    """One step of T(x) = x + r*x**z (mod 1); T(0) = 0."""
    if spec.kind != "mp":
        raise DomainError("mp_apply needs an mp map spec")
    _check_unit_interval(x)
    if x == 0.0:
        return 0.0
    return _mp_step(x, spec.z, spec.r)


def pl_apply(x, spec: MapSpec):
    """One step of the piecewise linear map; L(0) = 0.

    On (eps_0, 1] the map is (x - eps_0)/(1 - eps_0); the deeper cell
    (eps_{k-1}, eps_{k-2}] maps affinely onto (eps_{k-2}, eps_{k-3}].
    """
    if spec.kind != "pl":
        raise DomainError("pl_apply needs a pl map spec")
    _check_unit_interval(x)
    if x == 0.0:
        return 0.0
    eps = spec.eps
    k = eps.cell_index(x)
    if k == 1:
        e0 = eps.eps(0)
        return (x - e0) / (1.0 - e0)
    lo = eps.eps(k - 1)
    hi = eps.eps(k - 2)
    slope = (eps.eps(k - 3) - hi) / (hi - lo)
    return slope * (x - lo) + hi


def apply_map(x, spec: MapSpec):
    """Dispatch one map step by family."""
    return mp_apply(x, spec) if spec.kind == "mp" else pl_apply(x, spec)


# ---------------------------------------------------------------------------
# first passage, level sets, induced map
# ---------------------------------------------------------------------------


def _resolve_laminar(y, remaining, spec, threshold, want_log_deriv=False):
    return laminar.resolve(
        y, remaining, spec.precision.mode, spec.z, spec.r, threshold,
        spec.precision.digits, want_log_deriv,
    )


def first_passage_time(x, spec: MapSpec, cap=10_000_000):
    """tau(x) = 1 + min{n >= 0 : T^n(x) in I_1}, the first-passage time.

    Exact from the cell index for piecewise linear maps; computed by
    iteration under the precision policy for mp maps.  Raises
    :class:`PassageBudgetError` when no passage happens within ``cap`` steps
    (the point is numerically indistinguishable from 0 on that horizon).
    """
    if not (0.0 < x <= 1.0) or not math.isfinite(x):
        raise DomainError(f"first passage needs x in (0, 1], got {x!r}")
    if spec.kind == "pl":
        return spec.eps.cell_index(x)
    c = spec.branch_point
    thr = min(spec.effective_threshold(), c)
    mode = spec.precision.mode
    y = x
    steps = 0
    while y <= c:
        if steps >= cap:
            raise PassageBudgetError(
                f"no passage within {cap} steps from x={x!r}")
        if mode != "plain" and 0.0 < y < thr:
            seg, y2, _ = _resolve_laminar(y, cap - steps, spec, thr)
            steps += seg
            if y2 is None:
                raise PassageBudgetError(
                    f"no passage within {cap} steps from x={x!r} "
                    "(laminar segment exceeds the budget)")
            y = y2
            continue
        y_next = _mp_step(y, spec.z, spec.r)
        if y_next == y:
            raise PassageBudgetError(
                f"orbit stalled at {y!r} in plain precision; "
                "use the extended policy or a larger threshold")
        y = y_next
        steps += 1
    return steps + 1


@dataclass(frozen=True)
class LevelSetTable:
    """Boundaries a_0 = 1 > a_1 = c > a_2 > ... of the passage-time level sets.

    A_n = (a_n, a_{n-1}] collects the points with first-passage time n.
    """

    boundaries: np.ndarray
    kind: str

    @property
    def max_index(self):
        return self.boundaries.shape[0] - 1

    def index_of(self, x):
        """The n with x in (a_n, a_{n-1}]; raises for x deeper than the table."""
        b = self.boundaries
        if not (0.0 < x <= 1.0):
            raise DomainError(f"level-set lookup needs x in (0, 1], got {x!r}")
        if not b[-1] < x:
            raise DomainError(
                f"x={x!r} lies beyond level-set table depth {self.max_index}")
        # number of boundaries (ascending view) strictly below x
        pos = int(np.searchsorted(b[::-1], x, side="left"))
        return b.shape[0] - pos


def level_sets(spec: MapSpec, max_index) -> LevelSetTable:
    """Level sets of the first-passage time up to ``max_index``.

    Piecewise linear maps give a_n = eps(n-1) exactly; for mp maps each
    boundary is a root-found preimage of the previous one under the left
    branch (bisection to 1e-14 plus Newton polish, residual checked to 1e-12).
    """
    max_index = int(max_index)
    if max_index < 1:
        raise DomainError("need max_index >= 1")
    if spec.kind == "pl":
        ks = np.arange(-1, max_index, dtype=np.int64)
        return LevelSetTable(spec.eps.eps_array(ks), "pl")
    z, r = spec.z, spec.r
    c = spec.branch_point
    bounds = np.empty(max_index + 1, dtype=np.float64)
    bounds[0] = 1.0
    a = bounds[1] = c
    for n in range(2, max_index + 1):
        lo, hi = 0.0, min(a, c)
        while hi - lo > 1e-14:
            mid = 0.5 * (lo + hi)
            if mid + r * mid ** z < a:
                lo = mid
            else:
                hi = mid
        y = 0.5 * (lo + hi)
        for _ in range(2):
            f = y + r * y ** z - a
            y -= f / (1.0 + r * z * y ** (z - 1.0))
        if abs(y + r * y ** z - a) > 1e-12:
            raise ConvergenceError(
                f"level-set preimage at depth {n} did not converge")
        bounds[n] = a = y
    return LevelSetTable(bounds, "mp")


def induced_apply(x, spec: MapSpec, cap=10_000_000):
    """One step of the induced map: (T^tau(x), tau(x)).

    The return value is literally the base map applied tau times under the
    same precision policy, so it is bit-identical to manual iteration.
    """
    tau = first_passage_time(x, spec, cap=cap)
    y = x
    if spec.kind == "pl":
        for _ in range(tau):
            y = pl_apply(y, spec)
        return y, tau
    c = spec.branch_point
    thr = min(spec.effective_threshold(), c)
    mode = spec.precision.mode
    done = 0
    while done < tau:
        if mode != "plain" and 0.0 < y < thr and y <= c:
            seg, y2, _ = _resolve_laminar(y, tau - done, spec, thr)
            done += seg
            if y2 is None:
                raise PassageBudgetError("laminar segment exceeds the budget")
            y = y2
            continue
        y = _mp_step(y, spec.z, spec.r)
        done += 1
    return y, tau


def induced_log_derivative(x, spec: MapSpec, cap=10_000_000):
    """log |G'(x)| of the induced map, via the chain rule along the passage.

    For mp maps this is the sum of log(1 + r*z*y**(z-1)) over the tau
    iterates; for piecewise linear maps the branch slopes telescope to
    1/ell(tau), so the value is -log(eps(tau-2) - eps(tau-1)).  Natural
    logarithm.  Raises :class:`DomainError` if an iterate lands exactly on a
    branch endpoint (a measure-zero event; callers should skip such points
    in averages).
    """
    if not (0.0 < x <= 1.0) or not math.isfinite(x):
        raise DomainError(f"induced log-derivative needs x in (0, 1], got {x!r}")
    if spec.kind == "pl":
        eps = spec.eps
        k = eps.cell_index(x)
        if x == eps.eps(k - 2):
            raise DomainError(f"x={x!r} is a branch endpoint")
        return -math.log(eps.ell(k))
    z, r = spec.z, spec.r
    c = spec.branch_point
    thr = min(spec.effective_threshold(), c)
    mode = spec.precision.mode
    y = x
    acc = 0.0
    steps = 0
    passed = False
    while not passed:
        if steps >= cap:
            raise PassageBudgetError(f"no passage within {cap} steps from x={x!r}")
        if y == c:
            raise DomainError("orbit hit the branch point exactly")
        if mode != "plain" and 0.0 < y < thr:
            seg, y2, logsum = _resolve_laminar(
                y, cap - steps, spec, thr, want_log_deriv=True)
            steps += seg
            acc += logsum
            if y2 is None:
                raise PassageBudgetError("laminar segment exceeds the budget")
            y = y2
            continue
        if y > c:
            passed = True  # final step: the passage through I_1 itself
        acc += math.log1p(r * z * _pow_z(y, z - 1.0))
        y_next = _mp_step(y, z, r)
        if y_next == y:
            raise PassageBudgetError(f"orbit stalled at {y!r} in plain precision")
        y = y_next
        steps += 1
    return acc


# ---------------------------------------------------------------------------
# map mini-language
# ---------------------------------------------------------------------------


def _parse_fields(body, text):
    fields = {}
    order = []
    for token in body.split(","):
        token = token.strip()
        if not token:
            continue
        if "=" in token:
            key, _, val = token.partition("=")
            fields[key.strip()] = val.strip()
        else:
            order.append(token)
    return order, fields


def _field_float(fields, key, text):
    try:
        return float(fields[key])
    except KeyError:
        raise ParseError(f"missing {key}=... in map spec", text=text) from None
    except ValueError:
        raise ParseError(f"bad numeric value for {key}: {fields[key]!r}",
                         text=text, position=text.find(fields[key])) from None


def parse_map_spec(text, precision: PrecisionPolicy | None = None) -> MapSpec:
    """Parse the map mini-language.

    Examples: ``mp:z=3,r=1`` | ``pl:geom,a=2`` | ``pl:pow,alpha=0.5`` |
    ``pl:log`` | ``pl:file,path=cells.txt``.
    """
    precision = precision or PrecisionPolicy()
    head, sep, body = text.strip().partition(":")
    head = head.strip().lower()
    if not sep:
        raise ParseError("map spec must look like 'mp:...' or 'pl:...'",
                         text=text, position=0)
    order, fields = _parse_fields(body, text)
    if head == "mp":
        if order:
            raise ParseError(f"unexpected token {order[0]!r} in mp spec",
                             text=text, position=text.find(order[0]))
        z = _field_float(fields, "z", text)
        r = float(fields.get("r", 1.0))
        return MapSpec("mp", z=z, r=r, precision=precision)
    if head != "pl":
        raise ParseError(f"unknown map family {head!r}", text=text, position=0)
    if not order:
        raise ParseError("pl spec needs a family: geom | pow | log | file",
                         text=text)
    family = order[0].lower()
    if family == "geom":
        eps = EpsilonSequence.geometric(_field_float(fields, "a", text))
    elif family == "pow":
        eps = EpsilonSequence.power(_field_float(fields, "alpha", text))
    elif family == "log":
        eps = EpsilonSequence.logarithmic()
    elif family == "file":
        if "path" not in fields:
            raise ParseError("pl:file needs path=...", text=text)
        eps = EpsilonSequence.from_file(fields["path"])
    else:
        raise ParseError(f"unknown pl family {family!r}", text=text,
                         position=text.find(order[0]))
    return MapSpec("pl", eps=eps, precision=precision)
