"""Laminar-segment handling for orbits near the indifferent fixed point.

Below the precision threshold the increment r*x**z is smaller than the
floating-point spacing at x and plain double iteration silently stalls.
A segment that dips under the threshold is resolved here: either the whole
remaining step budget provably stays below the threshold (every skipped
symbol is then 0), or the segment is iterated in software floats until it
climbs back above the threshold, or (cheaper, biased) its length is taken
from the continuum approximation dx/dt = r x**z.
"""

import math

import mpmath


def escape_steps_lower_bound(x, target, z, r):
    """Rigorous lower bound on the number of steps from x up to ``target``.

    Each step of y += r*y**z satisfies 1 >= int_{y_j}^{y_{j+1}} dy/(r y^z)
    because the integrand is decreasing, so the step count is at least the
    integral from x to target.
    """
    if x <= 0.0:
        return math.inf
    if x >= target:
        return 0.0
    return (x ** (1.0 - z) - target ** (1.0 - z)) / (r * (z - 1.0))


def resolve_extended(x, remaining, z, r, threshold, digits, want_log_deriv=False):
    """Resolve a laminar segment exactly in ``digits``-digit software floats.

    Returns ``(steps, x_after, log_deriv_sum)``.  ``x_after`` is None when
    the orbit provably stays below the threshold for the whole remaining
    budget; ``steps`` then equals ``remaining``.  ``log_deriv_sum`` is the
    accumulated log T' over the iterated steps (0.0 unless requested; it is
    not available for the provable-zeros shortcut, where it is bounded by
    remaining * r * z * threshold**(z-1)).
    """
    if remaining <= 0:
        return 0, x, 0.0
    if escape_steps_lower_bound(x, threshold, z, r) >= remaining:
        return remaining, None, 0.0
    with mpmath.workdps(digits):
        y = mpmath.mpf(x)
        zz = mpmath.mpf(z)
        rr = mpmath.mpf(r)
        steps = 0
        logsum = mpmath.mpf(0)
        while y < threshold and steps < remaining:
            if want_log_deriv:
                logsum += mpmath.log1p(rr * zz * y ** (zz - 1))
            y = y + rr * y ** zz
            steps += 1
        if steps >= remaining and y < threshold:
            return remaining, None, float(logsum)
        return steps, float(y), float(logsum)


def resolve_ode(x, remaining, z, r, threshold):
    """Continuum estimate of a laminar segment below the threshold.

    The flow dx/dt = r x**z needs about (x^(1-z) - t^(1-z)) / (r (z-1))
    steps to climb from x to t; the orbit resumes exactly at the threshold.
    Returns (steps, x_after) with x_after None when the estimate exceeds the
    remaining budget.
    """
    if remaining <= 0:
        return 0, x
    est = (x ** (1.0 - z) - threshold ** (1.0 - z)) / (r * (z - 1.0))
    steps = int(math.ceil(max(est, 1.0)))
    if steps >= remaining:
        return remaining, None
    return steps, threshold


def resolve(x, remaining, mode, z, r, threshold, digits, want_log_deriv=False):
    """Dispatch on the precision mode; returns (steps, x_after, log_deriv_sum)."""
    if mode == "ode-approx":
        steps, x_after = resolve_ode(x, remaining, z, r, threshold)
        return steps, x_after, 0.0
    return resolve_extended(x, remaining, z, r, threshold, digits, want_log_deriv)
