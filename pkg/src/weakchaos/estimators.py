"""Ensemble experiments, exponent fitting and comparisons with predictions.

run_ensemble draws Lebesgue-uniform starting points, symbolises orbits and
tabulates passage counts (N) and coded information bits (I) on a grid of
horizons; fit_power turns the grid means into a power-law exponent (the
empirical chaos index) with bootstrap confidence intervals; other estimators
target the induced map: its entropy via log-derivative Birkhoff averages and
the tail exponent of the first-passage law.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .coding import information_length_of_runs, nat_code_length, run_length, trunc_k
from .errors import (
    DegenerateFitError,
    DomainError,
    InsufficientTailError,
)
from .maps import MapSpec
from .renewal import RegimePrediction, _replica_rng, sample_chain_ensemble
from .symbolic import Partition, SymbolString, default_partition, symbolize

#: direct (non-chain) piecewise-linear ensembles are meant for small runs
MAX_DIRECT_PL_WORK = 5_000_000


# ---------------------------------------------------------------------------
# scaling tables
# ---------------------------------------------------------------------------


@dataclass
class ScalingTable:
    """Ensemble moments of N_n and I_n on an increasing grid of horizons.

    Moments are kept as exact integer sums, so merging tables is associative
    to the bit and thread counts cannot change results.  The per-replica
    matrices are carried along (when requested) for bootstrap resampling;
    they are not part of the CSV serialisation.
    """

    ns: np.ndarray
    count: int
    sums_n: list
    sums_n2: list
    sums_i: list
    sums_i2: list
    metadata: dict = field(default_factory=dict)
    passage_matrix: np.ndarray | None = None
    information_matrix: np.ndarray | None = None

    @classmethod
    def from_matrices(cls, ns, passages, information_bits, metadata=None,
                      keep_samples=True):
        ns = np.asarray(ns, dtype=np.int64)
        passages = np.asarray(passages)
        information_bits = np.asarray(information_bits)
        return cls(
            ns=ns,
            count=int(passages.shape[0]),
            sums_n=[int(v) for v in passages.sum(axis=0, dtype=np.int64)],
            sums_n2=[int(v) for v in
                     (passages.astype(np.int64) ** 2).sum(axis=0, dtype=np.int64)],
            sums_i=[int(v) for v in information_bits.sum(axis=0, dtype=np.int64)],
            sums_i2=[int(v) for v in
                     (information_bits.astype(np.int64) ** 2).sum(axis=0,
                                                                  dtype=np.int64)],
            metadata=dict(metadata or {}),
            passage_matrix=passages if keep_samples else None,
            information_matrix=information_bits if keep_samples else None,
        )

    @property
    def samples(self):
        return np.full(self.ns.shape[0], self.count, dtype=np.int64)

    def _mean(self, sums):
        return np.array([s / self.count for s in sums], dtype=np.float64)

    def _var(self, sums, sums2):
        if self.count < 2:
            return np.zeros(self.ns.shape[0], dtype=np.float64)
        out = np.empty(self.ns.shape[0], dtype=np.float64)
        for j, (s, s2) in enumerate(zip(sums, sums2)):
            out[j] = (s2 - (s * s) / self.count) / (self.count - 1)
        return out

    @property
    def mean_passages(self):
        return self._mean(self.sums_n)

    @property
    def var_passages(self):
        return self._var(self.sums_n, self.sums_n2)

    @property
    def mean_information(self):
        return self._mean(self.sums_i)

    @property
    def var_information(self):
        return self._var(self.sums_i, self.sums_i2)

    def merged_with(self, other: "ScalingTable") -> "ScalingTable":
        """Combine two ensembles over the same grid (exact, associative)."""
        if not np.array_equal(self.ns, other.ns):
            raise DomainError("cannot merge tables over different grids")
        cat = None
        if (self.passage_matrix is not None
                and other.passage_matrix is not None):
            cat = (np.concatenate([self.passage_matrix, other.passage_matrix]),
                   np.concatenate([self.information_matrix,
                                   other.information_matrix]))
        meta = dict(self.metadata)
        meta["merged"] = True
        return ScalingTable(
            ns=self.ns,
            count=self.count + other.count,
            sums_n=[a + b for a, b in zip(self.sums_n, other.sums_n)],
            sums_n2=[a + b for a, b in zip(self.sums_n2, other.sums_n2)],
            sums_i=[a + b for a, b in zip(self.sums_i, other.sums_i)],
            sums_i2=[a + b for a, b in zip(self.sums_i2, other.sums_i2)],
            metadata=meta,
            passage_matrix=cat[0] if cat else None,
            information_matrix=cat[1] if cat else None,
        )

    def to_csv(self):
        """CSV text: '# key: value' metadata lines, then one row per horizon."""
        lines = []
        for key in sorted(self.metadata):
            lines.append(f"# {key}: {self.metadata[key]}")
        lines.append("n,samples,mean_N,var_N,mean_I,var_I")
        mn, vn = self.mean_passages, self.var_passages
        mi, vi = self.mean_information, self.var_information
        for j, n in enumerate(self.ns):
            lines.append(
                f"{int(n)},{self.count},{mn[j]!r},{vn[j]!r},{mi[j]!r},{vi[j]!r}")
        return "\n".join(lines) + "\n"

    def write_csv(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_csv())


# ---------------------------------------------------------------------------
# ensembles
# ---------------------------------------------------------------------------


def _normalize_grid(n_grid):
    grid = np.asarray(sorted({int(n) for n in np.atleast_1d(n_grid)}),
                      dtype=np.int64)
    if grid.size == 0 or grid[0] < 1:
        raise DomainError("n grid must contain integers >= 1")
    return grid


def _replica_uniforms(seed, start, count):
    """One Lebesgue-uniform start per replica, seeded per replica index."""
    out = np.empty(count, dtype=np.float64)
    for i in range(count):
        out[i] = _replica_rng(seed, start + i).random()
    return out


def _prefix_stats(symbols, grid, width):
    """Per-horizon passage count and coded bits of one symbol array."""
    nz = np.flatnonzero(symbols)
    runs = (np.diff(nz, prepend=-1) - 1).astype(np.int64)
    lens = nat_code_length(runs) + width if nz.size else np.zeros(0, np.int64)
    cum = np.zeros(nz.size + 1, dtype=np.int64)
    np.cumsum(lens, out=cum[1:])
    counts = np.searchsorted(nz, grid - 1, side="right")
    return counts.astype(np.int64), cum[counts]


def _is_default_partition(partition, spec):
    return (partition.is_binary
            and partition.breakpoints[0] == spec.branch_point)


def run_ensemble(spec: MapSpec, partition: Partition | None, n_grid, samples,
                 seed, threads=1, keep_samples=True, tau_hist_max=0,
                 replica_start=0) -> ScalingTable:
    """Ensemble statistics of N_n and I_n from Lebesgue-uniform starts.

    Replica r is seeded by (seed, replica_start + r), so a run split into
    consecutive blocks merges into exactly the single full run.  Smooth maps
    are iterated by the active kernel; piecewise linear maps with the
    two-cell partition ride the isomorphic renewal chain (exact in law for
    uniform starts, and immune to the float collapse of iterated affine
    maps).  Custom partitions on PL maps fall back to direct symbolisation
    and are meant for small runs.
    """
    partition = partition or default_partition(spec)
    grid = _normalize_grid(n_grid)
    samples = int(samples)
    if samples < 1:
        raise DomainError("need at least one sample")
    meta = {
        "map": spec.describe(),
        "partition": partition.describe(),
        "seed": int(seed),
        "precision": spec.precision.mode,
        "grid": ",".join(str(int(n)) for n in grid),
        "samples": samples,
    }
    width = int(partition.alphabet_size - 2).bit_length()
    if spec.kind == "pl" and _is_default_partition(partition, spec):
        ens = sample_chain_ensemble(
            spec.eps, grid, samples, seed, tau_hist_max=tau_hist_max,
            threads=threads, replica_start=replica_start)
        meta["route"] = "chain"
        table = ScalingTable.from_matrices(
            grid, ens.passages, ens.information_bits, meta, keep_samples)
        table.metadata["tau_hist"] = ens.tau_hist
        return table
    if spec.kind == "pl":
        if samples * int(grid[-1]) > MAX_DIRECT_PL_WORK:
            raise DomainError(
                "direct PL ensembles with custom partitions are limited to "
                f"{MAX_DIRECT_PL_WORK} orbit-steps; use the two-cell "
                "partition (chain route) for large runs")
        x0 = _replica_uniforms(seed, replica_start, samples)
        passages = np.zeros((samples, grid.shape[0]), dtype=np.int64)
        bits = np.zeros_like(passages)
        for i in range(samples):
            sym = symbolize(x0[i], int(grid[-1]), spec, partition).symbols
            passages[i], bits[i] = _prefix_stats(sym, grid, width)
        meta["route"] = "direct"
        return ScalingTable.from_matrices(grid, passages, bits, meta,
                                          keep_samples)
    # smooth intermittent map: kernel ensemble
    x0 = _replica_uniforms(seed, replica_start, samples)
    kernels = _kernels.active
    breaks = partition.breaks_array()
    thr = spec.effective_threshold()

    def run_block(lo, hi):
        return kernels.mp_ensemble_stats(
            x0[lo:hi], spec.z, spec.r, spec.branch_point, grid, breaks, width,
            spec.precision.mode, thr, spec.precision.digits,
            tau_hist_max=tau_hist_max)

    threads = max(1, int(threads))
    if threads == 1 or samples < 2 * threads:
        blocks = [(0, samples)]
    else:
        edges = np.linspace(0, samples, threads + 1, dtype=int)
        blocks = [(int(a), int(b)) for a, b in zip(edges[:-1], edges[1:])
                  if a < b]
    if len(blocks) == 1:
        results = [run_block(*blocks[0])]
    else:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=len(blocks)) as pool:
            results = list(pool.map(lambda b: run_block(*b), blocks))
    passages = np.concatenate([res["passages"] for res in results])
    bits = np.concatenate([res["information_bits"] for res in results])
    meta["route"] = "orbit"
    for key in ("escalations", "ode_segments", "dormant", "boundary_hits"):
        meta[key] = int(sum(res[key] for res in results))
    if meta["ode_segments"]:
        meta["bias_warning"] = "ode-approx laminar segments are biased"
    if meta["dormant"] > 0.01 * samples:
        meta["dormant_fraction_warning"] = (
            f"{meta['dormant']} of {samples} orbits went dormant below the "
            "laminar threshold")
    table = ScalingTable.from_matrices(grid, passages, bits, meta, keep_samples)
    if tau_hist_max:
        hist = np.zeros(tau_hist_max + 2, dtype=np.int64)
        for res in results:
            hist += res["tau_hist"]
        table.metadata["tau_hist"] = hist
    return table


# ---------------------------------------------------------------------------
# exponent fitting
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ChaosIndexEstimate:
    """Fitted power-law exponent of information (or passage) growth."""

    q_hat: float
    ci_low: float
    ci_high: float
    raw_slope: float
    prefactor: float
    r_squared: float
    residual_trend: float
    model: str
    flavor: str
    column: str
    rows_used: int
    ci_method: str

    def to_dict(self):
        return {k: getattr(self, k) for k in (
            "q_hat", "ci_low", "ci_high", "raw_slope", "prefactor",
            "r_squared", "residual_trend", "model", "flavor", "column",
            "rows_used", "ci_method")}


def _fit_loglog(ns, means, model):
    x = np.log(ns.astype(np.float64))
    y = np.log(means)
    if model == "pow-log":
        y = y - np.log(np.log(ns.astype(np.float64)))
    slope, intercept = np.polyfit(x, y, 1)
    fitted = intercept + slope * x
    resid = y - fitted
    ss_res = float(np.sum(resid ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    curvature = float(np.polyfit(x, resid, 2)[0]) if x.shape[0] > 2 else 0.0
    return float(slope), float(intercept), r2, curvature


def fit_power(table: ScalingTable, column="N", model="pow", min_n=1000,
              bootstrap=200, seed=0, flavor="global") -> ChaosIndexEstimate:
    """Least-squares slope of log mean versus log n.

    Rows with n below ``min_n`` are discarded (intermittent prefactors
    converge slowly); at least four rows must survive.  The optional
    ``pow-log`` model fits mean = C * n^q * log n instead.  Confidence
    bounds come from a nonparametric bootstrap over replicas when the table
    carries per-replica samples, and from a normal approximation of the row
    means otherwise.
    """
    if model not in ("pow", "pow-log"):
        raise DomainError(f"unknown fit model {model!r}")
    if column == "N":
        means = table.mean_passages
        matrix = table.passage_matrix
    elif column == "I":
        means = table.mean_information
        matrix = table.information_matrix
    else:
        raise DomainError("column must be 'N' or 'I'")
    mask = table.ns >= int(min_n)
    if int(mask.sum()) < 4:
        raise DegenerateFitError(
            f"need at least 4 rows with n >= {min_n}, have {int(mask.sum())}")
    ns = table.ns[mask]
    sub = means[mask]
    if np.all(sub == sub[0]):
        raise DegenerateFitError("all selected means are equal")
    if np.any(sub <= 0):
        raise DegenerateFitError("log fit needs strictly positive means")
    slope, intercept, r2, curvature = _fit_loglog(ns, sub, model)
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(
        [int(seed), 0x66697473])))
    slopes = np.empty(int(bootstrap), dtype=np.float64)
    if matrix is not None and table.count > 1 and bootstrap:
        cols = matrix[:, mask].astype(np.float64)
        for b in range(int(bootstrap)):
            take = rng.integers(0, table.count, size=table.count)
            bs = cols[take].mean(axis=0)
            if np.any(bs <= 0):
                slopes[b] = np.nan
                continue
            slopes[b] = _fit_loglog(ns, bs, model)[0]
        ci_method = "bootstrap"
    elif bootstrap:
        sd = np.sqrt(np.maximum(
            (table.var_passages if column == "N"
             else table.var_information)[mask], 0.0) / table.count)
        for b in range(int(bootstrap)):
            bs = sub + rng.standard_normal(sub.shape[0]) * sd
            if np.any(bs <= 0):
                slopes[b] = np.nan
                continue
            slopes[b] = _fit_loglog(ns, bs, model)[0]
        ci_method = "normal-approx"
    else:
        slopes = np.array([slope])
        ci_method = "none"
    good = slopes[~np.isnan(slopes)]
    if good.size >= 10:
        ci_low, ci_high = np.percentile(good, [2.5, 97.5])
    else:
        ci_low = ci_high = slope
        ci_method = "none"
    clip = lambda v: float(min(max(v, 0.0), 1.0))
    return ChaosIndexEstimate(
        q_hat=clip(slope),
        ci_low=clip(min(ci_low, slope)),
        ci_high=clip(max(ci_high, slope)),
        raw_slope=float(slope),
        prefactor=float(math.exp(intercept)),
        r_squared=r2,
        residual_trend=curvature,
        model=model,
        flavor=flavor,
        column=column,
        rows_used=int(mask.sum()),
        ci_method=ci_method,
    )


def local_index_estimate(x0, spec: MapSpec, partition: Partition | None,
                         n_grid, model="pow", min_n=1000) -> ChaosIndexEstimate:
    """Slope fit of a single orbit's log N_n against log n.

    A limsup-style lower-bound estimator: single-orbit passage counts
    fluctuate, so no confidence interval is attached.
    """
    partition = partition or default_partition(spec)
    grid = _normalize_grid(n_grid)
    if not (0.0 <= x0 <= 1.0) or not math.isfinite(x0):
        raise DomainError(f"x0 must lie in [0, 1], got {x0!r}")
    width = int(partition.alphabet_size - 2).bit_length()
    if spec.kind == "mp":
        res = _kernels.active.mp_ensemble_stats(
            np.array([x0], dtype=np.float64), spec.z, spec.r,
            spec.branch_point, grid, partition.breaks_array(), width,
            spec.precision.mode, spec.effective_threshold(),
            spec.precision.digits)
        passages, bits = res["passages"], res["information_bits"]
    else:
        sym = symbolize(x0, int(grid[-1]), spec, partition).symbols
        counts, ibits = _prefix_stats(sym, grid, width)
        passages, bits = counts[None, :], ibits[None, :]
    table = ScalingTable.from_matrices(
        grid, passages, bits,
        {"map": spec.describe(), "x0": float(x0), "flavor": "local"})
    est = fit_power(table, column="N", model=model, min_n=min_n, bootstrap=0,
                    flavor="local")
    return est


# ---------------------------------------------------------------------------
# induced-map estimators
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EntropyEstimate:
    """Monte Carlo estimate of the induced-map entropy (nats)."""

    value: float
    stderr: float
    samples_used: int
    mean_passages: float
    truncated_orbits: int

    def to_dict(self):
        return {k: getattr(self, k) for k in (
            "value", "stderr", "samples_used", "mean_passages",
            "truncated_orbits")}


def birkhoff_induced_entropy(spec: MapSpec, passages, samples, seed,
                             step_cap=2_000_000) -> EntropyEstimate:
    """Average log-derivative of the induced map along induced orbits.

    For smooth maps the chain rule makes the per-orbit sample the plain
    orbit sum of log T' divided by the number of completed passages (the
    starting measure is Lebesgue, not the induced invariant measure, which
    adds a vanishing startup bias).  For piecewise linear maps the induced
    invariant measure is Lebesgue itself, so cells are sampled i.i.d. and
    the estimator averages -log(cell length); iterating the affine induced
    map in floats would instead collapse dyadic families onto 0.
    """
    passages = int(passages)
    samples = int(samples)
    if passages < 1000:
        raise DomainError("induced-entropy runs need passages >= 1000")
    if samples < 2:
        raise DomainError("need at least two orbits for a standard error")
    if spec.kind == "pl":
        per_orbit = np.empty(samples, dtype=np.float64)
        for i in range(samples):
            u = _replica_rng(seed, i).random(passages)
            per_orbit[i] = float(
                np.mean(spec.eps.neg_log_cell_length_from_uniform(u)))
        value = float(np.mean(per_orbit))
        stderr = float(np.std(per_orbit, ddof=1) / math.sqrt(samples))
        return EntropyEstimate(value, stderr, samples, float(passages), 0)
    x0 = _replica_uniforms(seed, 0, samples)
    res = _kernels.active.mp_entropy_run(
        x0, spec.z, spec.r, spec.branch_point, passages, int(step_cap),
        spec.precision.mode, spec.effective_threshold(),
        spec.precision.digits)
    done = res["passages"] > 0
    if not done.any():
        raise DegenerateFitError("no orbit completed a single passage")
    ratios = res["log_deriv_sum"][done] / res["passages"][done]
    value = float(np.mean(ratios))
    stderr = (float(np.std(ratios, ddof=1) / math.sqrt(ratios.shape[0]))
              if ratios.shape[0] > 1 else math.inf)
    return EntropyEstimate(
        value, stderr, int(done.sum()),
        float(np.mean(res["passages"][done])),
        int(np.count_nonzero(res["truncated"])),
    )


@dataclass(frozen=True)
class TailFit:
    """Survival-function fit of the first-passage tail."""

    exponent: float
    survival_slope: float
    cutoff: int
    tail_count: int
    points: int

    def to_dict(self):
        return {k: getattr(self, k) for k in (
            "exponent", "survival_slope", "cutoff", "tail_count", "points")}


def passage_tail_fit(spec: MapSpec, samples, seed, n=1 << 17,
                     cutoff_quantile=0.9, min_tail=100, hist_max=None,
                     max_t_fraction=0.02) -> TailFit:
    """Fit P(tau > t) ~ t^-beta on the upper tail; density exponent is 1+beta.

    Smooth maps contribute passage times collected along ``samples`` orbits
    of length ``n``; piecewise linear maps draw ``samples`` i.i.d. passage
    times through the exact cell law.  For orbit-collected times the fit
    window is capped at ``max_t_fraction * n``: a passage of length t only
    completes when it starts at least t steps before the horizon, so the
    far tail of a fixed-horizon histogram is censored.
    """
    if hist_max is None:
        hist_max = int(n)
    t_cap = hist_max
    if spec.kind == "mp":
        table = run_ensemble(spec, None, [int(n)], samples, seed,
                             keep_samples=False, tau_hist_max=hist_max)
        hist = table.metadata["tau_hist"]
        t_cap = max(int(n * max_t_fraction), 8)
    else:
        u = _replica_rng(seed, 0).random(int(samples))
        taus = spec.eps.intervals_from_uniform(u, hist_max + 1)
        hist = np.zeros(hist_max + 2, dtype=np.int64)
        part = np.bincount(np.minimum(taus, hist_max + 1))
        hist[:part.size] += part
    total = int(hist.sum())
    if total == 0:
        raise InsufficientTailError("no passages observed")
    # survival counts: S[t] = #{tau > t} for t = 0..hist_max
    above = total - np.cumsum(hist[:hist_max + 1])
    cutoff = int(np.searchsorted(-above, -total * (1.0 - cutoff_quantile),
                                 side="left"))
    cutoff = max(cutoff, 1)
    tail_count = int(above[cutoff]) if cutoff <= hist_max else 0
    if tail_count < min_tail:
        raise InsufficientTailError(
            f"only {tail_count} passages beyond the cutoff {cutoff}; "
            f"need {min_tail}")
    noise_floor = 20
    t_hi = int(np.searchsorted(-above, -noise_floor, side="right")) - 1
    t_hi = min(t_hi, hist_max, t_cap)
    if t_hi <= cutoff * 2:
        raise InsufficientTailError(
            "tail too short between the cutoff and the noise floor")
    ts = np.unique(np.round(np.geomspace(cutoff, t_hi, 25)).astype(np.int64))
    surv = above[ts].astype(np.float64) / total
    keep = surv > 0
    ts, surv = ts[keep], surv[keep]
    if ts.shape[0] < 5:
        raise InsufficientTailError("fewer than 5 usable tail points")
    slope = float(np.polyfit(np.log(ts.astype(np.float64)),
                             np.log(surv), 1)[0])
    return TailFit(
        exponent=1.0 - slope,
        survival_slope=slope,
        cutoff=cutoff,
        tail_count=tail_count,
        points=int(ts.shape[0]),
    )


def passage_tail_exponent(spec: MapSpec, samples, seed, **kwargs) -> float:
    """Density tail exponent of the first-passage time (see passage_tail_fit)."""
    return passage_tail_fit(spec, samples, seed, **kwargs).exponent


# ---------------------------------------------------------------------------
# truncated coding and prediction comparison
# ---------------------------------------------------------------------------


def truncated_complexity(omega: SymbolString, k) -> int:
    """Information value after clipping every zero-run digit at k.

    Truncation maps the run string onto the finite alphabet {0..k} plus the
    nonzero symbols, so the coded length can only go down; the value is
    monotone in k and reaches information_length once k covers the longest
    run.
    """
    if omega.alphabet_size != 2:
        raise DomainError("truncated complexity is defined for binary strings")
    return information_length_of_runs(trunc_k(run_length(omega), k))


@dataclass(frozen=True)
class RowCheck:
    n: int
    mean_passages: float
    predicted: float
    ratio: float
    mean_information: float
    sandwich_upper: float
    ok: bool


@dataclass(frozen=True)
class PredictionReport:
    rows: tuple
    violations: tuple
    ok: bool

    def to_dict(self):
        return {
            "ok": self.ok,
            "violations": list(self.violations),
            "rows": [vars(r) for r in self.rows],
        }


def compare_with_prediction(table: ScalingTable,
                            prediction: RegimePrediction) -> PredictionReport:
    """Per-row ratios against the predicted E[N_n] law plus the information
    sandwich mean_N <= mean_I <= mean_N * (log2 n + symbol bits) + slack."""
    alphabet = 2
    part = table.metadata.get("partition")
    if part:
        alphabet = len(str(part).split(",")) + 1
    c_alpha = int(alphabet - 2).bit_length()
    rows = []
    violations = []
    mn = table.mean_passages
    mi = table.mean_information
    for j, n in enumerate(table.ns):
        n = int(n)
        predicted = float(prediction.predicted_mean_passages(n))
        ratio = mn[j] / predicted if predicted > 0 else math.inf
        slack = 2 * math.floor(math.log2(n + 1)) + 4
        upper = mn[j] * (math.log2(n) + c_alpha) + slack
        ok = bool(mn[j] <= mi[j] <= upper)
        if not ok:
            violations.append(
                f"n={n}: information sandwich violated "
                f"(N={mn[j]!r}, I={mi[j]!r}, upper={upper!r})")
        rows.append(RowCheck(n, float(mn[j]), predicted, float(ratio),
                             float(mi[j]), float(upper), ok))
    return PredictionReport(tuple(rows), tuple(violations), not violations)
