"""Bootstrap estimation of the number of extreme samples a stable GEV fit needs.

Given a large pool of per-run minima and reference parameters fitted on the
whole pool, every candidate subset size n gets repeatedly resampled (with
replacement), refitted, and the resulting parameter triples tested two ways:
Hotelling's T-squared for consistency with the reference mean, and the
multivariate Shapiro-Wilk test for normality of the estimates.  Regression
lines through the per-n average p-values locate the smallest n where both
tests clear the significance level; since the mean test presupposes
normality, the final estimate is whichever crossing is larger.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    ConfigError,
    DegenerateSamplesError,
    EstimationImpossibleError,
    FitFailureError,
    InsufficientSamplesError,
    SingularCovarianceError,
)
from .gev import GevParams, fit_gev_minima, jitter
from .seeding import derive_seed
from .stats import (
    crossing_sample_size,
    fit_regression_line,
    hotelling_t2,
    mvsw_null_stats,
    shapiro_wilk_multivariate,
)

FLAG_NEVER_CROSSED_HT2 = "never_crossed_ht2"
FLAG_NEVER_CROSSED_MST = "never_crossed_mst"
FLAG_DEGENERATE_RESAMPLES = "degenerate_resamples"

# an n whose inner fits fail more often than this sets the degenerate flag
MAX_FAILED_FIT_FRACTION = 0.2

PARAM_DIM = 3


@dataclass(frozen=True)
class SampleSizeConfig:
    n_min: int = 20
    n_max: int = 200
    inner_draws: int = 30        # refits per test (I)
    outer_reps: int = 10         # test repetitions averaged per n (J)
    stride: int = 5
    level: float = 0.05
    seed: int = 0
    mvsw_replicates: int = 1000

    def __post_init__(self):
        if self.n_min < 20:
            raise ConfigError("n_min must be at least 20 (GEV fit-stability floor)")
        if self.n_max <= self.n_min:
            raise ConfigError("n_max must exceed n_min")
        if self.inner_draws <= PARAM_DIM:
            raise ConfigError(f"inner_draws must exceed the parameter dimension {PARAM_DIM}")
        if self.outer_reps < 1 or self.stride < 1 or self.mvsw_replicates < 1:
            raise ConfigError("outer_reps, stride and mvsw_replicates must be positive")
        if not 0.0 < self.level < 1.0:
            raise ConfigError("level must lie in (0, 1)")


@dataclass(frozen=True)
class PerNRecord:
    n: int
    mean_p_ht2: float
    mean_p_mst: float


@dataclass(frozen=True)
class SampleSizeResult:
    per_n: tuple
    line_ht2: tuple        # (slope, intercept)
    line_mst: tuple
    n_ht2: int
    n_mst: int
    n_estimate: int
    flags: frozenset
    fit_failures: dict = field(default_factory=dict)   # n -> (failed, attempted)

    def to_dict(self) -> dict:
        return {
            "per_n": [
                {"n": r.n, "mean_p_ht2": r.mean_p_ht2, "mean_p_mst": r.mean_p_mst}
                for r in self.per_n
            ],
            "line_ht2": {"slope": self.line_ht2[0], "intercept": self.line_ht2[1]},
            "line_mst": {"slope": self.line_mst[0], "intercept": self.line_mst[1]},
            "n_ht2": self.n_ht2,
            "n_mst": self.n_mst,
            "n_estimate": self.n_estimate,
            "flags": sorted(self.flags),
            "fit_failures": {
                str(n): {"failed": f, "attempted": a}
                for n, (f, a) in sorted(self.fit_failures.items())
            },
        }


def _pool(y_sim) -> np.ndarray:
    y = np.asarray(y_sim, dtype=np.float64)
    if y.ndim != 1 or y.size == 0:
        raise ValueError("extreme-sample pool must be a non-empty 1-D sequence")
    return y


def reference_parameters(y_sim, seed: int = 0) -> GevParams:
    """Reference GEV parameters from one jitter-and-fit of the whole pool."""
    y = _pool(y_sim)
    return fit_gev_minima(jitter(y, derive_seed(seed, "reference-jitter")))


def estimate_required_extremes(
    y_sim, cfg: SampleSizeConfig, theta_sim: GevParams
) -> SampleSizeResult:
    """Run the full resample/refit/test procedure and pick the sample size.

    Inner fits that fail (degenerate resample, non-convergence) are skipped
    and counted; an n losing more than MAX_FAILED_FIT_FRACTION of its fits
    sets the ``degenerate_resamples`` flag.  Deterministic for a fixed
    config seed.
    """
    y = _pool(y_sim)
    if cfg.n_max >= y.size:
        raise ConfigError(
            f"n_max={cfg.n_max} must stay strictly below the pool size {y.size}: "
            "resampled subsets close to the full pool keep repeating the same "
            "discrete values, and the normality test degenerates"
        )
    theta_ref = np.array([theta_sim.mu, theta_sim.sigma, theta_sim.xi])
    null_table = mvsw_null_stats(
        cfg.inner_draws, PARAM_DIM, cfg.mvsw_replicates, derive_seed(cfg.seed, "mvsw-null")
    )

    ns = list(range(cfg.n_min, cfg.n_max + 1, cfg.stride))
    per_n: list[PerNRecord] = []
    fit_failures: dict[int, tuple[int, int]] = {}
    flags = set()

    for n in ns:
        p_ht2_cells: list[float] = []
        p_mst_cells: list[float] = []
        failed = 0
        for j in range(cfg.outer_reps):
            triples = []
            for i in range(cfg.inner_draws):
                rng = np.random.default_rng(derive_seed(cfg.seed, "draw", n, j, i))
                subset = y[rng.integers(0, y.size, size=n)]
                try:
                    fitted = fit_gev_minima(
                        jitter(subset, derive_seed(cfg.seed, "jitter", n, j, i))
                    )
                except (DegenerateSamplesError, FitFailureError, InsufficientSamplesError):
                    failed += 1
                    continue
                triples.append([fitted.mu, fitted.sigma, fitted.xi])
            if len(triples) <= PARAM_DIM:
                continue
            arr = np.asarray(triples)
            try:
                p_ht2 = hotelling_t2(arr, theta_ref).p_value
                table = (
                    null_table
                    if arr.shape[0] == cfg.inner_draws
                    else mvsw_null_stats(
                        arr.shape[0],
                        PARAM_DIM,
                        cfg.mvsw_replicates,
                        derive_seed(cfg.seed, "mvsw-null", arr.shape[0]),
                    )
                )
                p_mst = shapiro_wilk_multivariate(arr, null_stats=table).p_value
            except (DegenerateSamplesError, InsufficientSamplesError, SingularCovarianceError):
                # collapsed estimates: the cell yields no p-values
                continue
            p_ht2_cells.append(p_ht2)
            p_mst_cells.append(p_mst)
        attempted = cfg.outer_reps * cfg.inner_draws
        fit_failures[n] = (failed, attempted)
        if failed > MAX_FAILED_FIT_FRACTION * attempted:
            flags.add(FLAG_DEGENERATE_RESAMPLES)
        if p_ht2_cells:
            per_n.append(
                PerNRecord(
                    n=n,
                    mean_p_ht2=float(np.mean(p_ht2_cells)),
                    mean_p_mst=float(np.mean(p_mst_cells)),
                )
            )

    if len(per_n) < 2:
        raise EstimationImpossibleError(
            f"only {len(per_n)} of {len(ns)} candidate sizes produced usable "
            "p-values; the pool cannot support the procedure",
            failure_table=fit_failures,
        )

    xs = [r.n for r in per_n]
    line_ht2 = fit_regression_line(xs, [r.mean_p_ht2 for r in per_n])
    line_mst = fit_regression_line(xs, [r.mean_p_mst for r in per_n])
    cross_ht2 = crossing_sample_size(*line_ht2, cfg.level, cfg.n_min, cfg.n_max)
    cross_mst = crossing_sample_size(*line_mst, cfg.level, cfg.n_min, cfg.n_max)
    if cross_ht2.never_crossed:
        flags.add(FLAG_NEVER_CROSSED_HT2)
    if cross_mst.never_crossed:
        flags.add(FLAG_NEVER_CROSSED_MST)

    # the mean test presupposes normality of the estimates, so the normality
    # crossing wins whenever it is the later one
    if cross_ht2.n < cross_mst.n:
        n_estimate = cross_mst.n
    else:
        n_estimate = cross_ht2.n

    return SampleSizeResult(
        per_n=tuple(per_n),
        line_ht2=line_ht2,
        line_mst=line_mst,
        n_ht2=cross_ht2.n,
        n_mst=cross_mst.n,
        n_estimate=n_estimate,
        flags=frozenset(flags),
        fit_failures=fit_failures,
    )
