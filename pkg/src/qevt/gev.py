"""Generalized extreme value law and run-count estimation.

Per-run minimum energies are modelled through the standard negation trick:
negate the minima, fit a GEV to the resulting maxima by maximum likelihood,
and answer probability queries about minima through the fitted law,

    P(min <= y) = 1 - G(-y),

where G is the fitted CDF.  All parameters returned by the fitting routines
therefore live in the negated (maxima) domain.

Discrete energy samples are continuized first by adding uniform jitter of
width delta, the smallest nonzero gap between sorted unique values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from .errors import DegenerateSamplesError, FitFailureError, InsufficientSamplesError

EULER_GAMMA = 0.5772156649015329

# below this |xi| the Gumbel branch is used to avoid catastrophic cancellation
GUMBEL_XI_EPS = 1e-6

XI_MIN, XI_MAX = -5.0, 5.0

FIT_XI_STARTS = (-0.3, -0.1, 0.0, 0.1, 0.3)

MIN_FIT_SAMPLES = 20

_SUPPORT_EPS = 1e-12
_PENALTY = 1e8


@dataclass(frozen=True)
class GevParams:
    """Location / scale / shape of a fitted extreme-value law."""

    mu: float
    sigma: float
    xi: float

    def __post_init__(self):
        if not (math.isfinite(self.mu) and math.isfinite(self.sigma) and math.isfinite(self.xi)):
            raise ValueError("GEV parameters must be finite")
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")


@dataclass(frozen=True, eq=False)
class JitteredSamples:
    """Continuized samples plus the jitter width and seed that produced them."""

    values: np.ndarray
    delta: float
    seed: int

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64)
        values.flags.writeable = False
        object.__setattr__(self, "values", values)


@dataclass(frozen=True)
class ShotEstimate:
    """Required runs and total shots for one (alpha, shots_s) setting.

    ``n_evt`` is ``math.inf`` when the target is unreachable (zero success
    probability); ``total_shots`` mirrors that sentinel.
    """

    success_prob: float
    alpha: float
    n_evt: float
    shots_s: int
    total_shots: float

    def __post_init__(self):
        if not 0.0 <= self.success_prob <= 1.0:
            raise ValueError("success_prob must lie in [0, 1]")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must lie in (0, 1)")
        if math.isfinite(self.n_evt) and self.total_shots != self.n_evt * self.shots_s:
            raise ValueError("total_shots must equal n_evt * shots_s")


def gev_cdf(params: GevParams, z):
    """CDF of the GEV law; scalar in, scalar out (arrays broadcast)."""
    z = np.asarray(z, dtype=np.float64)
    mu, sigma, xi = params.mu, params.sigma, params.xi
    u = (z - mu) / sigma
    if abs(xi) < GUMBEL_XI_EPS:
        out = np.exp(-np.exp(-u))
    else:
        t = 1.0 + xi * u
        inside = t > 0.0
        out = np.where(inside, np.exp(-np.power(np.where(inside, t, 1.0), -1.0 / xi)), 0.0)
        # outside the support: CDF is 0 below a lower endpoint (xi > 0),
        # 1 above an upper endpoint (xi < 0)
        out = np.where(inside, out, 0.0 if xi > 0 else 1.0)
    return float(out) if out.ndim == 0 else out


def gev_pdf(params: GevParams, z):
    """Density of the GEV law (0 outside the support)."""
    z = np.asarray(z, dtype=np.float64)
    mu, sigma, xi = params.mu, params.sigma, params.xi
    u = (z - mu) / sigma
    if abs(xi) < GUMBEL_XI_EPS:
        out = np.exp(-u - np.exp(-u)) / sigma
    else:
        t = 1.0 + xi * u
        inside = t > 0.0
        ts = np.where(inside, t, 1.0)
        w = np.power(ts, -1.0 / xi)
        out = np.where(inside, np.power(ts, -1.0 / xi - 1.0) * np.exp(-w) / sigma, 0.0)
    return float(out) if out.ndim == 0 else out


def gev_quantile(params: GevParams, q: float) -> float:
    """Inverse CDF; exact round trip with :func:`gev_cdf` on the interior."""
    if not 0.0 < q < 1.0:
        raise ValueError(f"quantile level must lie in (0, 1), got {q}")
    mu, sigma, xi = params.mu, params.sigma, params.xi
    log_q = -math.log(q)
    if abs(xi) < GUMBEL_XI_EPS:
        return mu - sigma * math.log(log_q)
    return mu + sigma / xi * (log_q ** (-xi) - 1.0)


def jitter(energies, seed: int = 0) -> JitteredSamples:
    """Add uniform noise of width delta, the smallest nonzero gap between
    sorted unique values.

    Raises :class:`DegenerateSamplesError` when every value is identical
    (no gap exists, so the samples carry no variability to model).
    """
    values = np.asarray(energies, dtype=np.float64)
    if values.ndim != 1 or values.size == 0:
        raise ValueError("energies must be a non-empty 1-D sequence")
    uniq = np.unique(values)
    if uniq.size < 2:
        raise DegenerateSamplesError(
            f"all {values.size} samples are identical ({uniq[0]!r}); "
            "jitter width is undefined"
        )
    delta = float(np.diff(uniq).min())
    rng = np.random.default_rng(seed)
    noisy = values + rng.uniform(-delta / 2.0, delta / 2.0, size=values.size)
    return JitteredSamples(values=noisy, delta=delta, seed=seed)


def gev_nll(params: GevParams, maxima) -> float:
    """Negative log-likelihood of maxima-domain data under the law."""
    value, _ = _nll_and_grad(
        np.array([params.mu, params.sigma, params.xi]), np.asarray(maxima, dtype=np.float64)
    )
    return float(value)


def _nll_and_grad(theta: np.ndarray, y: np.ndarray):
    mu, sigma, xi = theta
    m = y.size
    if sigma <= 0.0:
        return _PENALTY * (1.0 + abs(sigma)), np.array([0.0, -_PENALTY, 0.0])
    u = (y - mu) / sigma
    if abs(xi) < GUMBEL_XI_EPS:
        e = np.exp(-u)
        nll = m * np.log(sigma) + u.sum() + e.sum()
        dmu = (-m + e.sum()) / sigma
        dsigma = (m - u.sum() + (u * e).sum()) / sigma
        # exact limit of the shape derivative as xi -> 0, keeps the switch smooth
        dxi = (u - 0.5 * u * u * (1.0 - e)).sum()
        return nll, np.array([dmu, dsigma, dxi])
    t = 1.0 + xi * u
    bad = t <= _SUPPORT_EPS
    if bad.any():
        # graded penalty whose gradient pushes the support constraint back
        viol = (_SUPPORT_EPS - t[bad]).sum()
        f = _PENALTY * (1.0 + viol)
        g = _PENALTY * np.array(
            [
                (xi / sigma) * bad.sum(),
                (xi / sigma) * u[bad].sum(),
                -u[bad].sum(),
            ]
        )
        return f, g
    logt = np.log(t)
    # cap the exponent: far-off iterates would overflow, and a huge finite
    # value steers the optimizer back just as well
    w = np.exp(np.minimum(-logt / xi, 500.0))
    inv_t = 1.0 / t
    nll = m * np.log(sigma) + (1.0 + 1.0 / xi) * logt.sum() + w.sum()
    s1 = inv_t.sum()
    s2 = (u * inv_t).sum()
    sw1 = (w * inv_t).sum()
    sw2 = (w * u * inv_t).sum()
    dmu = (-(1.0 + xi) * s1 + sw1) / sigma
    dsigma = (m - (1.0 + xi) * s2 + sw2) / sigma
    dxi = -logt.sum() / xi**2 + (1.0 + 1.0 / xi) * s2 + (w * logt).sum() / xi**2 - sw2 / xi
    grad = np.array([dmu, dsigma, dxi])
    if not (np.isfinite(nll) and np.all(np.isfinite(grad))):
        return _PENALTY * 2.0, np.zeros(3)
    return nll, grad


def _support_ok(theta: np.ndarray, y: np.ndarray) -> bool:
    mu, sigma, xi = theta
    if sigma <= 0.0:
        return False
    if abs(xi) < GUMBEL_XI_EPS:
        return True
    return bool(np.all(1.0 + xi * (y - mu) / sigma > 0.0))


def fit_gev_minima(samples: JitteredSamples) -> GevParams:
    """Maximum-likelihood GEV parameters for block minima.

    The samples are negated and the GEV of the resulting maxima fitted;
    the returned parameters describe that negated domain (use
    :func:`success_probability` for queries about the original minima).

    Initialization is Gumbel method-of-moments on the negated data, with
    multi-starts over shape values FIT_XI_STARTS; candidates are ranked by
    negative log-likelihood, ties by start index.
    """
    values = np.asarray(samples.values, dtype=np.float64)
    if values.size < MIN_FIT_SAMPLES:
        raise InsufficientSamplesError(
            f"need at least {MIN_FIT_SAMPLES} samples for a stable fit, got {values.size}"
        )
    y = -values
    spread = float(y.std(ddof=1))
    if spread == 0.0:
        raise DegenerateSamplesError("samples have zero variance")
    sigma0 = spread * math.sqrt(6.0) / math.pi
    mu0 = float(y.mean()) - EULER_GAMMA * sigma0
    bounds = [(None, None), (1e-8 * sigma0, None), (XI_MIN, XI_MAX)]

    results = []
    diagnostics = []
    for idx, xi0 in enumerate(FIT_XI_STARTS):
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            res = optimize.minimize(
                _nll_and_grad,
                np.array([mu0, sigma0, xi0]),
                args=(y,),
                jac=True,
                method="L-BFGS-B",
                bounds=bounds,
                options={"maxiter": 200},
            )
        theta = res.x
        if np.all(np.isfinite(theta)) and math.isfinite(res.fun) and _support_ok(theta, y):
            results.append((float(res.fun), idx, theta))
        else:
            diagnostics.append(f"start xi={xi0}: {res.message} (fun={res.fun})")
    if not results:
        raise FitFailureError(
            f"GEV fit failed from all {len(FIT_XI_STARTS)} starts", diagnostics=diagnostics
        )
    _, _, best = min(results, key=lambda t: (t[0], t[1]))
    return GevParams(mu=float(best[0]), sigma=float(best[1]), xi=float(best[2]))


def success_probability(params: GevParams, y_ideal: float) -> float:
    """P(per-run minimum <= y_ideal) under the fitted (negated-domain) law."""
    return 1.0 - gev_cdf(params, -y_ideal)


def required_runs(success_prob: float, alpha: float):
    """Smallest run count giving at least one success with confidence alpha.

    ceil(log(1-alpha) / log(1-p)); 1 when a single run already suffices,
    ``math.inf`` when the success probability is zero.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    if not 0.0 <= success_prob <= 1.0:
        raise ValueError(f"success_prob must lie in [0, 1], got {success_prob}")
    if success_prob == 0.0:
        return math.inf
    if success_prob == 1.0:
        return 1
    ratio = math.log(1.0 - alpha) / math.log(1.0 - success_prob)
    return max(1, math.ceil(ratio))


def estimate_shots(params: GevParams, y_ideal: float, alpha: float, shots_s: int) -> ShotEstimate:
    """Bundle success probability, required runs, and total shots."""
    if shots_s < 1:
        raise ValueError("shots_s must be positive")
    p = success_probability(params, y_ideal)
    n_evt = required_runs(p, alpha)
    total = n_evt * shots_s if math.isfinite(n_evt) else math.inf
    return ShotEstimate(
        success_prob=p, alpha=alpha, n_evt=n_evt, shots_s=shots_s, total_shots=total
    )
