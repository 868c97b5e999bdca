"""Jump detection, dwell statistics, bit-flip times and scaling-law fits.

Jump detection is a hysteresis (Schmitt-trigger) classifier on the I
quadrature: mode centers come from a deterministic two-Gaussian EM fit and
the switch thresholds sit between the modes at center +- h * sigma.  The
first and last dwells of a record never see both endpoints of their
interval, so they carry censoring flags and are excluded from the mean by
default.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import optimize, stats

from . import liouville
from .hetero import IQSeries
from .liouville import ModelSpec
from .qcore import annihilation, coherent


class NotBimodalError(ValueError):
    """The I histogram shows no resolvable two-state structure."""


class TooFewDwellsError(ValueError):
    """Not enough uncensored dwell intervals for the requested statistic."""


class DecayFitError(RuntimeError):
    """The relaxation signal could not be fit to a decaying exponential."""


@dataclass
class TwoGaussian:
    mu_lo: float
    sigma_lo: float
    mu_hi: float
    sigma_hi: float
    weight_lo: float

    @property
    def separation(self) -> float:
        """Two-component separation score |mu_hi - mu_lo| / (sigma_lo + sigma_hi)."""
        return abs(self.mu_hi - self.mu_lo) / (self.sigma_lo + self.sigma_hi)


def fit_two_gaussians(x, n_iter: int = 200, tol: float = 1e-10) -> TwoGaussian:
    """Deterministic 1-d two-component EM, initialized at the quartiles."""
    x = np.asarray(x, dtype=float)
    mu = np.array([np.percentile(x, 25), np.percentile(x, 75)])
    sig = np.full(2, max(np.std(x) / 2, 1e-12))
    w = np.array([0.5, 0.5])
    ll_old = -np.inf
    half_log2pi = 0.5 * np.log(2 * np.pi)
    for _ in range(n_iter):
        logp = np.stack([
            np.log(w[k] + 1e-300) - 0.5 * ((x - mu[k]) / sig[k]) ** 2
            - np.log(sig[k]) - half_log2pi
            for k in (0, 1)
        ])
        norm = np.logaddexp(logp[0], logp[1])
        resp = np.exp(logp - norm)
        for k in (0, 1):
            rk = resp[k].sum()
            if rk < 1e-12:
                continue
            mu[k] = np.sum(resp[k] * x) / rk
            sig[k] = max(np.sqrt(np.sum(resp[k] * (x - mu[k]) ** 2) / rk), 1e-12)
            w[k] = rk / len(x)
        ll = float(norm.sum())
        if abs(ll - ll_old) < tol * max(1.0, abs(ll)):
            break
        ll_old = ll
    lo, hi = (0, 1) if mu[0] <= mu[1] else (1, 0)
    return TwoGaussian(mu[lo], sig[lo], mu[hi], sig[hi], w[lo])


@dataclass
class DwellSet:
    """Dwell durations between detected state changes."""

    durations: np.ndarray      # seconds, one entry per dwell
    states: np.ndarray         # +1 / -1 label of each dwell
    censored: np.ndarray       # True for first/last (cut-off) dwells
    t_m: float
    total_duration: float
    fit: TwoGaussian | None = field(default=None, repr=False)

    @property
    def n_jumps(self) -> int:
        return max(len(self.durations) - 1, 0)

    def uncensored(self) -> np.ndarray:
        return self.durations[~self.censored]


def detect_jumps(series: IQSeries, hysteresis: float = 0.5,
                 min_separation: float = 2.0) -> DwellSet:
    """Hysteresis two-threshold classifier on the I quadrature.

    Requires a bimodal I histogram (separation score > min_separation).
    Thresholds sit at the midpoint +- hysteresis * pooled sigma; the state
    switches only on full crossings, which suppresses noise-induced false
    flips for per-sample SNR >= 3.
    """
    x = series.i
    if len(x) < 4:
        raise NotBimodalError("record too short")
    sub = x if len(x) <= 200_000 else x[:: len(x) // 200_000 + 1]
    fit = fit_two_gaussians(sub)
    if fit.separation <= min_separation:
        raise NotBimodalError(
            f"two-component separation {fit.separation:.2f} <= {min_separation}"
        )
    center = (fit.mu_lo + fit.mu_hi) / 2.0
    pooled = (fit.sigma_lo + fit.sigma_hi) / 2.0
    upper = center + hysteresis * pooled
    lower = center - hysteresis * pooled

    # vectorized Schmitt trigger: forward-fill the last decisive sample
    decisive = np.where(x > upper, 1, np.where(x < lower, -1, 0))
    idx = np.arange(len(x))
    last = np.where(decisive != 0, idx, -1)
    np.maximum.accumulate(last, out=last)
    states = np.where(last >= 0, decisive[np.clip(last, 0, None)],
                      1 if x[0] >= center else -1)

    change = np.flatnonzero(np.diff(states) != 0)
    boundaries = np.concatenate(([0], change + 1, [len(x)]))
    lengths = np.diff(boundaries) * series.meta.t_m
    labels = states[boundaries[:-1]]
    censored = np.zeros(len(lengths), dtype=bool)
    censored[0] = True
    censored[-1] = True
    return DwellSet(lengths, labels, censored, series.meta.t_m,
                    series.duration, fit=fit)


@dataclass
class DwellCdf:
    taus: np.ndarray
    cdf: np.ndarray
    mean: float
    ks_stat: float
    ks_pvalue: float


def dwell_cdf(dwells: DwellSet, min_count: int = 20) -> DwellCdf:
    """Empirical CDF of uncensored dwells plus a KS exponentiality diagnostic."""
    taus = np.sort(dwells.uncensored())
    if len(taus) < min_count:
        raise TooFewDwellsError(f"{len(taus)} uncensored dwells < {min_count}")
    cdf = np.arange(1, len(taus) + 1) / len(taus)
    mean = float(np.mean(taus))
    ks = stats.kstest(taus, "expon", args=(0.0, mean))
    return DwellCdf(taus, cdf, mean, float(ks.statistic), float(ks.pvalue))


@dataclass
class BitflipEstimate:
    t_bf: float
    ci: tuple
    n_dwells: int
    is_lower_bound: bool


def bitflip_time(dwells: DwellSet, confidence: float = 0.95,
                 min_dwells: int = 5) -> BitflipEstimate:
    """Mean uncensored dwell with the exponential-mean chi-squared interval.

    With fewer than `min_dwells` uncensored intervals the censored record
    still bounds the flip time from below; the bound is flagged.
    """
    taus = dwells.uncensored()
    n = len(taus)
    if n >= min_dwells:
        mean = float(np.mean(taus))
        alpha = 1.0 - confidence
        lo = 2 * n * mean / stats.chi2.ppf(1 - alpha / 2, 2 * n)
        hi = 2 * n * mean / stats.chi2.ppf(alpha / 2, 2 * n)
        return BitflipEstimate(mean, (float(lo), float(hi)), n, False)
    if len(dwells.durations) == 0 and dwells.total_duration == 0:
        raise TooFewDwellsError("empty record")
    bound = float(dwells.total_duration / max(dwells.n_jumps, 1))
    return BitflipEstimate(bound, (bound, np.inf), n, True)


def bitflip_from_decay(spec: ModelSpec, alpha0: complex, dim: int,
                       horizon: float | None = None, max_doublings: int = 24,
                       decay_target: float = 0.1, n_points: int = 50,
                       method: str = "BDF"):
    """Bit-flip time from the exponential decay of <a> out of a pointer state.

    Evolves |alpha0> under the model, doubling the horizon until |<a>| has
    dropped to `decay_target` of its initial value, then fits A exp(-t/T)
    over the single-exponential window (after the fast transient, before the
    noise floor).  Returns (T, fit_info).  Raises DecayFitError when the
    signal does not decay, e.g. when a degenerate steady manifold preserves
    it.  The default integrator is implicit: tunneling horizons are
    astronomically stiff relative to the confinement rate.
    """
    a = annihilation(dim)
    rho = coherent(dim, alpha0).to_density()
    liou = liouville.build_liouvillian(spec)
    if horizon is None:
        horizon = 10.0 / spec.rate_scale()

    ts_all = [np.array([0.0])]
    ys_all = [np.array([abs(coherent(dim, alpha0).expect(a))])]
    t0 = 0.0
    y0 = ys_all[0][0]
    for _ in range(max_doublings):
        times = np.linspace(0.0, horizon, n_points)
        res = liouville.evolve(spec, rho, times, [a], liou=liou, method=method)
        sig = np.abs(res.expectations[0])
        ts_all.append(t0 + times[1:])
        ys_all.append(sig[1:])
        if sig[-1] < decay_target * y0:
            break
        rho = res.final_state
        t0 += horizon
        horizon *= 2.0
    else:
        raise DecayFitError(
            f"|<a>| only reached {ys_all[-1][-1] / y0:.3f} of its initial value "
            f"after {max_doublings} horizon doublings; no decaying channel?"
        )

    ts = np.concatenate(ts_all)
    ys = np.concatenate(ys_all)
    window = (ys < 0.93 * y0) & (ys > 1.05 * decay_target * y0)
    if np.count_nonzero(window) < 5:
        window = (ys < 0.98 * y0) & (ys > 0.5 * decay_target * y0)
    ts_w, ys_w = ts[window], ys[window]
    if len(ts_w) < 3:
        raise DecayFitError("too few points in the exponential window")
    if np.any(np.diff(ys_w) > 0.05 * y0):
        raise DecayFitError("non-monotone signal; exponential fit invalid")

    slope, icpt = np.polyfit(ts_w, np.log(ys_w), 1)
    if slope >= 0:
        raise DecayFitError("fitted rate is nonnegative")

    def model(t, amp, rate):
        return amp * np.exp(-rate * t)

    popt, _ = optimize.curve_fit(model, ts_w, ys_w, p0=(np.exp(icpt), -slope),
                                 maxfev=10000)
    t_bf = 1.0 / popt[1]
    return float(t_bf), {"amplitude": float(popt[0]), "points": len(ts_w),
                         "span": float(ts_w[-1])}


@dataclass
class ScalingFit:
    factor: float          # multiplicative growth per photon
    t_sat: float           # saturation level in seconds (inf when unbounded)
    t0: float              # extrapolated T at nbar = 0
    breakpoint: float      # nbar where the fit saturates (inf when unbounded)
    sse: float


def scaling_fit(points) -> ScalingFit:
    """Two-segment fit T = min(T_sat, T0 * factor^nbar) in log space.

    `points` is a sequence of (nbar, T_bf) pairs; a breakpoint search over
    the number of saturated tail points picks the least-squares best split.
    Point order does not matter.
    """
    pts = sorted((float(n), float(t)) for n, t in points)
    if len(pts) < 4:
        raise ValueError(f"need >= 4 points, got {len(pts)}")
    nbar = np.array([p[0] for p in pts])
    logt = np.log([p[1] for p in pts])
    n = len(pts)

    fits = []
    for n_tail in range(0, n - 1):
        head = slice(0, n - n_tail)
        if n - n_tail < 2:
            continue
        b, a = np.polyfit(nbar[head], logt[head], 1)
        c = np.mean(logt[n - n_tail:]) if n_tail > 0 else np.inf
        pred = np.minimum(c, a + b * nbar)
        sse = float(np.sum((pred - logt) ** 2))
        fits.append((sse, n_tail, a, b, c))
    best_sse = min(f[0] for f in fits)
    # prefer the shortest tail among numerically tied fits
    tied = [f for f in fits if f[0] <= best_sse + 1e-9 * (1.0 + best_sse)]
    sse, n_tail, a, b, c = min(tied, key=lambda f: f[1])
    t_sat = float(np.exp(c)) if np.isfinite(c) else np.inf
    breakpoint = (c - a) / b if np.isfinite(c) and b != 0 else np.inf
    return ScalingFit(float(np.exp(b)), t_sat, float(np.exp(a)), float(breakpoint), sse)
