"""Nadaraya-Watson regression of the intensity on the state, and the plug-in
jump-coefficient estimator a^2 = (g - sigma^2) / f.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import signal
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted

from .hawkes import FittedHawkes, intensity_at

# exp(-u^2/2) is exactly 0.0 in double precision beyond this many bandwidths
KERNEL_CUTOFF = 39.0
EXACT_CV_MAX = 3000
BIN_COUNT = 4096


@dataclass
class NWEstimator:
    xs: np.ndarray
    ys: np.ndarray
    h: float

    def __post_init__(self):
        self.xs = np.asarray(self.xs, dtype=float).ravel()
        self.ys = np.asarray(self.ys, dtype=float).ravel()
        if self.xs.shape[0] == 0:
            raise ValueError("empty design")
        if self.xs.shape != self.ys.shape:
            raise ValueError("xs and ys must have the same length")
        if not self.h > 0:
            raise ValueError("bandwidth must be positive")
        order = np.argsort(self.xs, kind="stable")
        self._sx, self._sy = self.xs[order], self.ys[order]

    def __call__(self, x):
        scalar = np.ndim(x) == 0
        v = nw_predict(self._sx, self._sy, self.h, np.atleast_1d(x), presorted=True)
        return float(v[0]) if scalar else v


def nw_predict(xs, ys, h, xq, presorted=False, chunk_elems=2_000_000) -> np.ndarray:
    """Gaussian-kernel Nadaraya-Watson at the query points.

    Falls back to the nearest design point's response wherever every weight
    underflows.
    """
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    xq = np.asarray(xq, dtype=float)
    if not presorted:
        o = np.argsort(xs, kind="stable")
        xs, ys = xs[o], ys[o]
    qo = np.argsort(xq, kind="stable")
    sq = xq[qo]
    out = np.empty_like(sq)
    reach = KERNEL_CUTOFF * h
    i = 0
    while i < sq.shape[0]:
        lo = int(np.searchsorted(xs, sq[i] - reach, side="left"))
        # grow the query block while the design window stays within budget
        step = max(1, chunk_elems // max(1, xs.shape[0]))
        j = min(sq.shape[0], i + step)
        hi = int(np.searchsorted(xs, sq[j - 1] + reach, side="right"))
        wx, wy = xs[lo:hi], ys[lo:hi]
        if wx.shape[0] == 0:
            num = np.zeros(j - i)
            den = np.zeros(j - i)
        else:
            u = (sq[i:j, None] - wx[None, :]) / h
            w = np.exp(-0.5 * u * u)
            num = w @ wy
            den = w.sum(axis=1)
        blk = np.empty(j - i)
        ok = den > 0
        blk[ok] = num[ok] / den[ok]
        if not np.all(ok):
            k = np.searchsorted(xs, sq[i:j][~ok])
            k0 = np.clip(k - 1, 0, xs.shape[0] - 1)
            k1 = np.clip(k, 0, xs.shape[0] - 1)
            q = sq[i:j][~ok]
            near = np.where(np.abs(q - xs[k0]) <= np.abs(xs[k1] - q), k0, k1)
            blk[~ok] = ys[near]
        out[i:j] = blk
        i = j
    res = np.empty_like(out)
    res[qo] = out
    return res


def nw_eval(est: NWEstimator, x: float) -> float:
    return float(est(float(x)))


def default_bandwidth_grid(xs, size: int = 30) -> np.ndarray:
    """``size`` log-spaced bandwidths from 1% of the data range to the full range."""
    r = float(np.ptp(xs))
    if not r > 0:
        raise ValueError("design points have zero range")
    return np.geomspace(0.01 * r, r, size)


def _loo_scores_exact(xs, ys, grid) -> np.ndarray:
    scores = np.empty(len(grid))
    d2 = (xs[:, None] - xs[None, :]) ** 2
    for g, h in enumerate(grid):
        w = np.exp(-0.5 * d2 / (h * h))
        np.fill_diagonal(w, 0.0)
        den = w.sum(axis=1)
        num = w @ ys
        pred = np.empty_like(ys)
        ok = den > 0
        pred[ok] = num[ok] / den[ok]
        if not np.all(ok):
            # nearest other point when every leave-one-out weight underflows
            dd = d2[~ok].copy()
            dd[np.arange(dd.shape[0]), np.flatnonzero(~ok)] = np.inf
            pred[~ok] = ys[np.argmin(dd, axis=1)]
        r = ys - pred
        scores[g] = r @ r
    return scores


def _loo_scores_binned(xs, ys, grid, bins=BIN_COUNT) -> np.ndarray:
    """Leave-one-out scores with linearly binned sums.

    Kernel sums on a regular grid are interpolated back to each design point,
    and each point's own binned contribution is removed exactly.
    """
    lo, hi = float(xs.min()), float(xs.max())
    delta = (hi - lo) / (bins - 1)
    pos = (xs - lo) / delta
    idx = np.clip(np.floor(pos).astype(np.int64), 0, bins - 2)
    frac = pos - idx
    c = np.bincount(idx, 1 - frac, bins) + np.bincount(idx + 1, frac, bins)
    cy = np.bincount(idx, (1 - frac) * ys, bins) + np.bincount(idx + 1, frac * ys, bins)
    nearest = _nearest_other(xs, ys)
    scores = np.empty(len(grid))
    for g, h in enumerate(grid):
        m = min(bins - 1, int(math.ceil(KERNEL_CUTOFF * h / delta)))
        k = np.exp(-0.5 * (np.arange(-m, m + 1) * delta / h) ** 2)
        S1 = signal.fftconvolve(c, k, mode="same")
        Sy = signal.fftconvolve(cy, k, mode="same")
        s1 = (1 - frac) * S1[idx] + frac * S1[idx + 1]
        sy = (1 - frac) * Sy[idx] + frac * Sy[idx + 1]
        k1 = k[m + 1] if m >= 1 else 0.0
        self_w = (1 - frac) ** 2 + frac ** 2 + 2 * frac * (1 - frac) * k1
        den = s1 - self_w
        num = sy - self_w * ys
        ok = den > 1e-10
        # isolated points: the exact weights are dominated by the nearest neighbour
        pred = np.where(ok, num / np.where(ok, den, 1.0), nearest)
        r = ys - pred
        scores[g] = r @ r
    return scores


def _nearest_other(xs, ys) -> np.ndarray:
    """Response of each point's nearest other design point (left wins ties)."""
    o = np.argsort(xs, kind="stable")
    sx, sy = xs[o], ys[o]
    dl = np.concatenate([[np.inf], np.diff(sx)])
    dr = np.concatenate([np.diff(sx), [np.inf]])
    left = np.concatenate([sy[:1], sy[:-1]])
    right = np.concatenate([sy[1:], sy[-1:]])
    out = np.empty_like(ys)
    out[o] = np.where(dl <= dr, left, right)
    return out


def loo_cv_scores(xs, ys, grid, method: str = "auto") -> np.ndarray:
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if method == "auto":
        method = "exact" if xs.shape[0] <= EXACT_CV_MAX else "binned"
    if method == "exact":
        return _loo_scores_exact(xs, ys, grid)
    if method == "binned":
        return _loo_scores_binned(xs, ys, grid)
    raise ValueError(f"unknown method {method!r}")


def loo_cv_bandwidth(xs, ys, grid=None, method: str = "auto") -> float:
    """Bandwidth minimising the leave-one-out squared prediction error.

    Scores equal up to rounding count as ties, and ties go to the smallest h.
    """
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.shape[0] < 3:
        raise ValueError("need at least 3 points for leave-one-out CV")
    grid = default_bandwidth_grid(xs) if grid is None else np.sort(np.asarray(grid, dtype=float))
    if grid.shape[0] == 0:
        raise ValueError("empty bandwidth grid")
    scores = loo_cv_scores(xs, ys, grid, method)
    best = float(np.min(scores))
    tol = 1e-9 * best + 1e-15 * float(ys @ ys)
    return float(grid[np.flatnonzero(scores <= best + tol)[0]])


class NadarayaWatson(BaseEstimator, RegressorMixin):
    """Gaussian-kernel smoother; the bandwidth is picked by leave-one-out CV when not given."""

    def __init__(self, bandwidth=None, bandwidths=None, n_bandwidths=30):
        self.bandwidth = bandwidth
        self.bandwidths = bandwidths
        self.n_bandwidths = n_bandwidths

    def fit(self, X, y):
        xs = np.ravel(np.asarray(X, dtype=float))
        ys = np.ravel(np.asarray(y, dtype=float))
        if self.bandwidth is not None:
            h = float(self.bandwidth)
        else:
            grid = (self.bandwidths if self.bandwidths is not None
                    else default_bandwidth_grid(xs, self.n_bandwidths))
            h = loo_cv_bandwidth(xs, ys, grid)
        self.estimator_ = NWEstimator(xs, ys, h)
        self.bandwidth_ = h
        return self

    def predict(self, X):
        check_is_fitted(self, "estimator_")
        return self.estimator_(np.ravel(np.asarray(X, dtype=float)))


def intensity_regression(xs, lam_total, grid=None) -> NWEstimator:
    """NW estimator of E[sum_j lambda^(j) | X = x] from paired samples."""
    xs = np.asarray(xs, dtype=float)
    lam_total = np.asarray(lam_total, dtype=float)
    if grid is None:
        if np.ptp(xs) > 0:
            grid = default_bandwidth_grid(xs)
        else:
            grid = [1.0]
    if xs.shape[0] >= 3:
        h = loo_cv_bandwidth(xs, lam_total, grid)
    else:
        h = float(np.max(grid))
    return NWEstimator(xs, lam_total, h)


def estimate_f(path, fh: FittedHawkes, grid=None) -> NWEstimator:
    """Regress the fitted pooled intensity lambda-hat(t_k-) on X_{t_k}, k < n."""
    if path.jumps is None:
        raise ValueError("estimating f requires the jump times of the counting process")
    times = path.delta * np.arange(path.n)
    lam = intensity_at(fh.params, path.jumps, None, times).sum(axis=1)
    return intensity_regression(path.x[:-1], lam, grid)


@dataclass(frozen=True)
class JumpCoeffConfig:
    f0: float

    def __post_init__(self):
        if not self.f0 > 0:
            raise ValueError("f0 must be positive")


def estimate_a2(g_fit, s2_fit, f_est, cfg: JumpCoeffConfig, x):
    """(g-hat - sigma2-hat)/f-hat where f-hat > f0/2, else 0; negative numerators clamp to 0.

    ``g_fit``/``s2_fit`` are AdaptiveFit or ProjectionFit objects.
    """
    scalar = np.ndim(x) == 0
    xq = np.atleast_1d(np.asarray(x, dtype=float))
    for fit in (g_fit, s2_fit):
        iv = (fit.fit if hasattr(fit, "fit") else fit).space.interval
        if not np.all(iv.contains(xq)):
            raise ValueError(f"x outside the estimation interval [{iv.lo}, {iv.hi}]")
    num = np.maximum(np.asarray(g_fit(xq)) - np.asarray(s2_fit(xq)), 0.0)
    f = np.asarray(f_est(xq), dtype=float)
    keep = f > cfg.f0 / 2
    out = np.zeros_like(num)
    out[keep] = num[keep] / f[keep]
    return float(out[0]) if scalar else out


def check_f_floor(f_est, grid, f0: float) -> bool:
    """Warn when f-hat dips below f0/2 on the grid; returns True when it does not."""
    m = float(np.min(f_est(grid)))
    if m < f0 / 2:
        warnings.warn(f"min f-hat on the interval is {m:.4g} < f0/2 = {f0 / 2:.4g}", RuntimeWarning)
        return False
    return True
