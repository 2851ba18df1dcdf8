"""Adaptive projection estimators of sigma^2 (truncated increments) and of
g = sigma^2 + a^2 f (raw increments), with penalised dimension selection.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted

from .exceptions import HJDError, RankDeficientError
from .projection import (Interval, ProjectionFit, TrigSpace, data_interval,
                         empirical_norm_sq, eval_fit, least_squares_fit)


@dataclass(frozen=True)
class EstimationConfig:
    beta: float = 0.26
    kappa1: float = 100.0
    kappa2: float = 100.0
    eps: float = 0.0
    nmax: int = 20

    def __post_init__(self):
        if not 0.25 < self.beta < 0.5:
            raise ValueError("beta must lie in (1/4, 1/2)")
        if self.kappa1 < 0 or self.kappa2 < 0:
            raise ValueError("penalty constants must be non-negative")
        if self.eps < 0:
            raise ValueError("eps must be >= 0")
        if self.nmax < 1:
            raise ValueError("nmax must be >= 1")

    @property
    def dims(self) -> list[int]:
        return list(range(1, self.nmax + 1, 2))


@dataclass
class TraceEntry:
    dim: int
    contrast: float
    penalty: float
    criterion: float
    skipped: bool = False


@dataclass
class AdaptiveFit:
    fit: ProjectionFit
    trace: list[TraceEntry]
    fits: dict[int, ProjectionFit] = field(default_factory=dict, repr=False)

    @property
    def dim(self) -> int:
        return self.fit.space.dim

    def __call__(self, x):
        return eval_fit(self.fit, x)

    def to_dict(self) -> dict:
        d = self.fit.to_dict()
        d["trace"] = [
            {"dim": t.dim,
             "contrast": None if t.skipped else t.contrast,
             "penalty": t.penalty,
             "criterion": None if t.skipped else t.criterion,
             "skipped": t.skipped}
            for t in self.trace
        ]
        return d


def truncation_phi(u):
    """Smooth cutoff: 1 on |u|<1, exp(1/3 + 1/(u^2-4)) on 1<=|u|<2, 0 beyond."""
    scalar = np.ndim(u) == 0
    u = np.abs(np.asarray(u, dtype=float))
    out = np.zeros_like(u)
    out[u < 1] = 1.0
    mid = (u >= 1) & (u < 2)
    out[mid] = np.exp(1.0 / 3.0 + 1.0 / (u[mid] ** 2 - 4.0))
    return float(out) if scalar else out


def t_statistics(path, beta: float = 0.26, truncated: bool = True) -> np.ndarray:
    """T_i = (X_{i+1} - X_i)^2 / delta, optionally times phi(dX / delta^beta)."""
    dx = np.diff(path.x)
    T = dx * dx / path.delta
    if truncated:
        T = T * truncation_phi(dx / path.delta ** beta)
    return T


def fit_all_dims(xs, ys, interval: Interval, dims) -> dict[int, Optional[ProjectionFit]]:
    out = {}
    for D in dims:
        try:
            out[D] = least_squares_fit(xs, ys, TrigSpace(interval, D))
        except RankDeficientError:
            out[D] = None
    return out


def select_dimension(fits: dict, penalty: Callable[[int], float]) -> AdaptiveFit:
    """Exhaustive argmin of contrast + penalty; ties go to the smallest dimension."""
    trace = []
    best = None
    for D in sorted(fits):
        pen = float(penalty(D))
        f = fits[D]
        if f is None:
            trace.append(TraceEntry(D, math.nan, pen, math.nan, skipped=True))
            continue
        crit = f.contrast + pen
        trace.append(TraceEntry(D, f.contrast, pen, crit))
        if best is None or crit < best[0]:
            best = (crit, f)
    if best is None:
        raise HJDError("every dimension was rank deficient")
    return AdaptiveFit(best[1], trace, {D: f for D, f in fits.items() if f is not None})


def _design(path):
    return path.x[:-1]


def fit_sigma2_dim(path, interval: Interval, cfg: EstimationConfig, D: int) -> ProjectionFit:
    T = t_statistics(path, cfg.beta, truncated=True)
    return least_squares_fit(_design(path), T, TrigSpace(interval, D))


def fit_g_dim(path, interval: Interval, D: int) -> ProjectionFit:
    T = t_statistics(path, truncated=False)
    return least_squares_fit(_design(path), T, TrigSpace(interval, D))


def select_sigma2(path, interval: Interval, cfg: EstimationConfig = EstimationConfig()) -> AdaptiveFit:
    n = path.n
    T = t_statistics(path, cfg.beta, truncated=True)
    fits = fit_all_dims(_design(path), T, interval, cfg.dims)
    return select_dimension(fits, lambda D: cfg.kappa1 * D / n)


def select_g(path, interval: Interval, cfg: EstimationConfig = EstimationConfig()) -> AdaptiveFit:
    n, delta = path.n, path.delta
    T = t_statistics(path, truncated=False)
    fits = fit_all_dims(_design(path), T, interval, cfg.dims)
    return select_dimension(fits, lambda D: cfg.kappa2 * D ** (1 + 2 * cfg.eps) / (n * delta))


def oracle_select(path, interval: Interval, cfg: EstimationConfig, truth_fn, which: str = "sigma2",
                  fits: dict | None = None) -> tuple[int, float]:
    """Dimension minimising the empirical risk against a known truth.

    ``truth_fn`` is a vectorised callable or an array of truth values at the
    path's first n states. Pass ``fits`` to reuse an adaptive fit's collection.
    """
    if fits is None:
        sel = select_sigma2 if which == "sigma2" else select_g
        if which not in ("sigma2", "g"):
            raise ValueError("which must be 'sigma2' or 'g'")
        fits = sel(path, interval, cfg).fits
    best = None
    for D in sorted(fits):
        r = empirical_norm_sq(fits[D], truth_fn, path, interval)
        if best is None or r < best[1]:
            best = (D, r)
    return best


class _ProjectionEstimator(BaseEstimator, RegressorMixin):
    """Common fit/predict plumbing; ``fit`` takes a SamplePath."""

    def _cfg(self) -> EstimationConfig:
        raise NotImplementedError

    def _select(self, path, interval, cfg) -> AdaptiveFit:
        raise NotImplementedError

    def fit(self, path, y=None):
        cfg = self._cfg()
        self.interval_ = (Interval(*self.interval) if self.interval is not None
                          else data_interval(path))
        self.adaptive_ = self._select(path, self.interval_, cfg)
        self.dim_ = self.adaptive_.dim
        self.trace_ = self.adaptive_.trace
        return self

    def predict(self, X):
        check_is_fitted(self, "adaptive_")
        return eval_fit(self.adaptive_.fit, np.ravel(np.asarray(X, dtype=float)))

    def score(self, X, y, sample_weight=None):
        raise NotImplementedError("use empirical_norm_sq for risk evaluation")


class VolatilityEstimator(_ProjectionEstimator):
    """Adaptive truncated-increment estimator of sigma^2 on an interval.

    >>> est = VolatilityEstimator().fit(path)      # doctest: +SKIP
    >>> est.predict([0.0, 0.5])                    # doctest: +SKIP
    """

    def __init__(self, beta=0.26, kappa=100.0, nmax=20, interval=None):
        self.beta = beta
        self.kappa = kappa
        self.nmax = nmax
        self.interval = interval

    def _cfg(self):
        return EstimationConfig(beta=self.beta, kappa1=self.kappa, nmax=self.nmax)

    def _select(self, path, interval, cfg):
        return select_sigma2(path, interval, cfg)


class GFunctionEstimator(_ProjectionEstimator):
    """Adaptive estimator of g = sigma^2 + a^2 f from untruncated increments."""

    def __init__(self, kappa=100.0, eps=0.0, nmax=20, interval=None):
        self.kappa = kappa
        self.eps = eps
        self.nmax = nmax
        self.interval = interval

    def _cfg(self):
        return EstimationConfig(kappa2=self.kappa, eps=self.eps, nmax=self.nmax)

    def _select(self, path, interval, cfg):
        return select_g(path, interval, cfg)
