"""Multivariate Hawkes processes with exponential kernels ``c_ij * exp(-alpha * t)``.

Jumps are stored as two parallel arrays (``times``, ``components``) with
0-based component indices; the CSV wire format uses 1-based indices.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from .exceptions import HJDError, ParameterError, StationarityError

MAX_INTENSITY = 1e12


@dataclass(frozen=True)
class HawkesParams:
    zeta: np.ndarray
    C: np.ndarray
    alpha: float

    def __post_init__(self):
        zeta = np.atleast_1d(np.asarray(self.zeta, dtype=float))
        M = zeta.shape[0]
        C = np.asarray(self.C, dtype=float).reshape(M, M)
        object.__setattr__(self, "zeta", zeta)
        object.__setattr__(self, "C", C)
        object.__setattr__(self, "alpha", float(self.alpha))

    @classmethod
    def univariate(cls, zeta, c, alpha):
        return cls(np.array([zeta]), np.array([[c]]), alpha)

    @property
    def M(self) -> int:
        return self.zeta.shape[0]

    @property
    def branching_matrix(self) -> np.ndarray:
        return self.C / self.alpha

    def stationary_rate(self) -> np.ndarray:
        """Mean intensity per component, ``(I - C/alpha)^{-1} zeta``."""
        return np.linalg.solve(np.eye(self.M) - self.branching_matrix, self.zeta)

    def initial_intensity(self, lambda0=None) -> np.ndarray:
        if lambda0 is None:
            return self.zeta.copy()
        lam0 = np.broadcast_to(np.asarray(lambda0, dtype=float), (self.M,)).copy()
        if np.any(lam0 < self.zeta):
            raise ParameterError("lambda0 must be >= zeta componentwise")
        return lam0


@dataclass
class JumpRecords:
    times: np.ndarray
    components: np.ndarray = field(default=None)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float).ravel()
        if self.components is None:
            self.components = np.zeros(self.times.shape, dtype=np.int64)
        self.components = np.asarray(self.components, dtype=np.int64).ravel()
        if self.components.shape != self.times.shape:
            raise ValueError("times and components must have the same length")

    def __len__(self) -> int:
        return self.times.shape[0]

    def check_sorted(self) -> None:
        if np.any(np.diff(self.times) < 0):
            raise ValueError("jump records must be sorted by time")


@dataclass
class FittedHawkes:
    params: HawkesParams
    loglik: float
    converged: bool
    iterations: int
    stationary: bool = True

    def to_dict(self) -> dict:
        return {
            "zeta": float(self.params.zeta[0]),
            "c": float(self.params.C[0, 0]),
            "alpha": self.params.alpha,
            "loglik": float(self.loglik),
            "converged": bool(self.converged),
            "iterations": int(self.iterations),
        }


def spectral_radius(A, rtol=1e-10, max_iter=10_000) -> float:
    """Perron root of a non-negative matrix by power iteration on ``A + I``.

    The shift makes the iteration converge for periodic matrices too; the
    returned value is the Collatz-Wielandt upper bound at termination.
    """
    A = np.asarray(A, dtype=float)
    B = A + np.eye(A.shape[0])
    v = np.ones(A.shape[0])
    est = np.inf
    for _ in range(max_iter):
        w = B @ v
        new = float(np.max(w / v))
        v = w / np.max(w)
        if abs(new - est) <= rtol * new:
            est = new
            break
        est = new
    return max(est - 1.0, 0.0)


def validate_params(p: HawkesParams) -> float:
    """Check positivity and stationarity; returns the spectral radius of C/alpha."""
    if not np.all(np.isfinite(p.zeta)) or np.any(p.zeta <= 0):
        raise ParameterError("baselines zeta must be positive")
    if not np.all(np.isfinite(p.C)) or np.any(p.C < 0):
        raise ParameterError("excitation matrix C must be non-negative")
    if not (math.isfinite(p.alpha) and p.alpha > 0):
        raise ParameterError("decay alpha must be positive")
    radius = spectral_radius(p.branching_matrix)
    if radius >= 1.0:
        raise StationarityError(radius)
    return radius


def simulate_hawkes(p: HawkesParams, horizon: float, lambda0=None, seed=None) -> JumpRecords:
    """Ogata thinning on (0, horizon].

    Intensities only decay between events, so the total intensity at the
    current time dominates until the next candidate; it is refreshed after
    every candidate, accepted or not. One uniform per candidate decides both
    acceptance and the component.
    """
    if not (horizon >= 0 and math.isfinite(horizon)):
        raise ParameterError("horizon must be finite and >= 0")
    rng = np.random.default_rng(seed)
    zeta, C, alpha = p.zeta, p.C, p.alpha
    M = p.M
    excess = p.initial_intensity(lambda0) - zeta
    times, comps = [], []
    t = 0.0
    while True:
        bound = float(zeta.sum() + excess.sum())
        if bound > MAX_INTENSITY:
            raise HJDError(f"intensity exceeded {MAX_INTENSITY:g} at t={t:.6g}")
        w = rng.exponential(1.0 / bound)
        if t + w > horizon:
            break
        t += w
        excess = excess * math.exp(-alpha * w)
        lam = zeta + excess
        u = rng.uniform() * bound
        if u <= lam.sum():
            j = 0 if M == 1 else min(int(np.searchsorted(np.cumsum(lam), u)), M - 1)
            times.append(t)
            comps.append(j)
            excess = excess + C[:, j]
    return JumpRecords(np.array(times, dtype=float), np.array(comps, dtype=np.int64))


def _excess_after_jumps(p: HawkesParams, jumps: JumpRecords, lam0: np.ndarray):
    """Excess intensity right after each event, with a virtual event at t=0.

    Returns (anchor_times, anchor_excess) of shapes (K+1,) and (K+1, M).
    """
    jumps.check_sorted()
    K = len(jumps)
    anchors = np.empty(K + 1)
    anchors[0] = 0.0
    anchors[1:] = jumps.times
    R = np.empty((K + 1, p.M))
    R[0] = lam0 - p.zeta
    decay = np.exp(-p.alpha * np.diff(anchors))
    cols = p.C.T[jumps.components]  # row k = column j_k of C
    r = R[0].copy()
    for k in range(K):
        r = r * decay[k] + cols[k]
        R[k + 1] = r
    return anchors, R


def intensity_at(p: HawkesParams, jumps: JumpRecords, lambda0=None, t=0.0) -> np.ndarray:
    """Left limit lambda(t-) per component; ``t`` may be a scalar or an array.

    Output shape is (M,) for scalar t and (len(t), M) otherwise.
    """
    lam0 = p.initial_intensity(lambda0)
    anchors, R = _excess_after_jumps(p, jumps, lam0)
    tq = np.asarray(t, dtype=float)
    if np.any(tq < 0):
        raise ValueError("t must be >= 0")
    # strictly-before jumps: index of the last anchor < t (the t=0 anchor for t<=first jump)
    k = np.searchsorted(anchors[1:], tq, side="left")
    out = p.zeta + R[k] * np.exp(-p.alpha * (tq - anchors[k]))[..., None]
    return out


def compensator(p: HawkesParams, jumps: JumpRecords, lambda0=None, t=0.0) -> np.ndarray:
    """Integrated intensity Lambda(t) per component, in closed form."""
    lam0 = p.initial_intensity(lambda0)
    anchors, R = _excess_after_jumps(p, jumps, lam0)
    alpha = p.alpha
    seg = R[:-1] * (-np.expm1(-alpha * np.diff(anchors)))[:, None] / alpha
    cum = np.vstack([np.zeros((1, p.M)), np.cumsum(seg, axis=0)])
    tq = np.asarray(t, dtype=float)
    if np.any(tq < 0):
        raise ValueError("t must be >= 0")
    k = np.searchsorted(anchors[1:], tq, side="right")
    tail = R[k] * (-np.expm1(-alpha * (tq - anchors[k])))[..., None] / alpha
    return p.zeta * tq[..., None] + cum[k] + tail


def time_change_residuals(p: HawkesParams, jumps: JumpRecords, lambda0=None) -> np.ndarray:
    """Increments of the pooled compensator between consecutive events.

    Under the true model these are i.i.d. Exp(1).
    """
    if len(jumps) < 2:
        raise ValueError("need at least 2 jumps for time-change residuals")
    pooled = compensator(p, jumps, lambda0, jumps.times).sum(axis=1)
    return np.diff(pooled)


def hawkes_loglik(p: HawkesParams, jumps: JumpRecords, horizon: float, lambda0=None) -> float:
    """Point-process log-likelihood on [0, horizon] via the O(K) exponential recursion."""
    lam0 = p.initial_intensity(lambda0)
    jumps.check_sorted()
    if len(jumps) and (jumps.times[0] <= 0 or jumps.times[-1] > horizon):
        raise ValueError("jump times must lie in (0, horizon]")
    if p.M == 1:
        return _loglik_univariate(float(p.zeta[0]), float(p.C[0, 0]), p.alpha,
                                  float(lam0[0]), jumps.times, horizon)
    anchors, R = _excess_after_jumps(p, jumps, lam0)
    # intensity just before event k: decayed excess from the previous anchor
    gaps = np.diff(anchors)
    before = p.zeta + R[:-1] * np.exp(-p.alpha * gaps)[:, None]
    lam_at = before[np.arange(len(jumps)), jumps.components]
    if np.any(lam_at <= 0):
        raise HJDError("zero intensity at an event time")
    comp = compensator(p, jumps, lam0, horizon)
    return float(np.sum(np.log(lam_at)) - comp.sum())


def _loglik_univariate(zeta, c, alpha, lam0, times, horizon) -> float:
    # A_k = exp(-alpha (T_k - T_{k-1})) (1 + A_{k-1}),  A_1 = 0
    s = 0.0
    A = 0.0
    prev = None
    exp = math.exp
    init_excess = lam0 - zeta
    for tk in times:
        if prev is not None:
            A = exp(-alpha * (tk - prev)) * (1.0 + A)
        lam = zeta + init_excess * exp(-alpha * tk) + c * A
        if lam <= 0:
            raise HJDError("zero intensity at an event time")
        s += math.log(lam)
        prev = tk
    comp = zeta * horizon + init_excess * (-math.expm1(-alpha * horizon)) / alpha
    if len(times):
        comp += c / alpha * float(np.sum(-np.expm1(-alpha * (horizon - times))))
    return s - comp


def fit_hawkes_mle(jumps: JumpRecords, horizon: float, init: HawkesParams | None = None,
                   max_iter: int = 2000, xatol: float = 1e-8) -> FittedHawkes:
    """Univariate maximum likelihood over (zeta, c, alpha) by Nelder-Mead in log space.

    The initial intensity is tied to the baseline (lambda0 = zeta), as in the
    simulations. Non-convergence is reported through the flag; the best point
    found is always returned.
    """
    if len(jumps) < 10:
        raise ValueError("need at least 10 jumps to fit")
    if init is not None and init.M != 1:
        raise NotImplementedError("only univariate Hawkes MLE is supported")
    if np.any(jumps.components != 0):
        raise NotImplementedError("only univariate Hawkes MLE is supported")
    times = np.asarray(jumps.times, dtype=float)
    if init is None:
        rate = len(times) / horizon
        init = HawkesParams.univariate(0.5 * rate, 0.5, 2.0)
    x0 = np.log([init.zeta[0], max(init.C[0, 0], 1e-8), init.alpha])

    def nll(theta):
        zeta, c, alpha = np.exp(theta)
        if not np.all(np.isfinite([zeta, c, alpha])):
            return np.inf
        try:
            v = _loglik_univariate(zeta, c, alpha, zeta, times, horizon)
        except (HJDError, OverflowError):
            return np.inf
        return -v if math.isfinite(v) else np.inf

    res = optimize.minimize(nll, x0, method="Nelder-Mead",
                            options={"xatol": xatol, "fatol": 1e-10,
                                     "maxiter": max_iter, "maxfev": 4 * max_iter})
    zeta, c, alpha = np.exp(res.x)
    params = HawkesParams.univariate(zeta, c, alpha)
    stationary = c / alpha < 1.0
    if not stationary:
        warnings.warn(f"fitted branching ratio {c / alpha:.4g} >= 1", RuntimeWarning)
    return FittedHawkes(params=params, loglik=-float(res.fun), converged=bool(res.success),
                        iterations=int(res.nit), stationary=bool(stationary))
