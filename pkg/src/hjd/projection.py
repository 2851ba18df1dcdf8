"""Trigonometric approximation spaces on an interval and least-squares projection."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .exceptions import RankDeficientError


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float

    def __post_init__(self):
        if not (math.isfinite(self.lo) and math.isfinite(self.hi) and self.lo < self.hi):
            raise ValueError(f"degenerate interval [{self.lo}, {self.hi}]")

    @property
    def length(self) -> float:
        return self.hi - self.lo

    def contains(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return (x >= self.lo) & (x <= self.hi)

    def central_half(self) -> "Interval":
        q = 0.25 * self.length
        return Interval(self.lo + q, self.hi - q)


@dataclass(frozen=True)
class TrigSpace:
    interval: Interval
    dim: int

    def __post_init__(self):
        if self.dim < 1 or self.dim % 2 == 0:
            raise ValueError(f"dimension must be odd and >= 1, got {self.dim}")


@dataclass
class ProjectionFit:
    space: TrigSpace
    coefs: np.ndarray
    n_in: int
    contrast: float

    def __call__(self, x) -> np.ndarray:
        return eval_fit(self, x)

    def to_dict(self) -> dict:
        iv = self.space.interval
        return {"lo": iv.lo, "hi": iv.hi, "dim": self.space.dim,
                "coefs": [float(c) for c in self.coefs], "n_in": int(self.n_in),
                "contrast": float(self.contrast)}

    @classmethod
    def from_dict(cls, d: dict) -> "ProjectionFit":
        space = TrigSpace(Interval(float(d["lo"]), float(d["hi"])), int(d["dim"]))
        return cls(space, np.asarray(d["coefs"], dtype=float), int(d["n_in"]), float(d["contrast"]))


def data_interval(path, upto: int | None = None) -> Interval:
    """[min X, max X] over observations 0..n-1."""
    xs = path.x[:-1] if upto is None else path.x[:upto]
    lo, hi = float(np.min(xs)), float(np.max(xs))
    if not lo < hi:
        raise ValueError("constant path: estimation interval would be degenerate")
    return Interval(lo, hi)


def trig_design(space: TrigSpace, x) -> np.ndarray:
    """Basis values, shape (len(x), D); rows for x outside the interval are zero."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    iv = space.interval
    L = iv.length
    out = np.zeros((x.shape[0], space.dim))
    inside = iv.contains(x)
    u = 2.0 * np.pi * (x[inside] - iv.lo) / L
    out[inside, 0] = 1.0 / math.sqrt(L)
    s = math.sqrt(2.0 / L)
    for j in range(1, (space.dim - 1) // 2 + 1):
        out[inside, 2 * j - 1] = s * np.cos(j * u)
        out[inside, 2 * j] = s * np.sin(j * u)
    return out


def trig_basis_eval(space: TrigSpace, x: float) -> np.ndarray:
    return trig_design(space, [x])[0]


def least_squares_fit(xs, ys, space: TrigSpace, rcond: float | None = None) -> ProjectionFit:
    """Minimise (1/n) sum (t(x_i) - y_i)^2 1_A(x_i) over t in the space.

    Rows outside A are dropped entirely. Raises RankDeficientError when the
    pivoted QR rank of the in-A design is below D.
    """
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.shape != ys.shape:
        raise ValueError("xs and ys must have the same length")
    n = xs.shape[0]
    inside = space.interval.contains(xs)
    n_in = int(inside.sum())
    D = space.dim
    if n_in < D:
        raise RankDeficientError(D, n_in)
    Phi = trig_design(space, xs[inside])
    y = ys[inside]
    Q, R, piv = linalg.qr(Phi, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    tol = (rcond if rcond is not None else max(Phi.shape) * np.finfo(float).eps) * diag[0]
    rank = int(np.sum(diag > tol))
    if rank < D:
        raise RankDeficientError(D, rank)
    z = linalg.solve_triangular(R, Q.T @ y)
    coefs = np.empty(D)
    coefs[piv] = z
    resid = Phi @ coefs - y
    return ProjectionFit(space, coefs, n_in, float(resid @ resid) / n)


def eval_fit(fit: ProjectionFit, x) -> np.ndarray:
    """Fitted function at x (scalar or array); zero outside the interval."""
    scalar = np.ndim(x) == 0
    v = trig_design(fit.space, x) @ fit.coefs
    return float(v[0]) if scalar else v


def empirical_norm_sq(est, ref, path, interval: Interval) -> float:
    """(1/n) sum_{i<n} (est(X_i) - ref(X_i))^2 1_A(X_i) over the path's first n states.

    ``est`` and ``ref`` are vectorised callables (fits, closures, or arrays of
    values at the n states).
    """
    xs = path.x[:-1]
    inside = interval.contains(xs)
    xi = xs[inside]
    e = est[inside] if isinstance(est, np.ndarray) else np.asarray(est(xi), dtype=float)
    r = ref[inside] if isinstance(ref, np.ndarray) else np.asarray(ref(xi), dtype=float)
    d = e - r
    return float(d @ d) / xs.shape[0]
