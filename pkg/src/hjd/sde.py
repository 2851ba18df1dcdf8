"""Euler discretisation of the jump diffusion driven by a Hawkes process.

    dX_t = b(X_t) dt + sigma(X_t) dW_t + a(X_{t-}) dN_t,   N = sum_j N^(j)

Randomness: ``SeedSequence(seed).spawn(2)`` gives stream 0 for the Brownian
increments and stream 1 for Hawkes thinning, so the two sources never share
draws.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .exceptions import EvaluationError, ParameterError, SimulationError
from .expr import Expr, compile_expr, eval_array, parse_expr, to_source
from .hawkes import HawkesParams, JumpRecords, intensity_at, simulate_hawkes, validate_params

EXPLOSION_BOUND = 1e8

BUILTIN_MODELS = {
    "a": ("-4*x", "1", "sqrt(2+0.5*sin(x))"),
    "b": ("-2*x+sin(x)", "sqrt((3+x^2)/(1+x^2))", "1"),
    "c": ("-2*x", "sqrt(1+x^2)", "1"),
    "d": ("-2*x", "sqrt(1+x^2)", "clamp(x,-5,5)"),
}


@dataclass(frozen=True)
class DiffusionModel:
    b: Expr
    sigma: Expr
    a: Expr
    name: Optional[str] = None

    @classmethod
    def from_strings(cls, b: str, sigma: str, a: str, name=None) -> "DiffusionModel":
        return cls(parse_expr(b), parse_expr(sigma), parse_expr(a), name)

    def formulas(self) -> dict:
        return {"b": to_source(self.b), "sigma": to_source(self.sigma), "a": to_source(self.a)}

    def sigma2(self, x) -> np.ndarray:
        return eval_array(self.sigma, x) ** 2

    def a2(self, x) -> np.ndarray:
        return eval_array(self.a, x) ** 2


def builtin_model(name: str) -> DiffusionModel:
    try:
        b, s, a = BUILTIN_MODELS[name]
    except KeyError:
        raise ValueError(f"unknown model {name!r}; expected one of {sorted(BUILTIN_MODELS)}") from None
    return DiffusionModel.from_strings(b, s, a, name=name)


@dataclass
class SamplePath:
    delta: float
    x: np.ndarray
    x0: float
    seed: Optional[int] = None
    lam: Optional[np.ndarray] = None  # (n+1, M) left-limit intensities on the grid
    jumps: Optional[JumpRecords] = field(default=None)

    @property
    def n(self) -> int:
        return self.x.shape[0] - 1

    @property
    def times(self) -> np.ndarray:
        return self.delta * np.arange(self.n + 1)

    @property
    def horizon(self) -> float:
        return self.n * self.delta


def simulate_path(model: DiffusionModel, hp: HawkesParams, delta: float, n: int,
                  x0: float = 2.0, lambda0=None, seed: int = 0,
                  burn_in: float = 0.0) -> SamplePath:
    """Euler scheme on the grid k*delta, k = 0..n.

    Every event in (k delta, (k+1) delta] adds a(X_{k delta}) once. With
    ``burn_in > 0`` the first round(burn_in/delta) steps are simulated and
    discarded; times are re-based to the first kept observation.
    """
    validate_params(hp)
    if not (delta > 0 and math.isfinite(delta)):
        raise ParameterError("delta must be positive")
    if n < 1:
        raise ParameterError("n must be >= 1")
    n_burn = int(round(burn_in / delta)) if burn_in > 0 else 0
    n_tot = n + n_burn
    bm_seed, hk_seed = np.random.SeedSequence(seed).spawn(2)
    jumps = simulate_hawkes(hp, n_tot * delta, lambda0, seed=hk_seed)
    normals = np.random.default_rng(bm_seed).standard_normal(n_tot)

    # pooled event count per step; an event at exactly k*delta belongs to step k-1
    step = np.ceil(jumps.times / delta).astype(np.int64) - 1
    step = np.clip(step, 0, n_tot - 1)
    counts = np.bincount(step, minlength=n_tot) if len(jumps) else np.zeros(n_tot, np.int64)

    b, sig, a = compile_expr(model.b), compile_expr(model.sigma), compile_expr(model.a)
    sqd = math.sqrt(delta)
    x = np.empty(n_tot + 1)
    xk = float(x0)
    x[0] = xk
    xi = normals.tolist()
    cn = counts.tolist()
    for k in range(n_tot):
        try:
            s = sig(xk)
            if s < 0:
                raise EvaluationError(f"sigma({xk!r}) = {s!r} < 0")
            nxt = xk + b(xk) * delta + s * sqd * xi[k]
            if cn[k]:
                nxt += a(xk) * cn[k]
        except EvaluationError as exc:
            raise SimulationError(f"coefficient evaluation failed: {exc}", step=k) from exc
        if not math.isfinite(nxt) or abs(nxt) > EXPLOSION_BOUND:
            raise SimulationError("state exploded", step=k)
        xk = nxt
        x[k + 1] = xk

    lam = intensity_at(hp, jumps, lambda0, delta * np.arange(n_tot + 1))
    if n_burn:
        keep = jumps.times > n_burn * delta
        jumps = JumpRecords(jumps.times[keep] - n_burn * delta, jumps.components[keep])
        x = x[n_burn:]
        lam = lam[n_burn:]
    return SamplePath(delta=float(delta), x=x, x0=float(x[0]), seed=seed, lam=lam, jumps=jumps)


def subsample(path: SamplePath, stride: int) -> SamplePath:
    """Keep every ``stride``-th observation; jumps are carried over unchanged."""
    if stride < 1 or path.n % stride:
        raise ValueError(f"stride {stride} must be >= 1 and divide n = {path.n}")
    lam = None if path.lam is None else path.lam[::stride]
    return replace(path, delta=path.delta * stride, x=path.x[::stride], lam=lam)
