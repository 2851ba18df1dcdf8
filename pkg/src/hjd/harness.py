"""Monte-Carlo risk evaluation of the adaptive and oracle estimators."""
from __future__ import annotations

import time
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from functools import partial
from typing import Optional, Sequence

import numpy as np

from .condexp import JumpCoeffConfig, estimate_a2, estimate_f, intensity_regression
from .estimators import EstimationConfig, oracle_select, select_g, select_sigma2
from .exceptions import HJDError
from .hawkes import HawkesParams, fit_hawkes_mle, validate_params
from .projection import Interval, data_interval, empirical_norm_sq
from .sde import DiffusionModel, simulate_path, subsample

TARGETS = ("sigma2", "g", "a2")
MAX_FAILURE_FRACTION = 0.05


@dataclass(frozen=True)
class ExperimentConfig:
    model: DiffusionModel
    hawkes: HawkesParams
    delta: float
    n: int
    n_rep: int = 100
    seed_base: int = 0
    estimation: EstimationConfig = field(default_factory=EstimationConfig)
    targets: tuple = ("sigma2",)
    x0: float = 2.0
    lambda0: Optional[tuple] = None
    burn_in: float = 0.0
    interval: Optional[tuple] = None
    f0: Optional[float] = None
    nw_bandwidths: Optional[tuple] = None

    def __post_init__(self):
        if self.n_rep < 1:
            raise ValueError("n_rep must be >= 1")
        bad = set(self.targets) - set(TARGETS)
        if bad or not self.targets:
            raise ValueError(f"targets must be a non-empty subset of {TARGETS}, got {self.targets}")
        validate_params(self.hawkes)

    @property
    def model_label(self) -> str:
        return self.model.name or "custom"


@dataclass
class TargetRisk:
    adaptive: np.ndarray  # per-replicate risks, NaN where the replicate failed
    oracle: np.ndarray
    adaptive_dims: list
    oracle_dims: list

    def _ok(self, a):
        return a[~np.isnan(a)]

    @property
    def adaptive_mean(self) -> float:
        return float(np.mean(self._ok(self.adaptive)))

    @property
    def adaptive_std(self) -> float:
        return float(np.std(self._ok(self.adaptive)))

    @property
    def oracle_mean(self) -> float:
        return float(np.mean(self._ok(self.oracle)))

    @property
    def oracle_std(self) -> float:
        return float(np.std(self._ok(self.oracle)))

    def histogram(self, oracle=False) -> dict:
        dims = self.oracle_dims if oracle else self.adaptive_dims
        c = Counter(str(d) for d in dims if d is not None)
        return {k: c[k] for k in sorted(c, key=lambda s: tuple(int(v) for v in s.split(",")))}


@dataclass
class RiskReport:
    config: ExperimentConfig
    targets: dict  # name -> TargetRisk
    failures: list  # (replicate index, message)
    wall_time: float = 0.0

    @property
    def n_rep(self) -> int:
        return self.config.n_rep

    def rows(self) -> list[dict]:
        c = self.config
        out = []
        for name, tr in self.targets.items():
            for est, mean, std in (("adaptive", tr.adaptive_mean, tr.adaptive_std),
                                   ("oracle", tr.oracle_mean, tr.oracle_std)):
                out.append({"model": c.model_label, "delta": c.delta, "n": c.n, "target": name,
                            "estimator": est, "mean": mean, "std": std, "n_rep": c.n_rep,
                            "failures": len(self.failures)})
        return out

    def to_dict(self) -> dict:
        """Deterministic summary (wall time is deliberately left out)."""
        return {
            "rows": self.rows(),
            "histograms": {name: {"adaptive": tr.histogram(), "oracle": tr.histogram(oracle=True)}
                           for name, tr in self.targets.items()},
            "failures": [{"replicate": i, "error": msg} for i, msg in self.failures],
        }


def _interval(cfg: ExperimentConfig, path) -> Interval:
    return Interval(*cfg.interval) if cfg.interval is not None else data_interval(path)


def _a2_risks(path, iv, s2, g, f_hat, f0, a2_true):
    """Adaptive a^2 risk, and the best risk over every (dim_sigma2, dim_g) pair."""
    xs = path.x[:-1]
    inside = iv.contains(xs)
    xi = xs[inside]
    f_vals = np.asarray(f_hat(xi))
    keep = f_vals > f0 / 2
    s_vals = {D: f(xi) for D, f in s2.fits.items()}
    g_vals = {D: f(xi) for D, f in g.fits.items()}
    truth = a2_true[inside]
    n = xs.shape[0]

    def risk(sv, gv):
        est = np.zeros_like(sv)
        est[keep] = np.maximum(gv[keep] - sv[keep], 0.0) / f_vals[keep]
        d = est - truth
        return float(d @ d) / n

    adaptive = risk(s_vals[s2.dim], g_vals[g.dim])
    best = None
    for Ds in sorted(s_vals):
        for Dg in sorted(g_vals):
            r = risk(s_vals[Ds], g_vals[Dg])
            if best is None or r < best[0]:
                best = (r, f"{Ds},{Dg}")
    return adaptive, best[0], f"{s2.dim},{g.dim}", best[1]


@dataclass
class A2Result:
    grid: np.ndarray
    a2: np.ndarray
    f_values: np.ndarray
    interval: Interval
    sigma2: object
    g: object
    hawkes: object
    f_hat: object
    f0: float


def a2_pipeline(path, est: EstimationConfig, stride: int = 10, f0: float | None = None,
                interval=None, nw_bandwidths=None, grid_points: int = 201) -> A2Result:
    """Two-resolution plug-in: g on the full path, sigma^2 on every ``stride``-th
    observation, f from the MLE intensity regressed on the full path.

    ``f0`` defaults to the fitted baseline, a lower bound of the intensity.
    """
    if path.jumps is None:
        raise ValueError("estimating a^2 requires the jump times of the counting process")
    coarse = subsample(path, stride)
    if interval is not None:
        iv_fine = iv_coarse = Interval(*interval)
    else:
        iv_fine, iv_coarse = data_interval(path), data_interval(coarse)
    g = select_g(path, iv_fine, est)
    s2 = select_sigma2(coarse, iv_coarse, est)
    fh = fit_hawkes_mle(path.jumps, path.horizon)
    f_hat = estimate_f(path, fh, nw_bandwidths)
    if f0 is None:
        f0 = float(fh.params.zeta.sum())
    iv = Interval(max(iv_fine.lo, iv_coarse.lo), min(iv_fine.hi, iv_coarse.hi))
    grid = np.linspace(iv.lo, iv.hi, grid_points)
    a2 = estimate_a2(g, s2, f_hat, JumpCoeffConfig(f0), grid)
    return A2Result(grid, a2, f_hat(grid), iv, s2, g, fh, f_hat, f0)


def run_replicate(cfg: ExperimentConfig, r: int) -> dict:
    """One simulate-estimate-score cycle with seed ``seed_base + r``."""
    seed = cfg.seed_base + r
    path = simulate_path(cfg.model, cfg.hawkes, cfg.delta, cfg.n, cfg.x0, cfg.lambda0, seed,
                         burn_in=cfg.burn_in)
    iv = _interval(cfg, path)
    est = cfg.estimation
    xs = path.x[:-1]
    out = {}
    s2 = g = None
    sigma2_true = cfg.model.sigma2(xs)
    if "sigma2" in cfg.targets or "a2" in cfg.targets:
        s2 = select_sigma2(path, iv, est)
    if "g" in cfg.targets or "a2" in cfg.targets:
        g = select_g(path, iv, est)
    if "sigma2" in cfg.targets:
        od, orisk = oracle_select(path, iv, est, sigma2_true, fits=s2.fits)
        out["sigma2"] = (empirical_norm_sq(s2.fit, sigma2_true, path, iv), orisk, s2.dim, od)
    if "g" in cfg.targets:
        # comparison target g~ = sigma^2 + a^2 f-hat, f-hat regressed on the true intensity
        f_true = intensity_regression(xs, path.lam[:-1].sum(axis=1), cfg.nw_bandwidths)
        g_tilde = sigma2_true + cfg.model.a2(xs) * f_true(xs)
        od, orisk = oracle_select(path, iv, est, g_tilde, fits=g.fits)
        out["g"] = (empirical_norm_sq(g.fit, g_tilde, path, iv), orisk, g.dim, od)
    if "a2" in cfg.targets:
        fh = fit_hawkes_mle(path.jumps, path.horizon)
        f_hat = estimate_f(path, fh, cfg.nw_bandwidths)
        f0 = cfg.f0 if cfg.f0 is not None else float(cfg.hawkes.zeta.sum())
        out["a2"] = _a2_risks(path, iv, s2, g, f_hat, f0, cfg.model.a2(xs))
    return out


def _safe_replicate(cfg, r):
    try:
        return run_replicate(cfg, r)
    except (HJDError, ValueError) as exc:
        return f"{type(exc).__name__}: {exc}"


def run_mise(cfg: ExperimentConfig, jobs: int = 1) -> RiskReport:
    """Monte-Carlo mean/std of empirical risks over ``n_rep`` independent replicates.

    Results are placed by replicate index, so any ``jobs`` gives the same report.
    """
    t0 = time.perf_counter()
    idx = range(cfg.n_rep)
    if jobs > 1 and cfg.n_rep > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            results = list(ex.map(partial(_safe_replicate, cfg), idx))
    else:
        results = [_safe_replicate(cfg, r) for r in idx]
    failures = [(r, res) for r, res in enumerate(results) if isinstance(res, str)]
    if len(failures) >= MAX_FAILURE_FRACTION * cfg.n_rep:
        raise HJDError(f"{len(failures)} of {cfg.n_rep} replicates failed; first: {failures[0][1]}")
    targets = {}
    for name in cfg.targets:
        ad = np.full(cfg.n_rep, np.nan)
        orc = np.full(cfg.n_rep, np.nan)
        adims, odims = [None] * cfg.n_rep, [None] * cfg.n_rep
        for r, res in enumerate(results):
            if isinstance(res, str):
                continue
            ad[r], orc[r], adims[r], odims[r] = res[name]
        targets[name] = TargetRisk(ad, orc, adims, odims)
    return RiskReport(cfg, targets, failures, time.perf_counter() - t0)


def calibrate_kappa(base_cfgs: Sequence[ExperimentConfig], kappas: Sequence[float],
                    jobs: int = 1, near_min: float = 1.1) -> list[dict]:
    """Risk surface over (config, kappa), with kappa1 = kappa2 = kappa in each cell.

    Cells whose adaptive mean is within ``near_min`` times the best kappa of
    their row are flagged; nothing is selected automatically.
    """
    rows = []
    for cfg in base_cfgs:
        block = []
        for k in kappas:
            est = replace(cfg.estimation, kappa1=float(k), kappa2=float(k))
            rep = run_mise(replace(cfg, estimation=est), jobs=jobs)
            for name, tr in rep.targets.items():
                dims = [d for d in tr.adaptive_dims if d is not None]
                block.append({"model": cfg.model_label, "delta": cfg.delta, "n": cfg.n,
                              "target": name, "kappa": float(k),
                              "adaptive_mean": tr.adaptive_mean, "adaptive_std": tr.adaptive_std,
                              "oracle_mean": tr.oracle_mean,
                              "median_dim": _median_dim(dims),
                              "failures": len(rep.failures)})
        for name in cfg.targets:
            cells = [b for b in block if b["target"] == name]
            best = min(c["adaptive_mean"] for c in cells)
            for c in cells:
                c["near_min"] = c["adaptive_mean"] <= near_min * best
        rows.extend(block)
    return rows


def _median_dim(dims):
    if not dims:
        return None
    if isinstance(dims[0], str):  # a2 pairs: median of the g dimension
        dims = [int(d.split(",")[1]) for d in dims]
    return float(np.median(dims))


@dataclass
class ProbeReport:
    schedule: list  # (delta, n)
    reports: list  # RiskReport per schedule point
    monotone: dict  # target -> bool

    def rows(self) -> list[dict]:
        return [row for rep in self.reports for row in rep.rows()]


def convergence_probe(cfg: ExperimentConfig, schedule: Sequence[tuple], jobs: int = 1) -> ProbeReport:
    """Adaptive mean risks along a (delta, n) schedule, and whether they are non-increasing."""
    reports = [run_mise(replace(cfg, delta=float(d), n=int(n)), jobs=jobs) for d, n in schedule]
    monotone = {}
    for name in cfg.targets:
        means = [rep.targets[name].adaptive_mean for rep in reports]
        monotone[name] = all(b <= a for a, b in zip(means, means[1:]))
    return ProbeReport([(float(d), int(n)) for d, n in schedule], reports, monotone)
