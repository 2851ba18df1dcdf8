import numpy as np
import pytest

from hjd.exceptions import HJDError
from hjd.harness import (ExperimentConfig, calibrate_kappa, convergence_probe, run_mise,
                         run_replicate)
from hjd.hawkes import HawkesParams
from hjd.sde import DiffusionModel, builtin_model

HP = HawkesParams.univariate(0.5, 0.4, 5.0)


def _cfg(**kw):
    base = dict(model=builtin_model("a"), hawkes=HP, delta=0.01, n=2000, n_rep=4,
                targets=("sigma2", "g"))
    base.update(kw)
    return ExperimentConfig(**base)


def test_single_replicate():
    rep = run_mise(_cfg(n_rep=1))
    one = run_replicate(_cfg(n_rep=1), 0)
    for name in ("sigma2", "g"):
        tr = rep.targets[name]
        assert tr.adaptive_mean == one[name][0] and tr.adaptive_std == 0.0
        assert tr.oracle_mean == one[name][1] and tr.oracle_std == 0.0


def test_oracle_never_worse():
    rep = run_mise(_cfg(n_rep=5, targets=("sigma2", "g", "a2"), n=5000))
    for tr in rep.targets.values():
        assert np.all(tr.oracle <= tr.adaptive + 1e-15)


def test_report_rows_and_histogram():
    rep = run_mise(_cfg())
    rows = rep.rows()
    assert [(r["target"], r["estimator"]) for r in rows] == [
        ("sigma2", "adaptive"), ("sigma2", "oracle"), ("g", "adaptive"), ("g", "oracle")]
    assert sum(rep.targets["g"].histogram().values()) == 4
    assert "wall_time" not in rep.to_dict()


def test_same_report_for_any_job_count():
    cfg = _cfg(n_rep=3)
    assert run_mise(cfg, jobs=1).to_dict() == run_mise(cfg, jobs=3).to_dict()


def test_failure_cap():
    explode = DiffusionModel.from_strings("x^3", "1", "0", name="boom")
    with pytest.raises(HJDError):
        run_mise(_cfg(model=explode, delta=0.1, n=500, x0=5.0, n_rep=2))


def test_bad_targets():
    with pytest.raises(ValueError):
        _cfg(targets=("drift",))


def test_calibrate_single_kappa():
    rows = calibrate_kappa([_cfg(n_rep=2, targets=("sigma2",))], [1.0])
    assert len(rows) == 1 and rows[0]["kappa"] == 1.0 and rows[0]["near_min"]


def test_calibrate_small_kappa_overfits():
    rows = calibrate_kappa([_cfg(n_rep=6, n=5000, targets=("sigma2",))], [1e-3, 100.0])
    tiny, default = rows
    assert tiny["adaptive_mean"] >= default["adaptive_mean"]
    assert tiny["median_dim"] >= default["median_dim"]


def test_probe_single_point_monotone():
    rep = convergence_probe(_cfg(n_rep=2), [(0.01, 2000)])
    assert rep.monotone == {"sigma2": True, "g": True}


def test_seed_bases_agree_statistically():
    a = run_mise(_cfg(n_rep=20, seed_base=0, targets=("sigma2",))).targets["sigma2"]
    b = run_mise(_cfg(n_rep=20, seed_base=1000, targets=("sigma2",))).targets["sigma2"]
    se = np.hypot(a.adaptive_std, b.adaptive_std) / np.sqrt(20)
    assert abs(a.adaptive_mean - b.adaptive_mean) <= 4 * se
