"""Run configuration: a flat ``section.key = value`` text format with a strict schema.

Blank lines and lines starting with ``#`` are ignored. Every key has a
default; unknown or duplicate keys are errors. Lists are comma separated,
matrix rows are separated by ``;``. Formula values are taken verbatim.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .estimators import EstimationConfig
from .exceptions import ConfigError, ExprSyntaxError
from .harness import TARGETS, ExperimentConfig
from .hawkes import HawkesParams, validate_params
from .sde import DiffusionModel, builtin_model


def _float(s):
    return float(s)


def _int(s):
    v = float(s)
    if v != int(v):
        raise ValueError("expected an integer")
    return int(v)


def _floats(s):
    return tuple(float(v) for v in s.split(",")) if s.strip() else ()


def _matrix(s):
    rows = [tuple(float(v) for v in r.split(",")) for r in s.split(";")]
    if len({len(r) for r in rows}) != 1:
        raise ValueError("matrix rows differ in length")
    return tuple(rows)


def _str(s):
    return s


def _words(s):
    return tuple(w.strip() for w in s.split(",") if w.strip())


def _auto_or_float(s):
    return None if s.strip().lower() == "auto" else float(s)


def _auto_or_floats(s):
    return None if s.strip().lower() == "auto" else _floats(s)


def _schedule(s):
    out = []
    for item in s.split(","):
        d, n = item.split(":")
        out.append((float(d), _int(n)))
    return tuple(out)


def _show(v):
    if v is None:
        return "auto"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, tuple):
        if v and isinstance(v[0], tuple):
            if len(v[0]) == 2 and isinstance(v[0][1], int):
                return ",".join(f"{_show(d)}:{n}" for d, n in v)
            return ";".join(",".join(_show(x) for x in row) for row in v)
        return ",".join(_show(x) for x in v)
    return str(v)


# key -> (parser, default text)
SCHEMA = {
    "hawkes.zeta": (_floats, "0.5"),
    "hawkes.c": (_matrix, "0.4"),
    "hawkes.alpha": (_float, "5.0"),
    "hawkes.lambda0": (_auto_or_floats, "auto"),
    "hawkes.burn_in": (_float, "0.0"),
    "model.name": (_str, "a"),
    "model.b": (_str, ""),
    "model.sigma": (_str, ""),
    "model.a": (_str, ""),
    "grid.delta": (_float, "0.01"),
    "grid.n": (_int, "10000"),
    "grid.seed": (_int, "0"),
    "grid.x0": (_float, "2.0"),
    "estimation.beta": (_float, "0.26"),
    "estimation.kappa1": (_float, "100.0"),
    "estimation.kappa2": (_float, "100.0"),
    "estimation.eps": (_float, "0.0"),
    "estimation.nmax": (_int, "20"),
    "estimation.interval": (_auto_or_floats, "auto"),
    "nw.bandwidths": (_auto_or_floats, "auto"),
    "nw.f0": (_auto_or_float, "auto"),
    "nw.grid_points": (_int, "201"),
    "experiment.n_rep": (_int, "100"),
    "experiment.targets": (_words, "sigma2,g"),
    "experiment.output_dir": (_str, "out"),
    "experiment.stride": (_int, "10"),
    "experiment.kappa_grid": (_floats, "1.0,10.0,100.0,1000.0"),
    "experiment.schedule": (_schedule, "0.1:1000,0.01:10000"),
}


@dataclass
class RunConfig:
    values: dict = field(default_factory=dict)

    def __getitem__(self, key):
        return self.values[key]

    # -- parsing

    @classmethod
    def defaults(cls) -> "RunConfig":
        return cls.from_text("")

    @classmethod
    def from_text(cls, text: str, source: str = "<config>") -> "RunConfig":
        raw = {}
        for lineno, line in enumerate(text.splitlines(), 1):
            s = line.strip()
            if not s or s.startswith("#"):
                continue
            if "=" not in s:
                raise ConfigError(f"{source}:{lineno}: expected 'section.key = value'")
            key, value = (p.strip() for p in s.split("=", 1))
            if key not in SCHEMA:
                raise ConfigError("unknown key", key)
            if key in raw:
                raise ConfigError("duplicate key", key)
            raw[key] = value
        return cls.from_raw(raw)

    @classmethod
    def from_raw(cls, raw: dict) -> "RunConfig":
        values = {}
        for key, (parse, default) in SCHEMA.items():
            text = raw.get(key, default)
            try:
                values[key] = parse(text)
            except (ValueError, TypeError) as exc:
                raise ConfigError(f"invalid value {text!r} ({exc})", key) from None
        cfg = cls(values)
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path) -> "RunConfig":
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from None
        return cls.from_text(text, str(path))

    def override(self, key, text) -> "RunConfig":
        raw = {k: _show(v) for k, v in self.values.items()}
        if key not in SCHEMA:
            raise ConfigError("unknown key", key)
        raw[key] = str(text)
        return self.from_raw(raw)

    def dump(self) -> str:
        return "".join(f"{k} = {_show(v)}\n" for k, v in self.values.items())

    def hash(self) -> str:
        return hashlib.sha256(self.dump().encode("utf-8")).hexdigest()[:16]

    # -- validation and object construction

    def validate(self) -> None:
        formulas = [self["model.b"], self["model.sigma"], self["model.a"]]
        if any(formulas) and not all(formulas):
            raise ConfigError("model.b, model.sigma and model.a must be given together", "model")
        try:
            self.model()
        except ExprSyntaxError as exc:
            raise ConfigError(str(exc), "model") from None
        except ValueError as exc:
            raise ConfigError(str(exc), "model.name") from None
        try:
            validate_params(self.hawkes())
        except ValueError as exc:
            raise ConfigError(str(exc), "hawkes") from None
        try:
            self.estimation()
        except ValueError as exc:
            raise ConfigError(str(exc), "estimation") from None
        iv = self["estimation.interval"]
        if iv is not None and (len(iv) != 2 or not iv[0] < iv[1]):
            raise ConfigError("expected 'lo,hi' with lo < hi", "estimation.interval")
        if self["grid.delta"] <= 0:
            raise ConfigError("must be positive", "grid.delta")
        if self["grid.n"] < 1:
            raise ConfigError("must be >= 1", "grid.n")
        if self["experiment.n_rep"] < 1:
            raise ConfigError("must be >= 1", "experiment.n_rep")
        if set(self["experiment.targets"]) - set(TARGETS) or not self["experiment.targets"]:
            raise ConfigError(f"targets must be drawn from {TARGETS}", "experiment.targets")
        if self["experiment.stride"] < 1:
            raise ConfigError("must be >= 1", "experiment.stride")

    def model(self) -> DiffusionModel:
        if self["model.b"]:
            return DiffusionModel.from_strings(self["model.b"], self["model.sigma"], self["model.a"],
                                               name=self["model.name"] or "custom")
        return builtin_model(self["model.name"])

    def hawkes(self) -> HawkesParams:
        zeta = np.array(self["hawkes.zeta"])
        C = np.array(self["hawkes.c"])
        if C.shape != (zeta.shape[0], zeta.shape[0]):
            raise ValueError(f"hawkes.c must be {zeta.shape[0]}x{zeta.shape[0]}")
        p = HawkesParams(zeta, C, self["hawkes.alpha"])
        lam0 = self["hawkes.lambda0"]
        if lam0 is not None and len(lam0) != p.M:
            raise ValueError("hawkes.lambda0 must have one entry per component")
        return p

    def lambda0(self):
        v = self["hawkes.lambda0"]
        return None if v is None else np.array(v)

    def estimation(self) -> EstimationConfig:
        return EstimationConfig(beta=self["estimation.beta"], kappa1=self["estimation.kappa1"],
                                kappa2=self["estimation.kappa2"], eps=self["estimation.eps"],
                                nmax=self["estimation.nmax"])

    def experiment(self) -> ExperimentConfig:
        return ExperimentConfig(
            model=self.model(), hawkes=self.hawkes(), delta=self["grid.delta"], n=self["grid.n"],
            n_rep=self["experiment.n_rep"], seed_base=self["grid.seed"],
            estimation=self.estimation(), targets=self["experiment.targets"],
            x0=self["grid.x0"], lambda0=self["hawkes.lambda0"], burn_in=self["hawkes.burn_in"],
            interval=self["estimation.interval"], f0=self["nw.f0"],
            nw_bandwidths=self["nw.bandwidths"])
