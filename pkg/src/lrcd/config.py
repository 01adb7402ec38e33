"""Experiment configuration: TOML in, canonical TOML out, hashed for reports."""

from dataclasses import dataclass
import hashlib

import tomli
import tomli_w

from .duration_models import AcdSpec, IidRenewalSpec, InnovationSpec, LmsdSpec
from .gaussian_lm import LongMemoryGaussianSpec
from .point_process import SamplingRegime


class ConfigError(ValueError):
    """Every violated invariant of a config, collected before raising."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("invalid config:\n" + "\n".join(f"  - {e}" for e in self.errors))


def model_to_dict(model):
    inn = {"innovation": model.innovation.family, "shape": float(model.innovation.shape)}
    if isinstance(model, LmsdSpec):
        g = model.gaussian
        return {"kind": "lmsd", "d": float(g.d), "sigma_e": float(g.sigma_e), "a": float(g.a),
                "coeff_scale": float(g.coeff_scale), **inn}
    if isinstance(model, AcdSpec):
        return {"kind": "acd", "omega": float(model.omega), "alpha": float(model.alpha),
                "beta": float(model.beta), **inn}
    if isinstance(model, IidRenewalSpec):
        return {"kind": "iid", "scale": float(model.scale), **inn}
    raise TypeError(f"unsupported model {type(model).__name__}")


def model_from_dict(raw):
    """Build a model spec; raises ValueError (or ParameterError) on bad input.

    LMSD accepts ``var_h`` instead of ``sigma_e`` to fix the marginal
    variance of h directly.
    """
    raw = dict(raw)
    kind = raw.pop("kind", None)
    inn = InnovationSpec(raw.pop("innovation", "exponential"), float(raw.pop("shape", 1.0)))
    if kind == "lmsd":
        d = float(raw.pop("d"))
        a = float(raw.pop("a", 0.0))
        c = float(raw.pop("coeff_scale", 1.0))
        if "var_h" in raw:
            if "sigma_e" in raw:
                raise ValueError("give either sigma_e or var_h, not both")
            g = LongMemoryGaussianSpec.with_variance(d, float(raw.pop("var_h")), a, c)
        else:
            g = LongMemoryGaussianSpec(d, float(raw.pop("sigma_e", 1.0)), a, c)
        model = LmsdSpec(g, inn)
    elif kind == "acd":
        model = AcdSpec(float(raw.pop("omega")), float(raw.pop("alpha")),
                        float(raw.pop("beta")), inn)
    elif kind == "iid":
        model = IidRenewalSpec(inn, float(raw.pop("scale", 1.0)))
    else:
        raise ValueError(f"model.kind must be lmsd, acd or iid, got {kind!r}")
    if raw:
        raise ValueError(f"unknown model keys: {sorted(raw)}")
    return model


@dataclass(frozen=True)
class ExperimentConfig:
    model: object
    regime: SamplingRegime
    horizon: float
    delta_t: float
    t_grid: tuple
    levels: tuple
    reps: int
    seed: int
    out_dir: str = "out"
    experiment_id: str = "experiment"
    bandwidth: int = 0  # 0 means floor(sqrt(num_bins))

    def validate(self):
        errors = []
        if self.reps < 1:
            errors.append(f"reps must be >= 1, got {self.reps}")
        if not self.horizon > 0:
            errors.append(f"horizon must be positive, got {self.horizon}")
        if not self.delta_t > 0:
            errors.append(f"delta_t must be positive, got {self.delta_t}")
        elif self.horizon > 0 and self.delta_t > self.horizon:
            errors.append("delta_t exceeds horizon")
        if not self.t_grid:
            errors.append("t_grid is empty")
        else:
            if any(b <= a for a, b in zip(self.t_grid, self.t_grid[1:])):
                errors.append("t_grid must be strictly increasing")
            if min(self.t_grid) <= 0:
                errors.append("t_grid entries must be positive")
            if max(self.t_grid) > self.horizon:
                errors.append(f"horizon {self.horizon} < max(t_grid) {max(self.t_grid)}")
        if any(int(k) < 1 for k in self.levels):
            errors.append("aggregation levels must be >= 1")
        if not 0 <= self.seed < 2 ** 64:
            errors.append("seed must be an unsigned 64-bit integer")
        if self.bandwidth < 0:
            errors.append("bandwidth must be >= 0")
        if errors:
            raise ConfigError(errors)
        return self

    def to_dict(self):
        return {
            "experiment": {
                "id": self.experiment_id,
                "regime": self.regime.kind,
                "horizon": float(self.horizon),
                "delta_t": float(self.delta_t),
                "t_grid": [float(t) for t in self.t_grid],
                "levels": [int(k) for k in self.levels],
                "reps": int(self.reps),
                "seed": int(self.seed),
                "out_dir": self.out_dir,
                "bandwidth": int(self.bandwidth),
            },
            "model": model_to_dict(self.model),
        }

    @classmethod
    def from_dict(cls, raw):
        errors = []
        exp = dict(raw.get("experiment", {}))
        model = None
        try:
            model = model_from_dict(raw.get("model", {}))
        except (ValueError, KeyError, TypeError) as exc:
            errors.append(f"model: {exc}")
        regime = None
        try:
            regime = SamplingRegime.parse(str(exp.get("regime", "stationary")))
        except ValueError as exc:
            errors.append(f"experiment.regime: {exc}")
        required = ("horizon", "delta_t", "t_grid", "reps", "seed")
        missing = [k for k in required if k not in exp]
        errors.extend(f"experiment.{k} is required" for k in missing)
        unknown = set(exp) - {"id", "regime", "horizon", "delta_t", "t_grid", "levels",
                              "reps", "seed", "out_dir", "bandwidth"}
        errors.extend(f"experiment.{k} is not a known key" for k in sorted(unknown))
        if errors:
            raise ConfigError(errors)
        cfg = cls(
            model=model,
            regime=regime,
            horizon=float(exp["horizon"]),
            delta_t=float(exp["delta_t"]),
            t_grid=tuple(float(t) for t in exp["t_grid"]),
            levels=tuple(int(k) for k in exp.get("levels", ())),
            reps=int(exp["reps"]),
            seed=int(exp["seed"]),
            out_dir=str(exp.get("out_dir", "out")),
            experiment_id=str(exp.get("id", "experiment")),
            bandwidth=int(exp.get("bandwidth", 0)),
        )
        return cfg.validate()


def _sorted(obj):
    if isinstance(obj, dict):
        return {k: _sorted(obj[k]) for k in sorted(obj)}
    return obj


def dumps(config):
    """Canonical serialization: sorted keys at every level."""
    return tomli_w.dumps(_sorted(config.to_dict()))


def loads(text):
    try:
        raw = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        raise ConfigError([f"TOML parse error: {exc}"]) from exc
    return ExperimentConfig.from_dict(raw)


def load(path):
    with open(path, encoding="utf-8") as fh:
        return loads(fh.read())


def config_hash(config):
    return hashlib.sha256(dumps(config).encode("utf-8")).hexdigest()


def dyadic_grid(lo_exp, hi_exp, unit=1.0):
    return tuple(unit * 2.0 ** k for k in range(lo_exp, hi_exp + 1))
