"""Market scenarios: parameters, presets and the JSON scenario file format."""
from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field, replace
from functools import cached_property
from pathlib import Path
from typing import Any

from .delay import DelayModel
from .distributions import ConfigurationError, DistSpec
from .service import ServiceMoments, effective_moments
from .simulation import CHANNEL_CLOCKS


@dataclass(frozen=True)
class SimSettings:
    n_jobs: int = 500_000
    warmup_fraction: float = 0.1
    seed: int = 0
    batches: int = 20
    channel: str = "service"


@dataclass(frozen=True)
class Scenario:
    """One market instance.

    User types are uniform on ``[0, theta_max]``. ``moments`` overrides the
    closed-form effective-service moments, which is the only way to use
    family combinations without a closed form.
    """

    lam: float
    reward: float
    theta_max: float
    x: DistSpec
    y: DistSpec
    z: DistSpec
    alpha: float = 0.3
    epsilon: float = 0.01
    moments: ServiceMoments | None = None
    sim: SimSettings = field(default_factory=SimSettings)

    def __post_init__(self):
        for name in ("lam", "reward", "theta_max", "epsilon"):
            value = getattr(self, name)
            if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
                raise ConfigurationError(f"{name} must be a finite positive number, got {value!r}")
        if not 0 < self.alpha <= 1:
            raise ConfigurationError(f"alpha must lie in (0, 1], got {self.alpha!r}")
        if self.moments is None:
            # Fails early for combinations lacking a closed form.
            object.__setattr__(self, "moments", effective_moments(self.x, self.y, self.z))
        if self.epsilon >= 1.0 / (self.lam * self.service.m1):
            raise ConfigurationError(
                f"epsilon={self.epsilon} must be below the stability threshold {1 / (self.lam * self.service.m1):.6g}"
            )

    @property
    def service(self) -> ServiceMoments:
        return self.moments

    @property
    def x_mean(self) -> float:
        return self.x.mean

    @cached_property
    def delay_model(self) -> DelayModel:
        return DelayModel(self.lam, self.service, self.x.mean)

    def type_cdf(self, theta: float) -> float:
        return min(1.0, max(0.0, theta / self.theta_max))

    def with_(self, **changes) -> Scenario:
        if "moments" not in changes and {"x", "y", "z"} & set(changes):
            changes["moments"] = None
        return replace(self, **changes)

    def to_dict(self) -> dict[str, Any]:
        return {
            "lambda": self.lam,
            "v": self.reward,
            "theta_max": self.theta_max,
            "alpha": self.alpha,
            "epsilon": self.epsilon,
            "x": self.x.to_dict(),
            "y": self.y.to_dict(),
            "z": self.z.to_dict(),
            "sim": {
                "n_jobs": self.sim.n_jobs,
                "warmup_fraction": self.sim.warmup_fraction,
                "seed": self.sim.seed,
                "batches": self.sim.batches,
                "channel": self.sim.channel,
            },
        }


# (work distribution, whether ON/OFF periods are Erlang-2)
_PRESET_WORK = {
    "exp": (DistSpec.exponential(1.0), False),
    "erl": (DistSpec.erlang2(1.0), True),
    "uniexp": (DistSpec.uniform(0.1, 1.9), False),
    "erlexp": (DistSpec.erlang2(1.5), False),
    "experl": (DistSpec.exponential(2.0 / 3.0), True),
}
# (nu_on, nu_off)
_TRAFFIC = {"light": (1.5, 0.5), "heavy": (0.5, 1.5)}
COMBOS = tuple(_PRESET_WORK)
TRAFFIC = tuple(_TRAFFIC)
PRESETS = tuple(f"{c}-{t}" for t in TRAFFIC for c in COMBOS)


def preset(name: str, **overrides) -> Scenario:
    """Named numerical setting, e.g. ``"exp-light"``; keyword overrides replace fields."""
    try:
        combo, traffic = name.lower().split("-")
        x, erlang_channel = _PRESET_WORK[combo]
        nu_on, nu_off = _TRAFFIC[traffic]
    except (ValueError, KeyError):
        raise ConfigurationError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}") from None
    period = DistSpec.erlang2 if erlang_channel else DistSpec.exponential
    params = dict(lam=1.0, reward=1.0, theta_max=1.0, x=x, y=period(nu_on), z=period(nu_off),
                  alpha=0.3, epsilon=0.01)
    params.update(overrides)
    return Scenario(**params)


_REQUIRED = ("lambda", "v", "theta_max", "alpha", "epsilon", "x", "y", "z")
_SIM_KEYS = {"n_jobs", "warmup_fraction", "seed", "batches", "channel"}


def _line_of(text: str, key: str) -> int | None:
    match = re.search(r'"%s"\s*:' % re.escape(key), text)
    return text.count("\n", 0, match.start()) + 1 if match else None


def _fail(text: str, key: str, message: str):
    line = _line_of(text, key)
    where = f"line {line}: " if line else ""
    raise ConfigurationError(f"{where}{message}")


def scenario_from_dict(data: dict[str, Any], text: str = "") -> Scenario:
    if not isinstance(data, dict):
        raise ConfigurationError("scenario must be a JSON object")
    unknown = sorted(set(data) - set(_REQUIRED) - {"sim"})
    if unknown:
        _fail(text, unknown[0], f"unknown keys {unknown}")
    missing = [k for k in _REQUIRED if k not in data]
    if missing:
        raise ConfigurationError(f"missing required keys {missing}")
    values = {}
    for key in ("lambda", "v", "theta_max", "alpha", "epsilon"):
        value = data[key]
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            _fail(text, key, f"{key} must be a number, got {value!r}")
        values[key] = float(value)
    dists = {}
    for key in ("x", "y", "z"):
        try:
            dists[key] = DistSpec.from_dict(data[key])
        except ConfigurationError as exc:
            _fail(text, key, f"{key}: {exc}")
    sim = SimSettings()
    if "sim" in data:
        raw = data["sim"]
        if not isinstance(raw, dict):
            _fail(text, "sim", "sim must be a JSON object")
        bad = sorted(set(raw) - _SIM_KEYS)
        if bad:
            _fail(text, bad[0], f"sim: unknown keys {bad}")
        try:
            sim = SimSettings(
                n_jobs=int(raw.get("n_jobs", sim.n_jobs)),
                warmup_fraction=float(raw.get("warmup_fraction", sim.warmup_fraction)),
                seed=int(raw.get("seed", sim.seed)),
                batches=int(raw.get("batches", sim.batches)),
                channel=str(raw.get("channel", sim.channel)),
            )
        except (TypeError, ValueError) as exc:
            _fail(text, "sim", f"sim: {exc}")
        if sim.channel not in CHANNEL_CLOCKS:
            _fail(text, "channel", f"sim.channel must be one of {CHANNEL_CLOCKS}")
    try:
        return Scenario(lam=values["lambda"], reward=values["v"], theta_max=values["theta_max"],
                        alpha=values["alpha"], epsilon=values["epsilon"], sim=sim, **dists)
    except ConfigurationError as exc:
        field_key = next((k for k in ("lambda", "theta_max", "alpha", "epsilon", "v") if k in str(exc)), None)
        if field_key:
            _fail(text, field_key, str(exc))
        raise


def load_scenario(path: str | Path) -> Scenario:
    text = Path(path).read_text(encoding="utf-8")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"line {exc.lineno}: invalid JSON ({exc.msg})") from None
    return scenario_from_dict(data, text)
