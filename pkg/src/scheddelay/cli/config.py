"""Scenario configuration stored as TOML.

The file is flat ``key = value`` pairs plus one ``[solver]`` table holding
the fixed-point controls.  Unknown keys are rejected so a typo in a sweep
file fails loudly instead of silently falling back to a default.
"""

from __future__ import annotations

import dataclasses
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..analytic import FixedPointParams, db_to_linear
from ..channel import ChannelParams
from ..geometry import SimWindow

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

log = logging.getLogger(__name__)


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ScenarioConfig:
    lambda_s: float = 1e-4
    k_s: int = 3
    xi: float = 0.05
    theta_db: float = 0.0
    alpha: float = 3.8
    p_st_dbm: float = 23.0
    window_side_m: float = 2000.0
    inner_fraction: float = 0.5
    warmup_slots: int = 2000
    measure_slots: int = 10_000
    realizations: int = 20
    master_seed: int = 1
    t_min: float = 1.0
    t_max: float = 50.0
    t_step: float = 0.5
    t0: float = 20.0
    sweep_k_s: tuple = (1, 2, 3, 4, 5, 6, 7, 8)
    sweep_xi: tuple = (0.02, 0.10)
    fading: str = "conditional"
    rr_advance_when_muted: bool = True
    solver: FixedPointParams = field(default_factory=FixedPointParams)

    def __post_init__(self):
        for name in ("lambda_s", "alpha", "window_side_m", "t_step"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive")
        for name in ("k_s", "warmup_slots", "measure_slots", "realizations"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be at least 1")
        if self.alpha <= 2:
            raise ConfigError("alpha must exceed 2")
        if not 0.0 <= self.xi <= 1.0:
            raise ConfigError("xi must lie in [0, 1]")
        if not 0.0 < self.inner_fraction <= 1.0:
            raise ConfigError("inner_fraction must lie in (0, 1]")
        if not 0 <= self.master_seed < 2**64:
            raise ConfigError("master_seed must fit in an unsigned 64-bit integer")
        if self.t0 < 1 or self.t_min < 1:
            raise ConfigError("delay bounds t0 and t_min must be at least one slot")
        if self.t_max < self.t_min:
            raise ConfigError("t_max must not be below t_min")
        if self.fading not in ("conditional", "explicit"):
            raise ConfigError(f"fading must be 'conditional' or 'explicit', got {self.fading!r}")
        if not self.sweep_k_s or any(k < 1 for k in self.sweep_k_s):
            raise ConfigError("sweep_k_s must be a nonempty list of positive integers")
        if not self.sweep_xi or any(not 0.0 <= x <= 1.0 for x in self.sweep_xi):
            raise ConfigError("sweep_xi must be a nonempty list of rates in [0, 1]")
        if not math.isfinite(self.theta_db) or not math.isfinite(self.p_st_dbm):
            raise ConfigError("theta_db and p_st_dbm must be finite")

    @property
    def theta(self) -> float:
        return db_to_linear(self.theta_db)

    @property
    def p_st_mw(self) -> float:
        return db_to_linear(self.p_st_dbm)

    @property
    def delta(self) -> float:
        return 2.0 / self.alpha

    def channel(self) -> ChannelParams:
        return ChannelParams(alpha=self.alpha, theta=self.theta, p_st=self.p_st_mw)

    def window(self) -> SimWindow:
        return SimWindow(side_m=self.window_side_m, wrap=True, inner_fraction=self.inner_fraction)

    def t_grid(self) -> np.ndarray:
        n = int(math.floor((self.t_max - self.t_min) / self.t_step + 1e-9)) + 1
        return self.t_min + self.t_step * np.arange(n)

    def replace(self, **changes) -> "ScenarioConfig":
        return dataclasses.replace(self, **changes)

    # -- serialization -------------------------------------------------

    @classmethod
    def from_dict(cls, data: dict) -> "ScenarioConfig":
        data = dict(data)
        solver = data.pop("solver", {})
        if not isinstance(solver, dict):
            raise ConfigError("[solver] must be a table")
        kwargs = {k: _coerce(k, v, _FIELD_TYPES, "") for k, v in _checked(data, _FIELD_TYPES, "").items()}
        skw = {k: _coerce(k, v, _SOLVER_TYPES, "solver.") for k, v in _checked(solver, _SOLVER_TYPES, "solver.").items()}
        try:
            kwargs["solver"] = FixedPointParams(**skw)
        except ValueError as exc:
            raise ConfigError(f"[solver]: {exc}") from exc
        return cls(**kwargs)

    @classmethod
    def loads(cls, text: str) -> "ScenarioConfig":
        try:
            data = tomllib.loads(text)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"malformed config: {exc}") from exc
        return cls.from_dict(data)

    @classmethod
    def load(cls, path) -> "ScenarioConfig":
        cfg = cls.loads(Path(path).read_text(encoding="utf-8"))
        log.info("loaded %s (P_st %.1f dBm is logged only; equal powers cancel in the SIR)", path, cfg.p_st_dbm)
        return cfg

    def dumps(self) -> str:
        lines = [f"{name} = {_toml_value(getattr(self, name))}" for name in _FIELD_TYPES]
        lines.append("")
        lines.append("[solver]")
        lines += [f"{name} = {_toml_value(getattr(self.solver, name))}" for name in _SOLVER_TYPES]
        return "\n".join(lines) + "\n"

    def save(self, path) -> None:
        Path(path).write_text(self.dumps(), encoding="utf-8")


def _field_types(cls, skip=()):
    out = {}
    for f in dataclasses.fields(cls):
        if f.name in skip or not f.init:
            continue
        default = f.default if f.default is not dataclasses.MISSING else f.default_factory()
        out[f.name] = type(default)
    return out


_FIELD_TYPES = _field_types(ScenarioConfig, skip=("solver",))
_SOLVER_TYPES = _field_types(FixedPointParams)
_ELEMENT_TYPES = {"sweep_k_s": int, "sweep_xi": float}


def _checked(data, types, prefix):
    unknown = sorted(set(data) - set(types))
    if unknown:
        raise ConfigError(f"unknown config key(s): {', '.join(prefix + k for k in unknown)}")
    return data


def _coerce(name, value, types, prefix):
    want = types[name]
    where = prefix + name
    if want is bool:
        if not isinstance(value, bool):
            raise ConfigError(f"{where} must be true or false")
        return value
    if isinstance(value, bool):
        raise ConfigError(f"{where} must not be a boolean")
    if want is int:
        if not isinstance(value, int):
            raise ConfigError(f"{where} must be an integer")
        return value
    if want is float:
        if not isinstance(value, (int, float)):
            raise ConfigError(f"{where} must be a number")
        return float(value)
    if want is str:
        if not isinstance(value, str):
            raise ConfigError(f"{where} must be a string")
        return value
    if want is tuple:
        if not isinstance(value, list):
            raise ConfigError(f"{where} must be a list")
        elem = _ELEMENT_TYPES[name]
        return tuple(_coerce_element(where, v, elem) for v in value)
    raise ConfigError(f"{where}: unsupported type")  # pragma: no cover


def _coerce_element(where, value, elem):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{where} entries must be numbers")
    if elem is int:
        if not isinstance(value, int):
            raise ConfigError(f"{where} entries must be integers")
        return value
    return float(value)


def _toml_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return repr(v)
    if isinstance(v, str):
        return json.dumps(v)
    if isinstance(v, (tuple, list)):
        return "[" + ", ".join(_toml_value(x) for x in v) + "]"
    raise TypeError(f"cannot serialize {type(v).__name__}")
