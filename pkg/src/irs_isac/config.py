"""Experiment configuration: one strict JSON document, two built-in profiles."""
from __future__ import annotations

import json
from typing import Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from . import conic
from .ao import AoControls, CcpControls, SinrTargets
from .channel import (ArrayGeometry, ChannelModel, PathLossModel, RicianConfig, ScenarioGeometry,
                      dbm_to_watts)
from .radar import AngularGrid

METHODS = ("proposed", "sdr", "robust", "radar_only", "no_irs")
PROFILES = ("desk", "paper")


class ConfigError(ValueError):
    """Invalid configuration; ``errors`` lists ``(field, message)`` pairs."""

    def __init__(self, errors):
        self.errors = list(errors)
        lines = [f"{field}: {msg}" for field, msg in self.errors]
        super().__init__("invalid configuration:\n  " + "\n  ".join(lines))


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


PerUser = Union[float, list[float]]


class GeometryConfig(_Strict):
    n_antennas: int = Field(8, ge=1)
    n_elements: int = Field(16, ge=1)
    n_users: int = Field(2, ge=1)
    spacing: float = Field(0.5, gt=0)
    d_ib: float = Field(25.0, gt=0)
    d_iu: PerUser = 20.0
    d_bu: PerUser = 50.0


class PowerConfig(_Strict):
    p0_dbm: float = 20.0
    noise_dbm: float = -114.0


class GridConfig(_Strict):
    center: float = 0.0
    halfwidth: float = Field(10.0, ge=0)
    resolution: float = Field(1.0, gt=0)
    guard: Optional[float] = Field(None, ge=0)


class RicianSettings(_Strict):
    k_ib: float = Field(2.2, ge=0)
    k_ui: float = Field(2.2, ge=0)
    bs_departure: float = 40.0
    irs_arrival: float = -30.0
    user_angles: Optional[list[float]] = None


class PathLossSettings(_Strict):
    eta0: float = Field(1e-3, gt=0)
    d0: float = Field(1.0, gt=0)
    alpha_bu: float = Field(3.5, gt=0)
    alpha_bi: float = Field(2.2, gt=0)
    alpha_iu: float = Field(2.2, gt=0)


class UncertaintyConfig(_Strict):
    mode: Literal["none", "absolute", "relative"] = "none"
    values: PerUser = 0.0

    @field_validator("values")
    @classmethod
    def _nonnegative(cls, value):
        if np.any(np.asarray(value, dtype=float) < 0):
            raise ValueError("uncertainty radii must be nonnegative")
        return value


class CcpSettings(_Strict):
    rho0: float = Field(0.1, gt=0)
    tau: float = Field(2.0, gt=1)
    rho_max: float = Field(1e4, gt=0)
    j_max: int = Field(50, ge=1)
    nu1: float = Field(1e-4, gt=0)
    nu2: float = Field(1e-5, gt=0)


class AoSettings(_Strict):
    nu3: float = Field(1e-3, gt=0)
    max_iter: int = Field(50, ge=1)


class ControlsConfig(_Strict):
    ccp: CcpSettings = CcpSettings()
    ao: AoSettings = AoSettings()
    solver_tol: float = Field(conic.DEFAULT_TOL, gt=0, lt=1)


class ExperimentConfig(_Strict):
    """Validated experiment description; see :func:`load_config`."""

    geometry: GeometryConfig = GeometryConfig()
    powers: PowerConfig = PowerConfig()
    grid: GridConfig = GridConfig()
    sinr_db: PerUser = 15.0
    rician: RicianSettings = RicianSettings()
    path_loss: PathLossSettings = PathLossSettings()
    uncertainty: UncertaintyConfig = UncertaintyConfig()
    controls: ControlsConfig = ControlsConfig()
    method: Literal["proposed", "sdr", "robust", "radar_only", "no_irs"] = "proposed"
    trials: int = Field(20, ge=1)
    seed: int = Field(0, ge=0, lt=2 ** 64)
    workers: int = Field(1, ge=1)
    validation_samples: int = Field(1000, ge=1)

    @model_validator(mode="after")
    def _per_user_lengths(self):
        k = self.geometry.n_users
        checks = {"geometry.d_iu": self.geometry.d_iu, "geometry.d_bu": self.geometry.d_bu,
                  "sinr_db": self.sinr_db, "uncertainty.values": self.uncertainty.values}
        if self.rician.user_angles is not None:
            checks["rician.user_angles"] = self.rician.user_angles
        for name, value in checks.items():
            if isinstance(value, list) and len(value) != k:
                raise ValueError(f"{name} needs {k} entries (one per user), got {len(value)}")
        return self

    # builders for the library objects

    def per_user(self, value):
        return tuple(float(x) for x in np.broadcast_to(np.asarray(value, float),
                                                       (self.geometry.n_users,)))

    @property
    def p0(self):
        return float(dbm_to_watts(self.powers.p0_dbm))

    @property
    def sigma2(self):
        return float(dbm_to_watts(self.powers.noise_dbm))

    def array_geometry(self):
        return ArrayGeometry(self.geometry.n_antennas, self.geometry.spacing)

    def angular_grid(self):
        g = self.grid
        return AngularGrid.uniform(g.center, g.halfwidth, g.resolution, g.guard)

    def channel_model(self):
        geo, ric, pl = self.geometry, self.rician, self.path_loss
        return ChannelModel(
            self.array_geometry(), geo.n_elements, geo.n_users,
            ScenarioGeometry(geo.d_ib, self.per_user(geo.d_iu), self.per_user(geo.d_bu)),
            PathLossModel(pl.eta0, pl.d0, pl.alpha_bu, pl.alpha_bi, pl.alpha_iu),
            RicianConfig(ric.k_ib, ric.k_ui, ric.bs_departure, ric.irs_arrival,
                         None if ric.user_angles is None else tuple(ric.user_angles)),
            eps_mode=self.uncertainty.mode,
            eps=self.per_user(self.uncertainty.values),
        )

    def targets(self):
        return SinrTargets.from_db(self.per_user(self.sinr_db), self.sigma2)

    def ccp_controls(self):
        return CcpControls(**self.controls.ccp.model_dump())

    def ao_controls(self):
        return AoControls(nu3=self.controls.ao.nu3, max_iter=self.controls.ao.max_iter,
                          tol=self.controls.solver_tol)

    def to_dict(self):
        return self.model_dump(mode="json")

    def updated(self, changes):
        """Copy with dotted-path overrides, e.g. ``{"geometry.n_elements": 30}``; revalidated."""
        data = self.to_dict()
        for path, value in changes.items():
            node = data
            *parents, leaf = path.split(".")
            for key in parents:
                node = node[key]
            if leaf not in node:
                raise ConfigError([(path, "unknown field")])
            node[leaf] = value
        return config_from_dict(data)


_PROFILE_OVERRIDES = {
    "desk": {},
    "paper": {"geometry": {"n_antennas": 20, "n_elements": 30, "n_users": 4}, "trials": 100},
}


def profile_dict(name):
    if name not in PROFILES:
        raise ConfigError([("profile", f"unknown profile {name!r}; choose from {PROFILES}")])
    return json.loads(json.dumps(_PROFILE_OVERRIDES[name]))


def _merge(base, extra):
    out = dict(base)
    for key, value in extra.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], value)
        else:
            out[key] = value
    return out


def config_from_dict(data, profile="desk"):
    """Validate ``data`` on top of ``profile``; raises :class:`ConfigError`."""
    if not isinstance(data, dict):
        raise ConfigError([("<root>", "configuration must be a JSON object")])
    try:
        return ExperimentConfig.model_validate(_merge(profile_dict(profile), data))
    except ValidationError as err:
        errors = [(".".join(str(p) for p in e["loc"]) or "<root>", e["msg"]) for e in err.errors()]
        raise ConfigError(errors) from None


def load_config(path=None, profile="desk"):
    """Read a JSON config file (or just the profile when ``path`` is None)."""
    if path is None:
        return config_from_dict({}, profile)
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as err:
        raise ConfigError([(str(path), f"cannot read config: {err.strerror}")]) from None
    except json.JSONDecodeError as err:
        raise ConfigError([(str(path), f"invalid JSON: {err}")]) from None
    return config_from_dict(data, profile)
