"""
Run configuration: a flat TOML file validated before any compute.

Example::

    model = "hyperbolic"
    Nx = 64
    Ny = 128
    dt = 0.005
    t_end = 0.5
    preset = "mode"
    preset_amplitude = 0.05
    snapshot_every = 10
    gevrey = [[0.3, 0.5, 2.0], [0.2, 0.4, 2.0]]
    output = "runs/mode"
"""

from __future__ import annotations

import hashlib
import math
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .domain import Grid
from .gevrey import default_M
from .model import ModelKind, OuterFlow
from .presets import build
from .stepper import StepperConfig


class ConfigError(ValueError):
    """Rejected configuration; the message names the violated rule."""


PRESET_PARAMS = {
    "zero": {},
    "mode": {"k": int, "n": int, "amplitude": float, "profile": str},
    "shear": {"profile": str, "n": int, "amplitude": float, "a": float, "b": float},
    "gevrey_seed": {"rho": float, "sigma": float, "amplitude": float, "M": int},
    "manufactured": {},
}


@dataclass(frozen=True)
class RunConfig:
    model: str = "hyperbolic"
    Nx: int = 64
    Ny: int = 128
    Y: float = 20.0
    Lx: float = 2 * math.pi
    ell: float = 1.0
    dealias_cutoff: int = -1        # -1 selects Nx // 3
    dt: float = 0.005
    t_end: float = 0.5
    theta: float = 0.5
    transport: bool = True
    blowup_threshold: float = 1e8
    monitor_every: int = 1
    snapshot_every: int = 0
    preset: str = "zero"
    preset_params: dict = field(default_factory=dict)
    outer_U: float = 0.0
    sigma: float = 2.0              # Gevrey index for radius fits and two-entry gevrey pairs
    gevrey: tuple = ()              # ((rho, rho_tilde, sigma), ...)
    gevrey_M: int = 0               # 0 selects min(32, dealias_cutoff)
    assumption_budget: float = 10.0
    output: str = "hpl_run"
    seed: int = 0

    # derived objects ------------------------------------------------------------

    @property
    def kind(self) -> ModelKind:
        return ModelKind.parse(self.model)

    def grid(self) -> Grid:
        cut = None if self.dealias_cutoff < 0 else self.dealias_cutoff
        return Grid(Nx=self.Nx, Ny=self.Ny, Y=self.Y, Lx=self.Lx, ell=self.ell, dealias_cutoff=cut)

    def stepper(self) -> StepperConfig:
        return StepperConfig(dt=self.dt, t_end=self.t_end, theta=self.theta,
                             blowup_threshold=self.blowup_threshold, transport=self.transport,
                             monitor_every=self.monitor_every, snapshot_every=self.snapshot_every)

    def ladder_order(self) -> int:
        return self.gevrey_M or default_M(self.grid())

    def outer(self) -> OuterFlow:
        if self.outer_U == 0.0:
            return OuterFlow()
        U = float(self.outer_U)
        zero = lambda t, x: 0.0 * x  # noqa: E731
        return OuterFlow(U=lambda t, x: U + 0.0 * x, dpdx=zero, U_t=zero, U_tt=zero)

    def build_preset(self):
        p = build(self.preset, self.grid(), self.kind, **self.preset_params)
        if self.outer_U != 0.0:
            if not p.outer.is_homogeneous:
                raise ConfigError(f"outer_U cannot be combined with preset {self.preset!r}")
            p.outer = self.outer()
        return p

    def hash(self) -> str:
        return hashlib.sha256(emit(self).encode()).hexdigest()

    def with_overrides(self, overrides: dict) -> "RunConfig":
        return from_dict({**to_dict(self), **overrides})


_TYPES = {"model": str, "Nx": int, "Ny": int, "Y": float, "Lx": float, "ell": float,
          "dealias_cutoff": int, "dt": float, "t_end": float, "theta": float, "transport": bool,
          "blowup_threshold": float, "monitor_every": int, "snapshot_every": int, "preset": str,
          "outer_U": float, "sigma": float, "gevrey_M": int, "assumption_budget": float, "output": str, "seed": int}


def _coerce(key, value, typ):
    if typ is bool:
        if not isinstance(value, bool):
            raise ConfigError(f"{key} must be true or false, got {value!r}")
        return value
    if typ is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{key} must be an integer, got {value!r}")
        return value
    if typ is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{key} must be a number, got {value!r}")
        return float(value)
    if not isinstance(value, str):
        raise ConfigError(f"{key} must be a string, got {value!r}")
    return value


def from_dict(raw: dict) -> RunConfig:
    """Build and validate a :class:`RunConfig` from flat keys."""
    raw = dict(raw)
    kw = {}
    preset = raw.get("preset", "zero")
    if preset not in PRESET_PARAMS:
        raise ConfigError(f"unknown preset {preset!r}; expected one of {sorted(PRESET_PARAMS)}")
    allowed = PRESET_PARAMS[preset]
    params = {}
    for key, value in raw.items():
        if key.startswith("preset_"):
            name = key[len("preset_"):]
            if name not in allowed:
                raise ConfigError(f"unknown key {key!r} for preset {preset!r}"
                                  + (f"; allowed: {sorted('preset_' + a for a in allowed)}" if allowed else ""))
            params[name] = _coerce(key, value, allowed[name])
        elif key == "gevrey":
            kw["gevrey"] = value
        elif key in _TYPES:
            kw[key] = _coerce(key, value, _TYPES[key])
        else:
            raise ConfigError(f"unknown key {key!r}")
    kw["preset_params"] = params
    if "sigma" in kw and not 1.0 <= kw["sigma"] <= 2.0:
        raise ConfigError(f"sigma={kw['sigma']} violates 1 ≤ σ ≤ 2")
    if "gevrey" in kw:
        kw["gevrey"] = _gevrey(kw["gevrey"], kw.get("sigma", 2.0))
    cfg = RunConfig(**kw)
    validate(cfg)
    return cfg


def _gevrey(value, default_sigma: float) -> tuple:
    if not isinstance(value, (list, tuple)):
        raise ConfigError("gevrey must be a list of [rho, rho_tilde] pairs or [rho, rho_tilde, sigma] triples")
    out = []
    for item in value:
        if not isinstance(item, (list, tuple)) or len(item) not in (2, 3):
            raise ConfigError(f"gevrey entry {item!r} is not [rho, rho_tilde] or [rho, rho_tilde, sigma]")
        vals = [_coerce("gevrey", v, float) for v in item]
        rho, rt, sigma = vals if len(vals) == 3 else (*vals, default_sigma)
        if not 1.0 <= sigma <= 2.0:
            raise ConfigError(f"gevrey sigma={sigma} violates 1 ≤ σ ≤ 2")
        if not 0.0 < rho < rt <= 1.0:
            raise ConfigError(f"gevrey pair (rho={rho}, rho_tilde={rt}) violates 0 < ρ < ρ̃ ≤ 1")
        out.append((rho, rt, sigma))
    return tuple(out)


def validate(cfg: RunConfig) -> RunConfig:
    """Run every module's preconditions; raise :class:`ConfigError` on the first failure."""
    try:
        ModelKind.parse(cfg.model)
        grid = cfg.grid()
        sc = cfg.stepper()
        sc.nsteps
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    if cfg.gevrey_M and not 8 <= cfg.gevrey_M <= grid.dealias_cutoff:
        raise ConfigError(f"gevrey_M={cfg.gevrey_M} must satisfy 8 ≤ M ≤ dealias_cutoff={grid.dealias_cutoff}")
    if cfg.gevrey and not cfg.gevrey_M and grid.dealias_cutoff < 8:
        raise ConfigError(f"dealias_cutoff={grid.dealias_cutoff} leaves fewer than 8 derivative orders; "
                          f"increase Nx")
    if cfg.assumption_budget <= 0:
        raise ConfigError("assumption_budget must be positive")
    if cfg.preset == "gevrey_seed":
        p = cfg.preset_params
        if "sigma" in p and not 1 <= p["sigma"] <= 2:
            raise ConfigError(f"preset_sigma={p['sigma']} violates 1 ≤ σ ≤ 2")
        if "rho" in p and not 0 < p["rho"] <= 1:
            raise ConfigError(f"preset_rho={p['rho']} violates 0 < ρ ≤ 1")
    try:
        cfg.build_preset()
    except ValueError as exc:
        raise ConfigError(f"preset {cfg.preset!r}: {exc}") from None
    return cfg


def parse_config(path) -> RunConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file {path} does not exist")
    try:
        raw = tomllib.loads(path.read_text(encoding="utf-8"))
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return from_dict(raw)


def parse_text(text: str) -> RunConfig:
    try:
        return from_dict(tomllib.loads(text))
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(str(exc)) from None


def to_dict(cfg: RunConfig) -> dict:
    d = asdict(cfg)
    params = d.pop("preset_params")
    d["gevrey"] = [list(t) for t in cfg.gevrey]
    for k, v in sorted(params.items()):
        d[f"preset_{k}"] = v
    return d


def _value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, str):
        return '"' + v.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_value(x) for x in v) + "]"
    raise TypeError(f"cannot emit {type(v).__name__}")


def emit(cfg: RunConfig) -> str:
    """Effective configuration as flat TOML; ``parse_text(emit(c)) == c``."""
    return "".join(f"{k} = {_value(v)}\n" for k, v in to_dict(cfg).items())


def parse_override(text: str):
    """``"key=v1,v2"`` -> ``(key, [v1, v2])`` with TOML value parsing."""
    if "=" not in text:
        raise ConfigError(f"sweep grid {text!r} must look like key=v1,v2,...")
    key, vals = text.split("=", 1)
    key = key.strip()
    out = []
    for item in vals.split(","):
        item = item.strip()
        try:
            out.append(tomllib.loads(f"v = {item}")["v"])
        except tomllib.TOMLDecodeError:
            out.append(item)
    if not out or any(v == "" for v in out):
        raise ConfigError(f"sweep grid {text!r} has an empty value")
    return key, out


__all__ = ["ConfigError", "RunConfig", "emit", "from_dict", "parse_config", "parse_override",
           "parse_text", "to_dict", "validate"]
