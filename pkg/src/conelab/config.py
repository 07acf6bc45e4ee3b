"""Run configuration: strict JSON schema, overrides, and wiring builders.

A run is described by one JSON document with fixed blocks:

  geometry        profile kind + parameters, topology, outer BC
  discretization  N, k_max (retained circumferential modes), x_min policy
  analysis        n, p, q, gamma (number or "auto-max"), eps
  dynamics        nonlinearity table, u0 descriptor, dt, horizon, scheme,
                  shift, monitor (q, norm, threshold curve, blow-up bound)
  fit             shell window and comparison tolerances (optional)
  output          directory, snapshot cadence in simulated time, norm list

Unknown keys are rejected with their dotted path; silent typos must not
invalidate verification runs.  "auto-max" resolves gamma to gamma_max - 1e-6
from the admissible weight window of the configured cross section, and the
resolution is recorded in the run manifest.  parse -> as_dict round-trips
losslessly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .geometry import (
    SurfaceOfRevolution,
    build_profile,
    closed_surface,
    collar_surface,
    cross_section_spectrum,
)
from .discretization import build_grid
from .fields import ModalField
from .mellin import (
    admissible_weights,
    bilaplacian_asymptotics,
    curvature_condition,
    laplacian_poles,
    predicted_deviation_exponent,
)
from .norms import MellinNormConfig
from .evolve import Nonlinearity, SolverConfig
from .decayfit import FitWindow

__all__ = [
    "ConfigError",
    "RunConfig",
    "parse_config",
    "load_config",
    "apply_overrides",
    "config_hash",
    "resolve_gamma",
    "build_surface",
    "build_run_grid",
    "build_nonlinearity",
    "build_initial_field",
    "build_solver_config",
    "build_fit_window",
    "build_prediction",
    "analysis_report",
]

GAMMA_AUTO_MARGIN = 1e-6


class ConfigError(ValueError):
    """Invalid configuration; message carries the dotted key path."""


def _require(block: dict, path: str, key: str):
    if key not in block:
        raise ConfigError(f"{path}: missing required key '{key}'")
    return block[key]


def _check_keys(block: dict, path: str, allowed):
    if not isinstance(block, dict):
        raise ConfigError(f"{path}: expected an object")
    for key in block:
        if key not in allowed:
            raise ConfigError(f"{path}.{key}: unknown key")


def _number(value, path, positive=False, nonnegative=False):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{path}: expected a number, got {value!r}")
    v = float(value)
    if positive and not v > 0.0:
        raise ConfigError(f"{path}: must be > 0")
    if nonnegative and v < 0.0:
        raise ConfigError(f"{path}: must be >= 0")
    return v


def _integer(value, path, minimum=None):
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{path}: expected an integer, got {value!r}")
    if minimum is not None and value < minimum:
        raise ConfigError(f"{path}: must be >= {minimum}")
    return value


def _string(value, path, choices=None):
    if not isinstance(value, str):
        raise ConfigError(f"{path}: expected a string, got {value!r}")
    if choices is not None and value not in choices:
        raise ConfigError(f"{path}: expected one of {sorted(choices)}, got {value!r}")
    return value


@dataclass(frozen=True)
class GeometryConfig:
    kind: str
    parameters: dict
    topology: str  # "collar" | "closed"
    outer_bc: str | None
    length: float | None  # closed topology meridian length; None = cap collar

    @classmethod
    def from_dict(cls, block, path="geometry"):
        _check_keys(block, path, {"kind", "parameters", "topology", "outer_bc", "length"})
        kind = _string(_require(block, path, "kind"), f"{path}.kind")
        params = block.get("parameters", {})
        if not isinstance(params, dict):
            raise ConfigError(f"{path}.parameters: expected an object")
        topology = _string(
            _require(block, path, "topology"), f"{path}.topology", {"collar", "closed"}
        )
        outer_bc = block.get("outer_bc")
        if topology == "collar":
            outer_bc = _string(
                outer_bc if outer_bc is not None else "dirichlet",
                f"{path}.outer_bc", {"dirichlet", "neumann"},
            )
        elif outer_bc is not None:
            raise ConfigError(f"{path}.outer_bc: closed topology carries no outer BC")
        length = block.get("length")
        if length is not None:
            length = _number(length, f"{path}.length", positive=True)
        return cls(kind=kind, parameters=dict(params), topology=topology,
                   outer_bc=outer_bc, length=length)

    def as_dict(self):
        return {
            "kind": self.kind,
            "parameters": dict(self.parameters),
            "topology": self.topology,
            "outer_bc": self.outer_bc,
            "length": self.length,
        }


@dataclass(frozen=True)
class DiscretizationConfig:
    N: int
    k_max: int
    x_min: object  # "default" or absolute float

    @classmethod
    def from_dict(cls, block, path="discretization"):
        _check_keys(block, path, {"N", "k_max", "x_min"})
        N = _integer(_require(block, path, "N"), f"{path}.N", minimum=16)
        k_max = _integer(block.get("k_max", 3), f"{path}.k_max", minimum=0)
        x_min = block.get("x_min", "default")
        if x_min != "default":
            x_min = _number(x_min, f"{path}.x_min", positive=True)
        return cls(N=N, k_max=k_max, x_min=x_min)

    @property
    def n_theta(self) -> int:
        # one even physical-angle count retaining modes 0..k_max
        return max(2, 2 * (self.k_max + 1))

    def as_dict(self):
        return {"N": self.N, "k_max": self.k_max, "x_min": self.x_min}


@dataclass(frozen=True)
class AnalysisConfig:
    n: int
    p: float
    q: float
    gamma: object  # "auto-max" or float
    eps: float

    @classmethod
    def from_dict(cls, block, path="analysis"):
        _check_keys(block, path, {"n", "p", "q", "gamma", "eps"})
        n = _integer(block.get("n", 1), f"{path}.n", minimum=1)
        p = _number(block.get("p", 2.0), f"{path}.p", positive=True)
        q = _number(_require(block, path, "q"), f"{path}.q", positive=True)
        if not p > 1.0:
            raise ConfigError(f"{path}.p: must be > 1")
        if not q > 1.0:
            raise ConfigError(f"{path}.q: must be > 1")
        gamma = block.get("gamma", "auto-max")
        if gamma != "auto-max":
            gamma = _number(gamma, f"{path}.gamma")
        eps = _number(block.get("eps", 0.05), f"{path}.eps", positive=True)
        return cls(n=n, p=p, q=q, gamma=gamma, eps=eps)

    def as_dict(self):
        return {"n": self.n, "p": self.p, "q": self.q,
                "gamma": self.gamma, "eps": self.eps}


_U0_KEYS = {
    "constant": {"kind", "value"},
    "mode-seed": {"kind", "base", "mode", "amplitude", "center", "width"},
}


@dataclass(frozen=True)
class DynamicsConfig:
    nonlinearity: tuple  # scalars or (times, values) pairs, index = power
    u0: dict
    dt: float
    horizon: float
    scheme: str
    shift: float
    monitor_q: float
    monitor_norm: dict  # {"s", "gamma", "p"}
    threshold_scale: float
    threshold_rate: float
    blowup_limit: float

    @classmethod
    def from_dict(cls, block, path="dynamics"):
        _check_keys(block, path, {
            "nonlinearity", "u0", "dt", "horizon", "scheme", "shift", "monitor",
        })
        raw_nl = _require(block, path, "nonlinearity")
        if not isinstance(raw_nl, list) or not raw_nl:
            raise ConfigError(f"{path}.nonlinearity: expected a nonempty list")
        terms = []
        for i, term in enumerate(raw_nl):
            if isinstance(term, (int, float)) and not isinstance(term, bool):
                terms.append(float(term))
            elif (isinstance(term, list) and len(term) == 2
                  and all(isinstance(side, list) for side in term)):
                times = [_number(v, f"{path}.nonlinearity[{i}]") for v in term[0]]
                vals = [_number(v, f"{path}.nonlinearity[{i}]") for v in term[1]]
                terms.append((tuple(times), tuple(vals)))
            else:
                raise ConfigError(
                    f"{path}.nonlinearity[{i}]: expected a number or [times, values]"
                )
        u0 = _require(block, path, "u0")
        if not isinstance(u0, dict):
            raise ConfigError(f"{path}.u0: expected an object")
        kind = _string(_require(u0, f"{path}.u0", "kind"), f"{path}.u0.kind",
                       set(_U0_KEYS))
        _check_keys(u0, f"{path}.u0", _U0_KEYS[kind])
        if kind == "constant":
            _number(_require(u0, f"{path}.u0", "value"), f"{path}.u0.value")
        else:
            for key in ("base", "amplitude", "center", "width"):
                _number(_require(u0, f"{path}.u0", key), f"{path}.u0.{key}")
            _integer(_require(u0, f"{path}.u0", "mode"), f"{path}.u0.mode", minimum=1)
        dt = _number(_require(block, path, "dt"), f"{path}.dt", positive=True)
        horizon = _number(_require(block, path, "horizon"), f"{path}.horizon",
                          positive=True)
        scheme = _string(block.get("scheme", "imex-bdf2"), f"{path}.scheme",
                         {"imex-bdf2", "imex-euler"})
        shift = _number(block.get("shift", 0.0), f"{path}.shift", nonnegative=True)
        mon = block.get("monitor", {})
        _check_keys(mon, f"{path}.monitor",
                    {"q", "norm", "threshold_scale", "threshold_rate", "blowup_limit"})
        monitor_q = _number(mon.get("q", 2.0), f"{path}.monitor.q", positive=True)
        if not monitor_q > 1.0:
            raise ConfigError(f"{path}.monitor.q: must be > 1")
        norm = mon.get("norm", {"s": 0, "gamma": 0.0, "p": 2.0})
        _check_keys(norm, f"{path}.monitor.norm", {"s", "gamma", "p"})
        norm = {
            "s": _integer(norm.get("s", 0), f"{path}.monitor.norm.s", minimum=0),
            "gamma": _number(norm.get("gamma", 0.0), f"{path}.monitor.norm.gamma"),
            "p": _number(norm.get("p", 2.0), f"{path}.monitor.norm.p", positive=True),
        }
        return cls(
            nonlinearity=tuple(terms), u0=dict(u0), dt=dt, horizon=horizon,
            scheme=scheme, shift=shift, monitor_q=monitor_q, monitor_norm=norm,
            threshold_scale=_number(mon.get("threshold_scale", 1e12),
                                    f"{path}.monitor.threshold_scale", positive=True),
            threshold_rate=_number(mon.get("threshold_rate", 0.0),
                                   f"{path}.monitor.threshold_rate"),
            blowup_limit=_number(mon.get("blowup_limit", 1e8),
                                 f"{path}.monitor.blowup_limit", positive=True),
        )

    def as_dict(self):
        terms = [
            t if isinstance(t, float) else [list(t[0]), list(t[1])]
            for t in self.nonlinearity
        ]
        return {
            "nonlinearity": terms,
            "u0": dict(self.u0),
            "dt": self.dt,
            "horizon": self.horizon,
            "scheme": self.scheme,
            "shift": self.shift,
            "monitor": {
                "q": self.monitor_q,
                "norm": dict(self.monitor_norm),
                "threshold_scale": self.threshold_scale,
                "threshold_rate": self.threshold_rate,
                "blowup_limit": self.blowup_limit,
            },
        }


@dataclass(frozen=True)
class FitConfig:
    x_lo: float | None
    x_hi: float | None
    skip_nodes: int
    min_shells: int
    active_modes: tuple | None
    tol_pred: float
    tol_mode: float

    @classmethod
    def from_dict(cls, block, path="fit"):
        _check_keys(block, path, {
            "window", "active_modes", "tol_pred", "tol_mode",
        })
        win = block.get("window", {})
        _check_keys(win, f"{path}.window", {"x_lo", "x_hi", "skip_nodes", "min_shells"})
        x_lo = win.get("x_lo")
        x_hi = win.get("x_hi")
        if x_lo is not None:
            x_lo = _number(x_lo, f"{path}.window.x_lo", positive=True)
        if x_hi is not None:
            x_hi = _number(x_hi, f"{path}.window.x_hi", positive=True)
        modes = block.get("active_modes")
        if modes is not None:
            if not isinstance(modes, list):
                raise ConfigError(f"{path}.active_modes: expected a list")
            modes = tuple(
                _integer(m, f"{path}.active_modes[{i}]", minimum=0)
                for i, m in enumerate(modes)
            )
        return cls(
            x_lo=x_lo, x_hi=x_hi,
            skip_nodes=_integer(win.get("skip_nodes", 2), f"{path}.window.skip_nodes",
                                minimum=0),
            min_shells=_integer(win.get("min_shells", 8), f"{path}.window.min_shells",
                                minimum=3),
            active_modes=modes,
            tol_pred=_number(block.get("tol_pred", 0.2), f"{path}.tol_pred",
                             positive=True),
            tol_mode=_number(block.get("tol_mode", 0.2), f"{path}.tol_mode",
                             positive=True),
        )

    def as_dict(self):
        return {
            "window": {
                "x_lo": self.x_lo, "x_hi": self.x_hi,
                "skip_nodes": self.skip_nodes, "min_shells": self.min_shells,
            },
            "active_modes": None if self.active_modes is None else list(self.active_modes),
            "tol_pred": self.tol_pred,
            "tol_mode": self.tol_mode,
        }


@dataclass(frozen=True)
class OutputConfig:
    directory: str
    snapshot_every: float | None
    norms: tuple  # of {"s", "gamma", "p"}

    @classmethod
    def from_dict(cls, block, path="output"):
        _check_keys(block, path, {"directory", "snapshot_every", "norms"})
        directory = _string(block.get("directory", "out"), f"{path}.directory")
        every = block.get("snapshot_every")
        if every is not None:
            every = _number(every, f"{path}.snapshot_every", positive=True)
        norms = block.get("norms", [])
        if not isinstance(norms, list):
            raise ConfigError(f"{path}.norms: expected a list")
        parsed = []
        for i, norm in enumerate(norms):
            _check_keys(norm, f"{path}.norms[{i}]", {"s", "gamma", "p"})
            parsed.append({
                "s": _integer(norm.get("s", 0), f"{path}.norms[{i}].s", minimum=0),
                "gamma": _number(norm.get("gamma", 0.0), f"{path}.norms[{i}].gamma"),
                "p": _number(norm.get("p", 2.0), f"{path}.norms[{i}].p", positive=True),
            })
        return cls(directory=directory, snapshot_every=every, norms=tuple(parsed))

    def as_dict(self):
        return {
            "directory": self.directory,
            "snapshot_every": self.snapshot_every,
            "norms": [dict(n) for n in self.norms],
        }


@dataclass(frozen=True)
class RunConfig:
    geometry: GeometryConfig
    discretization: DiscretizationConfig
    analysis: AnalysisConfig
    dynamics: DynamicsConfig | None
    fit: FitConfig
    output: OutputConfig

    def as_dict(self) -> dict:
        out = {
            "geometry": self.geometry.as_dict(),
            "discretization": self.discretization.as_dict(),
            "analysis": self.analysis.as_dict(),
            "fit": self.fit.as_dict(),
            "output": self.output.as_dict(),
        }
        if self.dynamics is not None:
            out["dynamics"] = self.dynamics.as_dict()
        return out


_TOP_KEYS = {"geometry", "discretization", "analysis", "dynamics", "fit", "output"}


def parse_config(doc: dict) -> RunConfig:
    _check_keys(doc, "config", _TOP_KEYS)
    geometry = GeometryConfig.from_dict(_require(doc, "config", "geometry"))
    disc = DiscretizationConfig.from_dict(_require(doc, "config", "discretization"))
    analysis = AnalysisConfig.from_dict(_require(doc, "config", "analysis"))
    dynamics = None
    if "dynamics" in doc:
        dynamics = DynamicsConfig.from_dict(doc["dynamics"])
    fit = FitConfig.from_dict(doc.get("fit", {}))
    output = OutputConfig.from_dict(doc.get("output", {}))
    return RunConfig(geometry=geometry, discretization=disc, analysis=analysis,
                     dynamics=dynamics, fit=fit, output=output)


def load_config(path) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as e:
            raise ConfigError(f"{path}: invalid JSON ({e})") from e
    return parse_config(doc)


def apply_overrides(doc: dict, overrides) -> dict:
    """KEY=VALUE overrides on the raw document; KEY is a dotted path.

    VALUE is parsed as a JSON literal when possible and kept as a string
    otherwise, so --override analysis.q=6 and --override geometry.kind=teardrop
    both do the expected thing.
    """
    out = json.loads(json.dumps(doc))
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r}: expected KEY=VALUE")
        key, raw = item.split("=", 1)
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        node = out
        parts = key.split(".")
        for part in parts[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise ConfigError(f"override {key!r}: {part} is not an object")
        node[parts[-1]] = value
    return out


def config_hash(cfg: RunConfig) -> str:
    import hashlib

    blob = json.dumps(cfg.as_dict(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


# wiring builders


def build_surface(cfg: RunConfig) -> SurfaceOfRevolution:
    geo = cfg.geometry
    try:
        profile = build_profile(geo.kind, **geo.parameters)
    except Exception as e:
        raise ConfigError(f"geometry: {e}") from e
    if geo.topology == "collar":
        return collar_surface(profile, outer_bc=geo.outer_bc)
    length = geo.length if geo.length is not None else profile.collar_length
    return closed_surface(profile, profile, length)


def build_run_grid(cfg: RunConfig, surface=None, N=None):
    surface = build_surface(cfg) if surface is None else surface
    disc = cfg.discretization
    return build_grid(surface, N or disc.N, x_min_policy=disc.x_min)


def build_nonlinearity(cfg: RunConfig) -> Nonlinearity:
    return Nonlinearity.from_coefficients(cfg.dynamics.nonlinearity)


def build_initial_field(cfg: RunConfig, grid) -> ModalField:
    u0 = cfg.dynamics.u0
    n_theta = cfg.discretization.n_theta
    if u0["kind"] == "constant":
        f = ModalField.single_mode(grid, 0, np.full(grid.N, float(u0["value"])),
                                   n_theta=n_theta)
        return f
    bump = u0["amplitude"] * np.exp(-(((grid.x - u0["center"]) / u0["width"]) ** 2))
    f = ModalField.single_mode(grid, int(u0["mode"]), bump, n_theta=n_theta)
    f.coeffs[0] += float(u0["base"]) * n_theta
    return f


def build_solver_config(cfg: RunConfig) -> SolverConfig:
    dyn = cfg.dynamics
    norm = dyn.monitor_norm
    return SolverConfig(
        scheme=dyn.scheme,
        dt=dyn.dt,
        horizon=dyn.horizon,
        shift=dyn.shift,
        monitor_q=dyn.monitor_q,
        monitor_norm=MellinNormConfig(
            s=norm["s"], gamma=norm["gamma"], p=norm["p"], n=cfg.analysis.n
        ),
        threshold_scale=dyn.threshold_scale,
        threshold_rate=dyn.threshold_rate,
        blowup_limit=dyn.blowup_limit,
    )


def build_fit_window(cfg: RunConfig) -> FitWindow:
    fit = cfg.fit
    return FitWindow(x_lo=fit.x_lo, x_hi=fit.x_hi, skip_nodes=fit.skip_nodes,
                     min_shells=fit.min_shells)


def _tip_spectrum(cfg: RunConfig, surface=None):
    surface = build_surface(cfg) if surface is None else surface
    return cross_section_spectrum(
        surface.north, n=cfg.analysis.n, k_max=max(cfg.discretization.k_max, 1)
    )


def resolve_gamma(cfg: RunConfig, surface=None):
    """(gamma, WeightWindow, how): "auto-max" becomes gamma_max - 1e-6."""
    ana = cfg.analysis
    spec = _tip_spectrum(cfg, surface)
    window = admissible_weights(ana.n, ana.p, ana.q, spec.lambda1, path="evolution")
    if ana.gamma == "auto-max":
        if not window.nonempty:
            raise ConfigError(
                "analysis.gamma: auto-max needs a nonempty weight window, got "
                f"({window.gamma_min}, {window.gamma_max})"
            )
        return window.gamma_max - GAMMA_AUTO_MARGIN, window, "auto-max"
    return float(ana.gamma), window, "explicit"


def build_prediction(cfg: RunConfig, surface=None):
    gamma, window, how = resolve_gamma(cfg, surface)
    spec = _tip_spectrum(cfg, surface)
    template = bilaplacian_asymptotics(spec, gamma)
    return predicted_deviation_exponent(
        template, gamma, q=cfg.analysis.q, eps=cfg.analysis.eps,
        active_modes=cfg.fit.active_modes,
        curvature_ok=curvature_condition(cfg.analysis.n, spec.lambda1),
    )


def analysis_report(cfg: RunConfig) -> dict:
    """Pole sets, weight window, curvature condition, template, prediction."""
    surface = build_surface(cfg)
    spec = _tip_spectrum(cfg, surface)
    ana = cfg.analysis
    poles = laplacian_poles(spec)
    window = admissible_weights(ana.n, ana.p, ana.q, spec.lambda1, path="evolution")
    report = {
        "n": ana.n,
        "lambda1": spec.lambda1,
        "tip_rho0": surface.tip_rho0("north"),
        "poles": [
            {
                "position_re": complex(pos).real,
                "position_im": complex(pos).imag,
                "multiplicity": mult,
                "eigenvalue": lam,
            }
            for pos, mult, lam in poles.all_poles()
        ],
        "weight_window": {
            "gamma_min": window.gamma_min,
            "gamma_max": window.gamma_max,
            "nonempty": window.nonempty,
            "q_ok": window.q_ok,
            "p_ok": window.p_ok,
        },
        "curvature_condition": curvature_condition(ana.n, spec.lambda1),
        "status": "NONEMPTY" if window.nonempty else "EMPTY_WINDOW",
    }
    if window.nonempty or ana.gamma != "auto-max":
        gamma, _, how = resolve_gamma(cfg, surface)
        template = bilaplacian_asymptotics(spec, gamma)
        pred = predicted_deviation_exponent(
            template, gamma, q=ana.q, eps=ana.eps,
            active_modes=cfg.fit.active_modes,
        )
        report["gamma"] = gamma
        report["gamma_resolution"] = how
        report["template_terms"] = [
            {
                "power": t.power,
                "log_power": t.log_power,
                "eigenvalue": t.eigenvalue,
                "labels": list(t.labels),
            }
            for t in template.terms
        ]
        report["prediction"] = {
            "alpha_pred": pred.alpha_pred,
            "delta": pred.delta,
            "mode_exponents": {str(k): v for k, v in pred.mode_exponents.items()},
            "sharper_alpha": pred.sharper_alpha,
        }
    return report
