"""Run configuration: TOML loading, dotted overrides and validation.

Schema (all sections optional unless the analysis needs them)::

    analysis = "pulse-exist" | "pulse-hopf" | "front-build" | "front-hopf" | "simulate" | "trace"
    theta = 0.3                      # derived from the kernel for fronts when omitted
    output_dir = "out"
    seed = 0

    [kernel]  w_e, sigma_e, w_i, sigma_i, d = 1
    [input]   type = "gaussian" (I_0, sigma) | "sigmoid" (I_0, s) | "none"
    [delays]  tau_D = 0.0, c = "inf"
    [sweep]   parameter, start, stop, count = 200, scale = "linear" | "log"
    [trace]   target, modes = [...], angular = [1, 2, 3], s, dims = [d]
    [front]   kind = "monotonous" | "three_crossing", extent, samples = 2001
    [grid]    L, n, strict = true    # d comes from the kernel
    [integration] T = 100, dt = 0.005, record_every = 0.05, frame_every = 1.0
    [initial] kind = "pulse" | "front", pulse = "stable", mode, angular_n, ell, amplitude = 0.1, noise = 0.0
"""

from __future__ import annotations

import copy
import math
import sys
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover - depends on interpreter
    import tomli as tomllib

from .kernel import DelayModel, GaussianPulse, KernelParams, NoInput, SigmoidFront

ANALYSES = ("pulse-exist", "pulse-hopf", "front-build", "front-hopf", "simulate", "trace")
TRACE_TARGETS = ("pulse_1d", "pulse_2d", "pulse_propagation", "front_monotonous", "front_transverse",
                 "front_three_crossing")


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending field."""


def load_toml(path) -> Dict[str, Any]:
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError("config file not found: %s" % path)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError("malformed config %s: %s" % (path, exc))


def _parse_scalar(text: str):
    try:
        return tomllib.loads("v = " + text)["v"]
    except tomllib.TOMLDecodeError:
        return text


def apply_overrides(raw: Dict[str, Any], overrides: List[str]) -> Dict[str, Any]:
    """Apply ``section.key=value`` strings (values parsed as TOML scalars)."""
    out = copy.deepcopy(raw)
    for item in overrides or []:
        if "=" not in item:
            raise ConfigError("override %r must look like key=value" % item)
        key, value = item.split("=", 1)
        parts = key.strip().split(".")
        node = out
        for p in parts[:-1]:
            node = node.setdefault(p, {})
            if not isinstance(node, dict):
                raise ConfigError("override %r: %s is not a section" % (item, p))
        node[parts[-1]] = _parse_scalar(value.strip())
    return out


def deep_merge(base: Dict[str, Any], extra: Dict[str, Any]) -> Dict[str, Any]:
    out = copy.deepcopy(base)
    for k, v in extra.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = deep_merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def _num(section: Dict[str, Any], key: str, where: str, default=None, positive=False, nonneg=False,
         allow_inf=False):
    if key not in section:
        if default is None:
            raise ConfigError("%s.%s is required" % (where, key))
        return default
    v = section[key]
    if allow_inf and isinstance(v, str) and v.lower() in ("inf", "infinity"):
        return math.inf
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError("%s.%s must be a number, got %r" % (where, key, v))
    v = float(v)
    if math.isnan(v) or (math.isinf(v) and not allow_inf):
        raise ConfigError("%s.%s must be finite" % (where, key))
    if positive and not v > 0:
        raise ConfigError("%s.%s must be positive, got %g" % (where, key, v))
    if nonneg and v < 0:
        raise ConfigError("%s.%s must be non-negative, got %g" % (where, key, v))
    return v


@dataclass
class SweepSpec:
    parameter: str
    start: float
    stop: float
    count: int = 200
    scale: str = "linear"

    def values(self):
        if self.scale == "log":
            return np.logspace(math.log10(self.start), math.log10(self.stop), self.count)
        return np.linspace(self.start, self.stop, self.count)


@dataclass
class RunConfig:
    analysis: str
    kernel: Optional[KernelParams] = None
    input: Any = field(default_factory=NoInput)
    delays: DelayModel = field(default_factory=DelayModel)
    theta: Optional[float] = None
    sweep: Optional[SweepSpec] = None
    trace: Dict[str, Any] = field(default_factory=dict)
    front: Dict[str, Any] = field(default_factory=dict)
    grid: Dict[str, Any] = field(default_factory=dict)
    integration: Dict[str, Any] = field(default_factory=dict)
    initial: Dict[str, Any] = field(default_factory=dict)
    output_dir: str = "out"
    seed: int = 0
    name: str = "run"
    raw: Dict[str, Any] = field(default_factory=dict)


def _section(raw, key):
    v = raw.get(key, {})
    if not isinstance(v, dict):
        raise ConfigError("[%s] must be a table" % key)
    return v


def parse_config(raw: Dict[str, Any]) -> RunConfig:
    """Validate a raw mapping and build a :class:`RunConfig`."""
    analysis = raw.get("analysis")
    if analysis not in ANALYSES:
        raise ConfigError("analysis must be one of %s, got %r" % (", ".join(ANALYSES), analysis))

    kernel = None
    if "kernel" in raw:
        k = _section(raw, "kernel")
        d = k.get("d", 1)
        if isinstance(d, bool) or not isinstance(d, int) or d < 1:
            raise ConfigError("kernel.d must be an integer >= 1, got %r" % (d,))
        try:
            kernel = KernelParams(_num(k, "w_e", "kernel", nonneg=True), _num(k, "sigma_e", "kernel", positive=True),
                                  _num(k, "w_i", "kernel", nonneg=True), _num(k, "sigma_i", "kernel", positive=True),
                                  d)
        except ValueError as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError("kernel: %s" % exc)
    else:
        raise ConfigError("[kernel] section is required")

    inp_raw = _section(raw, "input")
    itype = inp_raw.get("type", "none")
    if itype == "gaussian":
        inp = GaussianPulse(_num(inp_raw, "I_0", "input", nonneg=True), _num(inp_raw, "sigma", "input", positive=True))
    elif itype == "sigmoid":
        inp = SigmoidFront(_num(inp_raw, "I_0", "input", nonneg=True), _num(inp_raw, "s", "input", positive=True))
    elif itype == "none":
        inp = NoInput()
    else:
        raise ConfigError("input.type must be gaussian, sigmoid or none, got %r" % (itype,))

    dl = _section(raw, "delays")
    delays = DelayModel(_num(dl, "tau_D", "delays", default=0.0, nonneg=True),
                        _num(dl, "c", "delays", default=math.inf, positive=True, allow_inf=True))

    theta = None
    if "theta" in raw:
        theta = _num(raw, "theta", "config", positive=True)

    sweep = None
    if "sweep" in raw:
        s = _section(raw, "sweep")
        if "parameter" not in s:
            raise ConfigError("sweep.parameter is required")
        count = s.get("count", 200)
        if isinstance(count, bool) or not isinstance(count, int) or count < 1:
            raise ConfigError("sweep.count must be a positive integer")
        scale = s.get("scale", "linear")
        if scale not in ("linear", "log"):
            raise ConfigError("sweep.scale must be linear or log")
        start = _num(s, "start", "sweep")
        stop = _num(s, "stop", "sweep")
        if scale == "log" and not (start > 0 and stop > 0):
            raise ConfigError("sweep.start/stop must be positive for a log sweep")
        sweep = SweepSpec(str(s["parameter"]), start, stop, count, scale)

    trace = _section(raw, "trace")
    if analysis == "trace":
        if trace.get("target") not in TRACE_TARGETS:
            raise ConfigError("trace.target must be one of %s, got %r"
                              % (", ".join(TRACE_TARGETS), trace.get("target")))
        if sweep is None:
            raise ConfigError("trace needs a [sweep] section")
    if analysis == "pulse-exist" and sweep is None:
        raise ConfigError("pulse-exist needs a [sweep] section over the half-width a")
    if analysis in ("pulse-exist", "pulse-hopf") and theta is None:
        raise ConfigError("theta is required for pulse analyses")

    front = _section(raw, "front")
    if front.get("kind", "monotonous") not in ("monotonous", "three_crossing"):
        raise ConfigError("front.kind must be monotonous or three_crossing")

    grid = _section(raw, "grid")
    integ = _section(raw, "integration")
    initial = _section(raw, "initial")
    if analysis == "simulate":
        _num(grid, "L", "grid", positive=True)
        n = grid.get("n")
        if isinstance(n, bool) or not isinstance(n, int) or n < 4 or n & (n - 1):
            raise ConfigError("grid.n must be a power of two >= 4, got %r" % (n,))
        _num(integ, "T", "integration", default=100.0, positive=True)
        dt = _num(integ, "dt", "integration", default=0.005, positive=True)
        if dt > 0.05:
            raise ConfigError("integration.dt must be <= 0.05")
        if initial.get("kind", "pulse") not in ("pulse", "front"):
            raise ConfigError("initial.kind must be pulse or front")
        if initial.get("kind", "pulse") == "pulse" and theta is None:
            raise ConfigError("theta is required for pulse simulations")
        _num(initial, "amplitude", "initial", default=0.1, nonneg=True)
        _num(initial, "noise", "initial", default=0.0, nonneg=True)

    seed = raw.get("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int):
        raise ConfigError("seed must be an integer")
    return RunConfig(analysis, kernel, inp, delays, theta, sweep, trace, front, grid, integ, initial,
                     str(raw.get("output_dir", "out")), seed, str(raw.get("name", "run")), raw)
