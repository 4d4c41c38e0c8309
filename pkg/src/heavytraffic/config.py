"""Run configuration: flat ``key = value`` files with ``[section]`` headers.

Sections:

``[run]``
    command parameters; the accepted keys depend on the command.
``[spec]``
    ``kind`` plus the jump-law parameters (see :data:`heavytraffic.jumps.KINDS`).
``[perturbation]``
    optional ``law`` and ``b`` (limit command only).
``[tolerance]``
    overrides of the pass/fail thresholds.

Lists are comma separated.  Unknown sections or keys are rejected.
"""

from __future__ import annotations

import configparser
import hashlib
from dataclasses import dataclass, field

from .errors import ConfigError
from .jumps import spec_from_block
from .walksim import PerturbationSpec

COMMANDS = ("normalize", "limit", "spitzer", "inequality", "mstar")

_FLOAT, _STR = float, str


def _INT(v):
    try:
        return int(v)
    except ValueError:
        f = float(v)
        if f != int(f):
            raise
        return int(f)


def _floats(v):
    return [float(x) for x in v.split(",") if x.strip()]


def _ints(v):
    return [_INT(x.strip()) for x in v.split(",") if x.strip()]


_COMMON = {"command": _STR, "seed": _INT, "out": _STR}
RUN_KEYS = {
    "normalize": {"a": _floats, "n_min": _FLOAT, "n_max": _FLOAT, "ratio": _FLOAT},
    "limit": {"a": _floats, "T": _FLOAT, "trials": _INT, "horizon": _INT,
              "grid_points": _INT, "grid_steps": _INT},
    "spitzer": {"a": _FLOAT, "mu": _floats, "eps": _FLOAT, "T": _FLOAT, "trials": _INT},
    "inequality": {"n": _ints, "x": _floats, "trials": _INT, "gamma": _FLOAT,
                   "pruitt_x": _floats},
    "mstar": {"alpha": _FLOAT, "skew": _STR, "T": _FLOAT, "grid_steps": _INT,
              "trials": _INT, "mu": _floats, "window_eps": _FLOAT, "window_T": _FLOAT,
              "nodes": _INT, "samples": _INT},
}
TOLERANCE_KEYS = {"ks", "defining_ratio", "slope_c", "slope_n", "variation",
                  "laplace_sigmas"}
DEFAULT_TOLERANCE = {"ks": 0.05, "defining_ratio": 0.01, "slope_c": 0.02, "slope_n": 0.1,
                     "variation": 2.0, "laplace_sigmas": 2.0}
DEFAULT_TOLERANCE_BY_COMMAND = {"mstar": {"ks": 0.03}}


@dataclass
class RunConfig:
    command: str
    run: dict
    spec_block: dict | None = None
    perturbation: PerturbationSpec | None = None
    tolerance: dict = field(default_factory=dict)
    text: str = ""

    @property
    def spec(self):
        if self.spec_block is None:
            raise ConfigError(f"command {self.command!r} needs a [spec] section")
        return spec_from_block(self.spec_block)

    @property
    def seed(self):
        return self.run.get("seed", 0)

    @property
    def config_hash(self):
        return hashlib.sha256(self.text.encode()).hexdigest()

    def get(self, key, default=None):
        return self.run.get(key, default)

    def require(self, key):
        if key not in self.run:
            raise ConfigError(f"[run] {key} is required for command {self.command!r}")
        return self.run[key]

    def tol(self, key):
        return self.tolerance[key]

    def echo(self):
        return {"command": self.command, "run": self.run, "spec": self.spec_block,
                "perturbation": None if self.perturbation is None else
                {"law": self.perturbation.law, "b": self.perturbation.b},
                "tolerance": self.tolerance}


def _parse_spec_block(items):
    block = {}
    for k, v in items:
        if k == "kind":
            block[k] = v.strip()
        else:
            try:
                block[k] = float(v)
            except ValueError:
                raise ConfigError(f"[spec] {k} must be a number, got {v!r}") from None
    if "kind" not in block:
        raise ConfigError("[spec] needs a kind")
    spec_from_block(block)
    return block


def parse_config(text, command=None, source="<config>") -> RunConfig:
    cp = configparser.ConfigParser(interpolation=None, delimiters=("=",),
                                   comment_prefixes=("#", ";"), inline_comment_prefixes=("#",))
    cp.optionxform = str
    try:
        cp.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse {source}: {exc}") from None
    unknown = set(cp.sections()) - {"run", "spec", "perturbation", "tolerance"}
    if unknown:
        raise ConfigError(f"unknown section(s): {sorted(unknown)}")
    raw = dict(cp["run"]) if cp.has_section("run") else {}
    cmd = raw.get("command", command)
    if command is not None and cmd != command:
        raise ConfigError(f"config is for command {cmd!r}, invoked as {command!r}")
    if cmd not in COMMANDS:
        raise ConfigError(f"unknown command {cmd!r}; choose from {COMMANDS}")
    allowed = dict(_COMMON, **RUN_KEYS[cmd])
    run = {}
    for k, v in raw.items():
        if k not in allowed:
            raise ConfigError(f"unknown key [run] {k} for command {cmd!r}; "
                              f"allowed: {sorted(allowed)}")
        try:
            run[k] = allowed[k](v.strip())
        except ValueError:
            raise ConfigError(f"[run] {k}: cannot parse {v!r}") from None
    run.pop("command", None)
    for k in ("trials", "grid_steps", "nodes", "samples", "grid_points"):
        if k in run and run[k] < 1:
            raise ConfigError(f"[run] {k} must be >= 1, got {run[k]}")
    for k in ("a", "mu", "n", "x"):
        if k in run and isinstance(run[k], list) and not run[k]:
            raise ConfigError(f"[run] {k} must be a nonempty list")

    spec_block = _parse_spec_block(cp.items("spec")) if cp.has_section("spec") else None

    pert = None
    if cp.has_section("perturbation"):
        if cmd != "limit":
            raise ConfigError("[perturbation] is only accepted by the limit command")
        items = dict(cp["perturbation"])
        extra = set(items) - {"law", "b"}
        if extra:
            raise ConfigError(f"unknown key(s) in [perturbation]: {sorted(extra)}")
        pert = PerturbationSpec(law=items.get("law", "uniform").strip(),
                                b=float(items.get("b", 1.0)))

    tol = dict(DEFAULT_TOLERANCE, **DEFAULT_TOLERANCE_BY_COMMAND.get(cmd, {}))
    if cp.has_section("tolerance"):
        for k, v in cp["tolerance"].items():
            if k not in TOLERANCE_KEYS:
                raise ConfigError(f"unknown key [tolerance] {k}")
            tol[k] = float(v)
    return RunConfig(cmd, run, spec_block, pert, tol, text)


def load_config(path, command=None) -> RunConfig:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config(text, command, source=str(path))
