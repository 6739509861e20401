"""Experiment configuration: one YAML file with a schema version, merged over defaults."""
from __future__ import annotations

import copy
import hashlib
import json
from dataclasses import dataclass

import yaml

from . import funcspace as fs
from .errors import ConfigError

SCHEMA_VERSION = 1

DEFAULTS = {
    "schema_version": SCHEMA_VERSION,
    "curve": {"name": "parabola", "domain": [0.0, 1.0]},
    "shifts": [{"name": "zero"}],
    "seed": 0,
    "budget": 10**9,
    "workers": 1,
    "ubiquity": {"t_range": [4, 9], "kappa": None, "calibration_t": None, "target": 0.5,
                 "k_min": 0.1, "J_lengths": [0.1, 0.01], "J_per_length": 4},
    "dimension": {"v_list": [2.5, 3.0, 4.0], "scales": [6, 14], "mode": "shell", "tolerance": 0.1,
                  "survivors": 3, "stage_t": [4, 7], "svolume_t": None},
    "count": {"H_list": [16, 32, 64, 128, 256], "deltas": [0.0, 0.5, 1.0], "v": 3.0,
              "convention": "as_printed", "growth_cap": 4.0},
    "construct": {"Q_list": [16, 32, 64, 128], "xi_count": 100, "xi": None, "xi_range": [0.05, 0.95],
                  "delta": 0.01, "variant": "printed", "min_success": 0.9, "constant_growth": 2.0},
    "covers": {"t_list": [6, 7, 8], "v": 3.0, "epsilon": 0.1, "epsilon1": 0.05,
               "threshold_constant": 1.0, "classify_t_max": 6},
    "divergence": {"n": 2, "v_list": [2.5, 3.0, 4.0, 5.0, 7.0], "s_offsets": [-0.2, -0.1, 0.0, 0.1],
                   "q_max": 2**20},
}

SHIFTS = {
    "zero": lambda p: fs.shift_zero(),
    "constant": lambda p: fs.shift_constant(float(p.get("c", 0.5))),
    "power": lambda p: fs.shift_power(int(p.get("k", 3)), float(p.get("coef", 1.0))),
    "sine": lambda p: fs.shift_sine(float(p.get("w", 1.0)), float(p.get("coef", 1.0))),
}


def _merge(base: dict, over: dict, path: str = "") -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if k not in base:
            raise ConfigError(f"unknown key {path + k!r}")
        if isinstance(base[k], dict) and k not in ("curve",):
            if not isinstance(v, dict):
                raise ConfigError(f"{path + k!r} must be a mapping")
            out[k] = _merge(base[k], v, path + k + ".")
        else:
            out[k] = v
    return out


@dataclass
class ExperimentConfig:
    data: dict

    def __getitem__(self, k):
        return self.data[k]

    @property
    def hash(self) -> str:
        # the worker count never changes results, so it stays out of the hash
        d = {k: v for k, v in self.data.items() if k != "workers"}
        blob = json.dumps(d, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    def curve(self) -> fs.CurveSystem:
        c = dict(self.data["curve"])
        name = c.pop("name")
        if name not in fs.CURVES:
            raise ConfigError(f"unknown curve {name!r}")
        domain = tuple(float(x) for x in c.pop("domain", (0.0, 1.0)))
        try:
            return fs.CURVES[name](domain=domain, **c)
        except TypeError as e:
            raise ConfigError(f"bad curve parameters: {e}") from None

    def shifts(self) -> list:
        """[(label, shift)] in config order."""
        out = []
        for s in self.data["shifts"]:
            s = dict(s)
            name = s.get("name")
            if name not in SHIFTS:
                raise ConfigError(f"unknown shift {name!r}")
            lam = SHIFTS[name](s)
            out.append((lam.name, lam))
        return out


def _check(cfg: dict) -> None:
    def pos_int(x, what):
        if not isinstance(x, int) or isinstance(x, bool) or x < 1:
            raise ConfigError(f"{what} must be a positive integer")

    if cfg["schema_version"] != SCHEMA_VERSION:
        raise ConfigError(f"schema_version must be {SCHEMA_VERSION}")
    if not isinstance(cfg["curve"], dict) or "name" not in cfg["curve"]:
        raise ConfigError("curve needs a name")
    if not isinstance(cfg["shifts"], list) or not cfg["shifts"]:
        raise ConfigError("shifts must be a nonempty list")
    for s in cfg["shifts"]:
        if not isinstance(s, dict) or s.get("name") not in SHIFTS:
            raise ConfigError(f"bad shift entry {s!r}")
    pos_int(cfg["budget"], "budget")
    pos_int(cfg["workers"], "workers")
    if not isinstance(cfg["seed"], int):
        raise ConfigError("seed must be an integer")
    u = cfg["ubiquity"]
    if len(u["t_range"]) != 2 or u["t_range"][0] > u["t_range"][1] or u["t_range"][0] < 1:
        raise ConfigError("ubiquity.t_range must be [t_lo, t_hi] with 1 <= t_lo <= t_hi")
    if u["kappa"] is not None and not u["kappa"] > 0:
        raise ConfigError("ubiquity.kappa must be positive")
    d = cfg["dimension"]
    for v in d["v_list"]:
        if not float(v) > 2:
            raise ConfigError("dimension.v_list entries must exceed 2")
    if d["mode"] not in ("shell", "survivor"):
        raise ConfigError("dimension.mode must be shell or survivor")
    if len(d["scales"]) != 2 or d["scales"][1] - d["scales"][0] < 2:
        raise ConfigError("dimension.scales must be [k_lo, k_hi] spanning at least three scales")
    c = cfg["count"]
    if c["convention"] not in ("exact", "as_printed"):
        raise ConfigError("count.convention must be exact or as_printed")
    for H in c["H_list"]:
        pos_int(H, "count.H_list entries")
    k = cfg["construct"]
    if k["xi"] is not None:
        if not isinstance(k["xi"], list) or not k["xi"]:
            raise ConfigError("construct.xi is an empty list")
    elif not isinstance(k["xi_count"], int) or k["xi_count"] < 1:
        raise ConfigError("construct.xi_count must be a positive integer")
    if k["variant"] not in ("printed", "n+1"):
        raise ConfigError("construct.variant must be printed or n+1")
    cv = cfg["covers"]
    if not float(cv["v"]) > 2 + 3 * float(cv["epsilon1"]):
        raise ConfigError("covers needs v > 2 + 3*epsilon1")
    dv = cfg["divergence"]
    if dv["q_max"] < 2**10:
        raise ConfigError("divergence.q_max must be at least 2^10")


def load_config(path=None, overrides: dict | None = None) -> ExperimentConfig:
    """Read ``path`` (YAML) over the defaults; None gives the defaults."""
    raw = {}
    if path is not None:
        try:
            with open(path, encoding="utf-8") as fh:
                raw = yaml.safe_load(fh)
        except OSError as e:
            raise ConfigError(f"cannot read config: {e}") from None
        except yaml.YAMLError as e:
            raise ConfigError(f"config is not valid YAML: {e}") from None
        if raw is None:
            raw = {}
        if not isinstance(raw, dict):
            raise ConfigError("config must be a mapping")
        if "schema_version" not in raw:
            raise ConfigError("config lacks schema_version")
    cfg = _merge(DEFAULTS, raw)
    if overrides:
        cfg = _merge(cfg, overrides)
    try:
        _check(cfg)
    except (TypeError, KeyError) as e:
        raise ConfigError(f"malformed config: {e}") from None
    return ExperimentConfig(cfg)
