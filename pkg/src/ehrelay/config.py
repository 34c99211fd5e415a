"""Scenario configuration: defaults, INI loading and validation."""

import configparser
from dataclasses import asdict, dataclass, fields, replace
import hashlib
import json
import math

import numpy as np

from .channel import MAX_CLOSED_FORM_ORDER, NetworkLinks, Topology
from .energy import EnergyParams
from .primary import DEFAULT_POWER_BRACKET, rate_threshold
from .secondary import MAX_ACTIVE_RELAYS

__all__ = ["ConfigError", "SystemConfig", "load_config", "to_watts", "MODES", "HARVEST_PROCESSES"]

MODES = ("max-power", "min-rule")
HARVEST_PROCESSES = ("exponential", "deterministic")
POWER_UNITS = ("dBW", "dBm", "W")


class ConfigError(ValueError):
    """Invalid configuration value; ``key`` names the offending entry."""

    def __init__(self, key, message):
        self.key = key
        super().__init__(f"{key}: {message}")


def to_watts(value, unit):
    if unit == "W":
        return float(value)
    if unit == "dBW":
        return 10.0 ** (value / 10.0)
    if unit == "dBm":
        return 10.0 ** ((value - 30.0) / 10.0)
    raise ValueError(f"unknown power unit {unit!r}")


@dataclass(frozen=True)
class SystemConfig:
    """Every parameter of a scenario.  Defaults reproduce the reference setup."""

    # primary user
    p_pt: float = 15.0
    p_pt_unit: str = "dBW"
    r_p: float = 0.4
    # secondary network
    r_s: float = 0.2
    relays: int = 3
    mode: str = "max-power"
    p_upper_bracket: float = DEFAULT_POWER_BRACKET
    # channel
    n0: float = -60.0
    n0_unit: str = "dBm"
    m_f: int = 2
    m_int: int = 1
    m_pp: int | None = None
    path_loss_exponent: float = 4.0
    # topology (meters)
    st: tuple = (0.0, 0.0)
    sr: tuple = (50.0, 0.0)
    sd: tuple = (100.0, 0.0)
    pt: tuple = (50.0, 50.0)
    pd: tuple = (100.0, 50.0)
    # energy harvesting
    h_av: float = 2.0
    slot_duration: float = 1.0
    harvest: str = "exponential"
    battery_capacity: float = math.inf
    # primary outage cap sweep
    theta_min: float = 1e-4
    theta_max: float = 1e-2
    theta_steps: int = 21
    theta_spacing: str = "log"
    theta_values: tuple | None = None
    # simulation
    slots: int = 100_000
    trials: int = 1_000_000
    seed: int = 1
    warmup_fraction: float = 0.1
    workers: int = 1

    def __post_init__(self):
        for key in ("st", "sr", "sd", "pt", "pd"):
            object.__setattr__(self, key, tuple(getattr(self, key)))
        if self.theta_values is not None:
            object.__setattr__(self, "theta_values", tuple(float(v) for v in self.theta_values))
        _validate(self)

    # derived quantities

    @property
    def p_pt_watts(self):
        return to_watts(self.p_pt, self.p_pt_unit)

    @property
    def n0_watts(self):
        return to_watts(self.n0, self.n0_unit)

    @property
    def theta_p(self):
        """Primary SINR threshold."""
        return rate_threshold(self.r_p)

    @property
    def gamma_s(self):
        """Secondary SINR threshold (two half-duplex phases)."""
        return rate_threshold(self.r_s, uses=2)

    @property
    def topology(self):
        return Topology(self.st, self.sr, self.sd, self.pt, self.pd, self.path_loss_exponent)

    @property
    def links(self):
        return NetworkLinks.from_topology(self.topology, self.m_f, self.m_int, self.m_pp)

    @property
    def energy(self):
        return EnergyParams(self.h_av, self.relays, self.slot_duration)

    @property
    def theta_grid(self):
        if self.theta_values is not None:
            return tuple(self.theta_values)
        if self.theta_steps == 1:
            return (self.theta_min,)
        if self.theta_spacing == "log":
            grid = np.geomspace(self.theta_min, self.theta_max, self.theta_steps)
        else:
            grid = np.linspace(self.theta_min, self.theta_max, self.theta_steps)
        return tuple(float(v) for v in grid)

    def with_overrides(self, **changes):
        unknown = set(changes) - {f.name for f in fields(self)}
        if unknown:
            raise ConfigError(sorted(unknown)[0], "unknown configuration key")
        return replace(self, **changes)

    def to_dict(self):
        return asdict(self)

    def digest(self):
        """Short SHA-256 of the canonical JSON form."""
        blob = json.dumps(self.to_dict(), sort_keys=True, default=str)
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:16]


def _require(cond, key, message):
    if not cond:
        raise ConfigError(key, message)


def _is_int(v):
    return isinstance(v, (int, np.integer)) and not isinstance(v, bool)


def _validate(c):
    for key in ("p_pt", "n0", "r_p", "r_s", "h_av", "slot_duration", "path_loss_exponent"):
        v = getattr(c, key)
        _require(isinstance(v, (int, float)) and math.isfinite(v), key, f"must be a finite number, got {v!r}")
    _require(c.p_pt_unit in POWER_UNITS, "p_pt_unit", f"must be one of {POWER_UNITS}")
    _require(c.n0_unit in POWER_UNITS, "n0_unit", f"must be one of {POWER_UNITS}")
    if c.p_pt_unit == "W":
        _require(c.p_pt > 0, "p_pt", "must be positive in watts")
    if c.n0_unit == "W":
        _require(c.n0 > 0, "n0", "must be positive in watts")
    _require(c.r_p > 0, "r_p", "must be positive")
    _require(c.r_s >= 0, "r_s", "must be nonnegative")
    for key in ("m_f", "m_int", "m_pp"):
        v = getattr(c, key)
        if key == "m_pp" and v is None:
            continue
        _require(_is_int(v) and 1 <= v <= MAX_CLOSED_FORM_ORDER, key,
                 f"must be an integer in [1, {MAX_CLOSED_FORM_ORDER}], got {v!r}")
    _require(_is_int(c.relays) and 1 <= c.relays <= MAX_ACTIVE_RELAYS, "relays",
             f"must be an integer in [1, {MAX_ACTIVE_RELAYS}], got {c.relays!r}")
    _require(c.mode in MODES, "mode", f"must be one of {MODES}, got {c.mode!r}")
    _require(c.harvest in HARVEST_PROCESSES, "harvest", f"must be one of {HARVEST_PROCESSES}")
    _require(c.h_av >= 0, "h_av", "must be nonnegative")
    _require(c.slot_duration > 0, "slot_duration", "must be positive")
    _require(c.path_loss_exponent > 0, "path_loss_exponent", "must be positive")
    _require(c.battery_capacity > 0, "battery_capacity", "must be positive")
    _require(c.p_upper_bracket > 0 and math.isfinite(c.p_upper_bracket), "p_upper_bracket",
             "must be positive and finite")
    for key in ("st", "sr", "sd", "pt", "pd"):
        xy = getattr(c, key)
        _require(len(xy) == 2 and all(math.isfinite(float(v)) for v in xy), key,
                 f"must be an (x, y) pair, got {xy!r}")
    try:
        c.topology
    except ValueError as exc:
        raise ConfigError("topology", str(exc)) from None

    _require(c.theta_spacing in ("log", "linear"), "theta_spacing", "must be 'log' or 'linear'")
    _require(_is_int(c.theta_steps) and c.theta_steps >= 1, "theta_steps", "must be a positive integer")
    if c.theta_values is None:
        _require(0 < c.theta_min < 1, "theta_min", f"must lie in (0, 1), got {c.theta_min!r}")
        _require(0 < c.theta_max < 1, "theta_max", f"must lie in (0, 1), got {c.theta_max!r}")
        _require(c.theta_steps == 1 or c.theta_max > c.theta_min, "theta_max",
                 "must exceed theta_min")
    else:
        grid = c.theta_values
        _require(len(grid) > 0, "theta_values", "grid must be nonempty")
        _require(all(0 < t < 1 for t in grid), "theta_values", "every value must lie in (0, 1)")
        _require(all(b > a for a, b in zip(grid, grid[1:])), "theta_values",
                 "grid must be strictly increasing")

    _require(_is_int(c.slots) and c.slots >= 0, "slots", "must be a nonnegative integer")
    _require(_is_int(c.trials) and c.trials >= 1, "trials", "must be a positive integer")
    _require(_is_int(c.seed) and 0 <= c.seed < 2**64, "seed", "must be a 64-bit nonnegative integer")
    _require(0 <= c.warmup_fraction < 1, "warmup_fraction", "must lie in [0, 1)")
    _require(_is_int(c.workers) and c.workers >= 1, "workers", "must be a positive integer")


# INI layout: section -> {key: parser}


def _pair(text):
    parts = [p.strip() for p in text.replace("(", "").replace(")", "").split(",")]
    if len(parts) != 2:
        raise ValueError(f"expected 'x, y', got {text!r}")
    return (float(parts[0]), float(parts[1]))


def _floats(text):
    return tuple(float(p) for p in text.replace(",", " ").split())


def _opt_int(text):
    return None if text.strip().lower() in ("", "none") else int(text)


_SCHEMA = {
    "primary": {"p_pt": float, "p_pt_unit": str, "r_p": float},
    "secondary": {"r_s": float, "relays": int, "mode": str, "p_upper_bracket": float},
    "channel": {
        "n0": float,
        "n0_unit": str,
        "m_f": int,
        "m_int": int,
        "m_pp": _opt_int,
        "path_loss_exponent": float,
    },
    "topology": {k: _pair for k in ("st", "sr", "sd", "pt", "pd")},
    "energy": {"h_av": float, "slot_duration": float, "harvest": str, "battery_capacity": float},
    "sweep": {
        "theta_min": float,
        "theta_max": float,
        "theta_steps": int,
        "theta_spacing": str,
        "theta_values": _floats,
    },
    "simulation": {
        "slots": int,
        "trials": int,
        "seed": int,
        "warmup_fraction": float,
        "workers": int,
    },
}


def _parse_file(path):
    parser = configparser.ConfigParser(interpolation=None, default_section="__none__",
                                       inline_comment_prefixes=(";",))
    parser.optionxform = str  # keep key case so typos are not masked
    with open(path, encoding="utf-8") as fh:
        try:
            parser.read_file(fh)
        except configparser.Error as exc:
            raise ConfigError(str(path), f"malformed config file: {exc}") from None
    values = {}
    for section in parser.sections():
        if section not in _SCHEMA:
            raise ConfigError(f"[{section}]", f"unknown section; expected one of {sorted(_SCHEMA)}")
        for key, raw in parser.items(section):
            if key not in _SCHEMA[section]:
                raise ConfigError(f"{section}.{key}", "unknown configuration key")
            try:
                values[key] = _SCHEMA[section][key](raw.strip())
            except ValueError as exc:
                raise ConfigError(f"{section}.{key}", f"cannot parse {raw!r}: {exc}") from None
    return values


def load_config(path=None, overrides=None):
    """Build a validated :class:`SystemConfig`.

    Parameters
    ----------
    path : str or Path, optional
        INI-style file with sections ``primary``, ``secondary``, ``channel``,
        ``topology``, ``energy``, ``sweep`` and ``simulation``.  Missing keys
        keep their defaults; unknown sections or keys are errors.
    overrides : dict, optional
        Field values applied after the file (e.g. from CLI flags).  ``None``
        values are ignored.

    Raises
    ------
    ConfigError
    """
    values = _parse_file(path) if path is not None else {}
    for key, v in (overrides or {}).items():
        if v is not None:
            values[key] = v
    known = {f.name for f in fields(SystemConfig)}
    for key in values:
        if key not in known:
            raise ConfigError(key, "unknown configuration key")
    return SystemConfig(**values)
