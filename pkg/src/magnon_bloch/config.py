"""Run configuration: a TOML file layered over a named profile.

Example::

    [geometry]
    total_sites = 101
    boundary = "open"

    [model]
    Delta = -1.5            # a list runs a sweep, one subdirectory per value
    B = 0.05

    [initial]
    positions = [-1, 0]

    [time]
    periods = 4
    samples_per_period = 256

Only ``model.Delta`` has no default; ``total_sites``, ``B``, ``periods`` and
``samples_per_period`` come from the profile when absent.
"""

from __future__ import annotations

import re
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

PROFILES = {
    "desk": {"total_sites": 41, "B": 0.1, "periods": 1, "samples_per_period": 256},
    "paper": {"total_sites": 101, "B": 0.05, "periods": 4, "samples_per_period": 256},
}

DEFAULT_SNAPSHOTS = (0.0, 0.25, 0.5, 0.75, 1.0)

SCHEMA = {
    "geometry": {"total_sites", "boundary"},
    "model": {"Delta", "B"},
    "initial": {"positions"},
    "time": {"periods", "samples_per_period"},
    "propagator": {"method", "tol"},
    "observables": {"distribution", "correlations", "pair_correlations", "fidelity",
                    "deviation", "exponent", "snapshots"},
    "analysis": {"window", "mode", "min_prominence_fraction", "input", "column"},
    "spectrum": {"bound_tol"},
    "symmetry": {"trace"},
}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    deltas: tuple[float, ...]
    total_sites: int
    B: float
    boundary: str = "open"
    positions: tuple[int, ...] = (-1, 0)
    periods: float = 1.0
    samples_per_period: int = 256
    propagator: str = "spectral"
    tol: float = 1e-9
    distribution: bool = True
    correlations: bool = True
    pair_correlations: bool = True
    fidelity: bool = True
    deviation: bool = True
    exponent: float = 0.5
    snapshots: tuple[float, ...] = DEFAULT_SNAPSHOTS
    window: str = "none"
    mode: str = "auto"
    min_prominence_fraction: float = 0.05
    bound_tol: float | None = None
    trace: tuple[int, int] = (9, 10)
    analysis_input: str | None = None
    analysis_column: str | None = None
    source: str = "<profile>"
    raw: dict = field(default_factory=dict, compare=False, repr=False)
    text: str = field(default="", compare=False, repr=False)

    def where(self, section: str, key: str | None = None) -> str:
        """``source:line`` of a key (or section) for error messages."""
        return _where(self.source, self.text, section, key)

    def require_gradient(self) -> None:
        """Time grids are measured in Bloch periods, which need ``B != 0``."""
        if self.B == 0:
            raise ConfigError(f"{self.where('model', 'B')}: model.B must be nonzero for time-resolved runs "
                              "(time is measured in Bloch periods)")

    @property
    def delta(self) -> float:
        if len(self.deltas) != 1:
            raise ConfigError("this workflow takes a single Delta, not a sweep")
        return self.deltas[0]

    def with_delta(self, delta: float) -> "RunConfig":
        return replace(self, deltas=(float(delta),))

    def as_dict(self) -> dict[str, Any]:
        return {
            "Delta": list(self.deltas), "total_sites": self.total_sites, "B": self.B,
            "boundary": self.boundary, "positions": list(self.positions),
            "periods": self.periods, "samples_per_period": self.samples_per_period,
            "propagator": self.propagator, "tol": self.tol, "exponent": self.exponent,
            "snapshots": list(self.snapshots), "window": self.window, "mode": self.mode,
            "min_prominence_fraction": self.min_prominence_fraction,
            "bound_tol": self.bound_tol, "trace": list(self.trace),
        }


def _key_line(text: str, section: str | None, key: str) -> int | None:
    current = None
    for n, line in enumerate(text.splitlines(), 1):
        stripped = line.strip()
        m = re.match(r"\[([^\]]+)\]", stripped)
        if m:
            current = m.group(1).strip()
            continue
        if current == section and re.match(rf"{re.escape(key)}\s*=", stripped):
            return n
    return None


def _where(source: str, text: str, section: str | None, key: str | None = None) -> str:
    line = None
    if key is not None:
        line = _key_line(text, section, key)
    elif section is not None:
        for n, l in enumerate(text.splitlines(), 1):
            if l.strip().startswith(f"[{section}]"):
                line = n
                break
    return f"{source}:{line}" if line else source


def _number(value, what, where, integer=False):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{where}: {what} must be a number, got {value!r}")
    if integer and int(value) != value:
        raise ConfigError(f"{where}: {what} must be an integer, got {value!r}")
    return int(value) if integer else float(value)


def parse_config(text: str, profile: str = "desk", source: str = "<string>",
                 overrides: dict[str, Any] | None = None) -> RunConfig:
    """Parse TOML ``text`` on top of ``profile`` defaults; errors name the offending line."""
    if profile not in PROFILES:
        raise ConfigError(f"unknown profile {profile!r}; expected one of {sorted(PROFILES)}")
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{source}: {exc}") from None

    for section, body in data.items():
        if section not in SCHEMA:
            raise ConfigError(f"{_where(source, text, section)}: unknown section [{section}]")
        if not isinstance(body, dict):
            raise ConfigError(f"{_where(source, text, None, section)}: expected a [{section}] table")
        for key in body:
            if key not in SCHEMA[section]:
                raise ConfigError(f"{_where(source, text, section, key)}: unknown key {section}.{key}")

    def get(section, key, default=None):
        return data.get(section, {}).get(key, default)

    def where(section, key):
        return _where(source, text, section, key)

    prof = PROFILES[profile]
    kw: dict[str, Any] = {"source": source, "raw": data, "text": text}

    delta = get("model", "Delta")
    if delta is None:
        raise ConfigError(f"{_where(source, text, 'model')}: missing required key model.Delta")
    deltas = delta if isinstance(delta, list) else [delta]
    if not deltas:
        raise ConfigError(f"{where('model', 'Delta')}: model.Delta list is empty")
    kw["deltas"] = tuple(_number(d, "model.Delta", where("model", "Delta")) for d in deltas)

    kw["total_sites"] = _number(get("geometry", "total_sites", prof["total_sites"]),
                                "geometry.total_sites", where("geometry", "total_sites"), integer=True)
    if kw["total_sites"] < 3 or kw["total_sites"] % 2 == 0:
        raise ConfigError(f"{where('geometry', 'total_sites')}: geometry.total_sites must be odd and >= 3")
    kw["boundary"] = get("geometry", "boundary", "open")
    if kw["boundary"] not in ("open", "periodic"):
        raise ConfigError(f"{where('geometry', 'boundary')}: boundary must be 'open' or 'periodic'")

    kw["B"] = _number(get("model", "B", prof["B"]), "model.B", where("model", "B"))

    positions = get("initial", "positions", [-1, 0])
    if not isinstance(positions, list) or len(positions) != 2:
        raise ConfigError(f"{where('initial', 'positions')}: initial.positions must list two sites")
    kw["positions"] = tuple(_number(p, "initial.positions", where("initial", "positions"), integer=True)
                            for p in positions)
    half = (kw["total_sites"] - 1) // 2
    if kw["positions"][0] == kw["positions"][1]:
        raise ConfigError(f"{where('initial', 'positions')}: initial.positions must be distinct")
    if any(abs(p) > half for p in kw["positions"]):
        raise ConfigError(f"{where('initial', 'positions')}: initial.positions outside [-{half}, {half}]")

    kw["periods"] = _number(get("time", "periods", prof["periods"]), "time.periods", where("time", "periods"))
    kw["samples_per_period"] = _number(get("time", "samples_per_period", prof["samples_per_period"]),
                                       "time.samples_per_period", where("time", "samples_per_period"),
                                       integer=True)
    if kw["periods"] <= 0 or kw["samples_per_period"] <= 0 or round(kw["periods"] * kw["samples_per_period"]) < 1:
        raise ConfigError(f"{_where(source, text, 'time')}: the time grid has zero length")

    kw["propagator"] = get("propagator", "method", "spectral")
    if kw["propagator"] not in ("spectral", "krylov"):
        raise ConfigError(f"{where('propagator', 'method')}: propagator.method must be 'spectral' or 'krylov'")
    kw["tol"] = _number(get("propagator", "tol", 1e-9), "propagator.tol", where("propagator", "tol"))
    if kw["tol"] <= 0:
        raise ConfigError(f"{where('propagator', 'tol')}: propagator.tol must be positive")

    for flag in ("distribution", "correlations", "pair_correlations", "fidelity", "deviation"):
        value = get("observables", flag, True)
        if not isinstance(value, bool):
            raise ConfigError(f"{where('observables', flag)}: observables.{flag} must be true or false")
        kw[flag] = value
    kw["exponent"] = _number(get("observables", "exponent", 0.5), "observables.exponent",
                             where("observables", "exponent"))
    if kw["exponent"] <= 0:
        raise ConfigError(f"{where('observables', 'exponent')}: observables.exponent must be positive")
    snaps = get("observables", "snapshots", list(DEFAULT_SNAPSHOTS))
    if not isinstance(snaps, list):
        raise ConfigError(f"{where('observables', 'snapshots')}: observables.snapshots must be a list")
    kw["snapshots"] = tuple(_number(s, "observables.snapshots", where("observables", "snapshots"))
                            for s in snaps)

    kw["window"] = get("analysis", "window", "none")
    if kw["window"] not in ("none", "hann"):
        raise ConfigError(f"{where('analysis', 'window')}: analysis.window must be 'none' or 'hann'")
    kw["mode"] = get("analysis", "mode", "auto")
    if kw["mode"] not in ("auto", "fundamental", "doubled"):
        raise ConfigError(f"{where('analysis', 'mode')}: analysis.mode must be auto, fundamental or doubled")
    kw["min_prominence_fraction"] = _number(get("analysis", "min_prominence_fraction", 0.05),
                                            "analysis.min_prominence_fraction",
                                            where("analysis", "min_prominence_fraction"))
    kw["analysis_input"] = get("analysis", "input")
    kw["analysis_column"] = get("analysis", "column")

    bt = get("spectrum", "bound_tol")
    kw["bound_tol"] = None if bt is None else _number(bt, "spectrum.bound_tol", where("spectrum", "bound_tol"))
    trace = get("symmetry", "trace", [9, 10])
    if not isinstance(trace, list) or len(trace) != 2:
        raise ConfigError(f"{where('symmetry', 'trace')}: symmetry.trace must list two sites")
    kw["trace"] = tuple(_number(s, "symmetry.trace", where("symmetry", "trace"), integer=True) for s in trace)

    kw.update(overrides or {})
    return RunConfig(**kw)


def load_config(path: str | Path | None, profile: str = "desk", overrides: dict[str, Any] | None = None) -> RunConfig:
    if path is None:
        raise ConfigError("a --config file is required (model.Delta has no default)")
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config(text, profile, str(path), overrides)
