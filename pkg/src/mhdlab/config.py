"""Flat dotted-key configuration files for runs and sweeps.

Format: one ``key = value`` pair per line, ``#`` comments, UTF-8.  Unknown
keys are rejected with the nearest valid key; all errors are collected with
line numbers before reporting.
"""

from __future__ import annotations

import copy
import difflib
import math
from dataclasses import dataclass, field, fields

__all__ = [
    "ConfigError",
    "GridConfig",
    "IcConfig",
    "TimeConfig",
    "DiagConfig",
    "OutputConfig",
    "RunConfig",
    "SweepSpec",
    "parse_config",
    "parse_sweep",
    "config_echo",
    "set_by_path",
]

STEPPERS = ("primitive", "duhamel", "bform")
IC_KINDS = ("gaussian_vortex", "shear", "single_mode", "file")


class ConfigError(ValueError):
    """All config defects at once, each tagged with its line number."""

    def __init__(self, errors: list[str]):
        super().__init__("\n".join(errors))
        self.errors = errors


@dataclass
class GridConfig:
    nx: int = 256
    ny: int = 256
    lx: float = 64.0 * math.pi
    ly: float = 64.0 * math.pi


@dataclass
class IcConfig:
    kind: str = "gaussian_vortex"
    amplitude: float = 1e-3
    sigma: float = 1.5
    sigma_psi: float = 0.0  # 0 means: same as sigma
    psi_fraction: float = 1.0
    mode_m: int = 0  # 0 means: one full period across the box
    mode_mx: int = 1
    mode_my: int = 0
    field: str = "psi"
    file: str = ""

    def params(self) -> dict:
        p: dict = {}
        if self.kind == "gaussian_vortex":
            p["sigma"] = self.sigma
            p["sigma_psi"] = self.sigma_psi if self.sigma_psi > 0 else self.sigma
            p["psi_fraction"] = self.psi_fraction
        elif self.kind == "shear":
            if self.mode_m > 0:
                p["mode_m"] = self.mode_m
        elif self.kind == "single_mode":
            p.update(mode_mx=self.mode_mx, mode_my=self.mode_my, field=self.field)
        elif self.kind == "file":
            p["path"] = self.file
        return p


@dataclass
class TimeConfig:
    t_end: float = 10.0
    dt: float = 1e-2
    stepper: str = "primitive"


@dataclass
class DiagConfig:
    n: float = 5.0
    eps: float = 0.01
    cadence: float = 0.1
    fit_lo: float = 5.0
    fit_hi: float = 50.0


@dataclass
class OutputConfig:
    dir: str = "out"
    csv: str = "series.csv"
    snapshot_dir: str = ""  # empty: no snapshots
    snapshot_cadence: float = 0.0
    figures: bool = True


@dataclass
class RunConfig:
    grid: GridConfig = field(default_factory=GridConfig)
    ic: IcConfig = field(default_factory=IcConfig)
    time: TimeConfig = field(default_factory=TimeConfig)
    diag: DiagConfig = field(default_factory=DiagConfig)
    output: OutputConfig = field(default_factory=OutputConfig)
    seed: int = 0


_SECTIONS = {
    "grid": GridConfig,
    "ic": IcConfig,
    "time": TimeConfig,
    "diag": DiagConfig,
    "output": OutputConfig,
}


def _known_keys() -> list[str]:
    keys = ["seed"]
    for section, cls in _SECTIONS.items():
        keys.extend(f"{section}.{f.name}" for f in fields(cls))
    return keys


def _coerce(raw: str, target_type: type, key: str):
    raw = raw.strip()
    if target_type is bool:
        low = raw.lower()
        if low in ("true", "1", "yes", "on"):
            return True
        if low in ("false", "0", "no", "off"):
            return False
        raise ValueError(f"{key}: expected boolean, got {raw!r}")
    if target_type is int:
        return int(raw)
    if target_type is float:
        if raw.endswith("pi"):
            return float(raw[:-2] or "1") * math.pi
        return float(raw)
    return raw


def set_by_path(cfg: RunConfig, key: str, raw_value) -> None:
    """Assign one dotted key on a RunConfig, coercing from text if needed."""
    if key == "seed":
        cfg.seed = int(raw_value)
        return
    if "." not in key:
        raise KeyError(key)
    section, _, name = key.partition(".")
    if section not in _SECTIONS:
        raise KeyError(key)
    sub = getattr(cfg, section)
    ftypes = {f.name: type(getattr(sub, f.name)) for f in fields(sub)}
    if name not in ftypes:
        raise KeyError(key)
    value = (
        _coerce(raw_value, ftypes[name], key)
        if isinstance(raw_value, str)
        else raw_value
    )
    setattr(sub, name, value)


def _validate(cfg: RunConfig, errors: list[str]) -> None:
    g = cfg.grid
    if g.nx < 4 or g.nx % 2:
        errors.append(f"grid.nx must be an even integer >= 4, got {g.nx}")
    if g.ny < 4 or g.ny % 2:
        errors.append(f"grid.ny must be an even integer >= 4, got {g.ny}")
    if g.lx <= 0 or g.ly <= 0:
        errors.append("grid.lx and grid.ly must be > 0")
    if cfg.ic.kind not in IC_KINDS:
        errors.append(f"ic.kind must be one of {IC_KINDS}, got {cfg.ic.kind!r}")
    if cfg.ic.amplitude < 0:
        errors.append("ic.amplitude must be >= 0")
    if cfg.ic.kind == "file" and not cfg.ic.file:
        errors.append("ic.file must name a snapshot path when ic.kind = file")
    if cfg.time.t_end < 1.0:
        errors.append(f"time.t_end must be >= 1, got {cfg.time.t_end:g}")
    if cfg.time.dt <= 0:
        errors.append("time.dt must be > 0")
    if cfg.time.stepper not in STEPPERS:
        errors.append(f"time.stepper must be one of {STEPPERS}, got {cfg.time.stepper!r}")
    if cfg.diag.cadence <= 0:
        errors.append("diag.cadence must be > 0")
    if cfg.diag.n < 0 or cfg.diag.eps <= 0:
        errors.append("diag.n must be >= 0 and diag.eps > 0")
    if not cfg.diag.fit_lo < cfg.diag.fit_hi:
        errors.append("diag.fit_lo must be < diag.fit_hi")
    if cfg.output.snapshot_cadence < 0:
        errors.append("output.snapshot_cadence must be >= 0")


def _parse_lines(text) -> list[tuple[int, str, str]]:
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    items = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError([f"line {lineno}: expected 'key = value', got {line.strip()!r}"])
        key, _, value = stripped.partition("=")
        items.append((lineno, key.strip(), value.strip()))
    return items


def parse_config(text) -> RunConfig:
    """Parse, apply defaults, and fully validate a run configuration."""
    cfg = RunConfig()
    errors: list[str] = []
    known = _known_keys()
    try:
        items = _parse_lines(text)
    except ConfigError:
        raise
    seen = set()
    for lineno, key, value in items:
        if key in seen:
            errors.append(f"line {lineno}: duplicate key {key!r}")
            continue
        seen.add(key)
        if key not in known:
            close = difflib.get_close_matches(key, known, n=1, cutoff=0.5)
            hint = f"; closest valid key: {close[0]!r}" if close else f"; valid keys: {', '.join(known)}"
            errors.append(f"line {lineno}: unknown key {key!r}{hint}")
            continue
        try:
            set_by_path(cfg, key, value)
        except (ValueError, KeyError) as exc:
            errors.append(f"line {lineno}: {key}: invalid value {value!r} ({exc})")
    _validate(cfg, errors)
    if errors:
        raise ConfigError(errors)
    return cfg


def config_echo(cfg: RunConfig) -> str:
    """Canonical text of every effective value (defaults included)."""
    lines = []
    for section, _cls in _SECTIONS.items():
        sub = getattr(cfg, section)
        for f in fields(sub):
            val = getattr(sub, f.name)
            if isinstance(val, float):
                val = format(val, ".17g")
            lines.append(f"{section}.{f.name} = {val}")
    lines.append(f"seed = {cfg.seed}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# sweeps
# ---------------------------------------------------------------------------


@dataclass
class SweepSpec:
    base: RunConfig
    axes: list[tuple[str, list]]  # (dotted key, values)
    parallelism: int = 1
    max_points: int = 64

    def points(self) -> list[dict]:
        """Cartesian product as a list of {key: value} assignments."""
        combos: list[dict] = [{}]
        for key, values in self.axes:
            combos = [dict(c, **{key: v}) for c in combos for v in values]
        return combos

    def config_for(self, point: dict) -> RunConfig:
        cfg = copy.deepcopy(self.base)
        for key, value in point.items():
            set_by_path(cfg, key, value)
        errors: list[str] = []
        _validate(cfg, errors)
        if errors:
            raise ConfigError(errors)
        return cfg


def parse_sweep(text) -> SweepSpec:
    """Sweep files: base-config keys plus ``sweep.<key> = v1, v2, ...`` axes."""
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    base_lines = []
    axes: list[tuple[str, list]] = []
    parallelism = 1
    max_points = 64
    errors: list[str] = []
    known = _known_keys()
    for lineno, key, value in _parse_lines(text):
        if key == "sweep.parallelism":
            parallelism = int(value)
            continue
        if key == "sweep.max_points":
            max_points = int(value)
            continue
        if key.startswith("sweep."):
            target = key[len("sweep."):]
            if target not in known:
                close = difflib.get_close_matches(target, known, n=1, cutoff=0.5)
                hint = f"; closest valid key: {close[0]!r}" if close else ""
                errors.append(f"line {lineno}: unknown sweep axis {target!r}{hint}")
                continue
            values = [v.strip() for v in value.split(",") if v.strip()]
            if not values:
                errors.append(f"line {lineno}: sweep axis {target!r} has no values")
                continue
            axes.append((target, values))
        else:
            base_lines.append(f"{key} = {value}")
    if errors:
        raise ConfigError(errors)
    base = parse_config("\n".join(base_lines))
    if not axes:
        raise ConfigError(["sweep file declares no sweep.<key> axes"])
    if parallelism < 1:
        raise ConfigError(["sweep.parallelism must be >= 1"])
    spec = SweepSpec(base, axes, parallelism, max_points)
    n_points = 1
    for _, vals in axes:
        n_points *= len(vals)
    if n_points > max_points:
        raise ConfigError(
            [f"sweep has {n_points} points, exceeding the cap of {max_points}"]
        )
    return spec
