"""Run configuration: sectioned ``key = value`` text with strict validation.

Keys may be written either under a ``[section]`` header or dotted
(``levy.r = 0.1``). Top-level keys are ``potential``, ``output_dir`` and
``emit_plot_data``. Unknown keys are errors.
"""
from __future__ import annotations

import dataclasses
import hashlib
import json
import math
from dataclasses import dataclass, field, fields

from .exceptions import ConfigError
from .potential import POTENTIALS


@dataclass(frozen=True)
class LevySection:
    r: float = 0.1
    R: float = 1.0e4
    nodes_per_decade: int = 32
    inner_decades: int = 1


@dataclass(frozen=True)
class LayerSection:
    half_width: float = 40.0
    count: int = 4096
    tol: float = 1e-10


@dataclass(frozen=True)
class CorrectorSection:
    L: float = 1.0
    tol: float = 1e-7


@dataclass(frozen=True)
class HullSection:
    delta: float = 0.1
    p0: float = 1.0
    L: float = 1.0
    n: int = 8
    tol: float = 1e-10
    points: int = 33


@dataclass(frozen=True)
class CellSection:
    p: float = 0.1
    L: float = 0.1
    horizon: float = 100.0
    p0: float = 1.0
    L0: float = 1.0
    deltas: tuple = (0.2, 0.1, 0.05)
    points_per_unit: float = 32.0
    dt_factor: float = 0.1
    drift_periods: float = 3.0
    burn_in: float = 0.2
    samples: int = 400
    workers: int = 1


@dataclass(frozen=True)
class ParticlesSection:
    count: int = 32
    spacing: float = 1.0
    L0: float = 1.0
    c0: float | None = None
    T: float = 1.0
    dt: float = 0.01
    wrap: bool = True
    images: int = 64


@dataclass(frozen=True)
class RunConfig:
    potential: str = "standard"
    output_dir: str = "orowan-out"
    emit_plot_data: bool = False
    levy: LevySection = field(default_factory=LevySection)
    layer: LayerSection = field(default_factory=LayerSection)
    corrector: CorrectorSection = field(default_factory=CorrectorSection)
    hull: HullSection = field(default_factory=HullSection)
    cell: CellSection = field(default_factory=CellSection)
    particles: ParticlesSection = field(default_factory=ParticlesSection)

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)

    def canonical_text(self) -> str:
        """Deterministic text form; parsing it gives back an equal config."""
        lines = [f'potential = "{self.potential}"', f'output_dir = "{self.output_dir}"',
                 f"emit_plot_data = {str(self.emit_plot_data).lower()}"]
        for sec in SECTIONS:
            lines.append(f"\n[{sec}]")
            for f in fields(getattr(self, sec)):
                lines.append(f"{f.name} = {_format(getattr(getattr(self, sec), f.name))}")
        return "\n".join(lines) + "\n"

    def digest(self, *sections: str) -> str:
        """Short hash of the given sections (all when empty) plus the potential label."""
        d = self.as_dict()
        keep = sections or SECTIONS
        payload = {"potential": self.potential, **{s: d[s] for s in keep}}
        text = json.dumps(payload, sort_keys=True, default=repr)
        return hashlib.sha256(text.encode()).hexdigest()[:16]


SECTIONS = ("levy", "layer", "corrector", "hull", "cell", "particles")
_TOP = ("potential", "output_dir", "emit_plot_data")


def _format(v) -> str:
    if v is None:
        return "none"
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, tuple):
        return ",".join(repr(float(x)) for x in v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _field_type(cls, name):
    hints = {f.name: f for f in fields(cls)}
    return hints[name].type if name in hints else None


def _parse_value(raw: str, ftype: str, key: str):
    raw = raw.strip()
    if len(raw) >= 2 and raw[0] == raw[-1] and raw[0] in "\"'":
        unquoted = raw[1:-1]
    else:
        unquoted = raw
    try:
        if ftype == "str":
            return unquoted
        if ftype == "bool":
            low = unquoted.lower()
            if low in ("true", "yes", "1", "on"):
                return True
            if low in ("false", "no", "0", "off"):
                return False
            raise ValueError(raw)
        if ftype == "int":
            v = float(unquoted)
            if v != int(v):
                raise ValueError(raw)
            return int(v)
        if ftype == "float":
            return float(unquoted)
        if ftype == "float | None":
            return None if unquoted.lower() in ("none", "") else float(unquoted)
        if ftype == "tuple":
            parts = [p for p in unquoted.strip("[]()").split(",") if p.strip()]
            return tuple(float(p) for p in parts)
    except ValueError:
        raise ConfigError(f"{key}: cannot parse {raw!r} as {ftype}") from None
    raise ConfigError(f"{key}: unsupported field type {ftype}")


def parse_config(text: str, overrides: dict | None = None) -> RunConfig:
    """Parse and validate configuration text; ``overrides`` maps dotted keys to raw strings."""
    values: dict[str, dict] = {s: {} for s in SECTIONS}
    top: dict = {}
    section = None
    entries = []
    for lineno, line in enumerate(text.splitlines(), 1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if stripped.startswith("[") and stripped.endswith("]"):
            section = stripped[1:-1].strip()
            if section not in SECTIONS:
                raise ConfigError(f"line {lineno}: unknown section [{section}]")
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {stripped!r}")
        key, raw = (s.strip() for s in stripped.split("=", 1))
        if "." not in key and section is not None and key not in _TOP:
            key = f"{section}.{key}"
        entries.append((f"line {lineno}", key, raw))
    entries += [("override", k, str(v)) for k, v in (overrides or {}).items()]

    for where, key, raw in entries:
        if "." in key:
            sec, name = key.split(".", 1)
            if sec not in SECTIONS:
                raise ConfigError(f"{where}: unknown section in key {key!r}")
            cls = type(getattr(RunConfig(), sec))
            ftype = _field_type(cls, name)
            if ftype is None:
                raise ConfigError(f"{where}: unknown key {key!r}")
            values[sec][name] = _parse_value(raw, ftype, f"{where}: {key}")
        else:
            if key not in _TOP:
                raise ConfigError(f"{where}: unknown key {key!r}")
            top[key] = _parse_value(raw, _field_type(RunConfig, key), f"{where}: {key}")

    sections = {s: type(getattr(RunConfig(), s))(**values[s]) for s in SECTIONS}
    cfg = RunConfig(**top, **sections)
    validate_config(cfg)
    return cfg


def _require(cond, message):
    if not cond:
        raise ConfigError(message)


def validate_config(cfg: RunConfig) -> None:
    """Check every block against the preconditions of the module that consumes it."""
    _require(cfg.potential in POTENTIALS,
             f"potential: unknown label {cfg.potential!r} (known: {', '.join(sorted(POTENTIALS))})")
    _require(bool(cfg.output_dir), "output_dir must be nonempty")

    lv = cfg.levy
    _require(0 < lv.r < 1, f"levy.r = {lv.r}: inner_radius must satisfy 0 < r < 1 (positivity)")
    _require(lv.R >= 1, f"levy.R = {lv.R}: outer_radius must be >= 1")
    _require(lv.nodes_per_decade >= 8, "levy.nodes_per_decade must be >= 8")
    _require(lv.inner_decades >= 1, "levy.inner_decades must be >= 1")

    ly = cfg.layer
    _require(ly.half_width >= 20, f"layer.half_width = {ly.half_width}: layer domain must be >= 20")
    _require(ly.count >= 512 and ly.count % 2 == 0, "layer.count must be an even integer >= 512")
    _require(ly.tol > 0, "layer.tol must be positive")

    _require(math.isfinite(cfg.corrector.L), "corrector.L must be finite")
    _require(cfg.corrector.tol > 0, "corrector.tol must be positive")

    h = cfg.hull
    _require(h.delta > 0, "hull.delta must be positive")
    _require(h.p0 != 0, "hull.p0 must be nonzero")
    _require(1.0 / (h.delta * abs(h.p0)) >= 2.0, "hull: ansatz requires 1/(delta |p0|) >= 2")
    _require(h.n >= 1, "hull.n must be >= 1")
    _require(h.tol > 0, "hull.tol must be positive")
    _require(h.points >= 2, "hull.points must be >= 2")

    c = cfg.cell
    _require(c.p != 0 and c.p0 != 0, "cell: p and p0 must be nonzero")
    _require(c.horizon > 0, "cell.horizon must be positive")
    _require(len(c.deltas) >= 1 and all(d > 0 for d in c.deltas), "cell.deltas must be positive")
    _require(all(a > b for a, b in zip(c.deltas, c.deltas[1:])),
             "cell.deltas must be sorted in strictly descending order")
    _require(c.points_per_unit > 0 and c.dt_factor > 0 and c.drift_periods > 0,
             "cell: resolution parameters must be positive")
    _require(0 <= c.burn_in < 1, "cell.burn_in must lie in [0, 1)")
    _require(c.samples >= 10, "cell.samples must be >= 10")
    _require(c.workers >= 1, "cell.workers must be >= 1")

    pt = cfg.particles
    _require(pt.count >= 1, "particles.count must be >= 1")
    _require(pt.spacing > 0, "particles.spacing must be positive")
    _require(pt.T > 0 and pt.dt > 0, "particles: T and dt must be positive")
    _require(pt.c0 is None or math.isfinite(pt.c0), "particles.c0 must be finite")
    _require(pt.images >= 1, "particles.images must be >= 1")
