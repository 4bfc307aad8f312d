"""Run configuration: a TOML document with one table per block.

Units are part of the key names (``_um`` micrometres, ``_ghz``, ``_hz``,
``_mT``, ``_nT``) and are converted to SI only when model objects are built,
so a parsed configuration serialises back to the same document. Every key is
optional; missing keys take the defaults shown by ``mwsense`` with an empty
config: a 5 um rubidium cloud 5 um below a 6.8354 GHz resonator.

================  =========================  =====================================
block             key                        meaning
================  =========================  =====================================
geometry          strip_width_um             centre conductor width
geometry          gap_um                     slot width
geometry          ground_width_um            ground electrode width
geometry          substrate_thickness_um     substrate thickness
geometry          eps_r                      substrate relative permittivity
mode              frequency_ghz              resonance frequency (not angular)
mode              quality_factor             quality factor
mode              transverse_index           transverse mode number n >= 1
condensate        atom_number                N0
condensate        tf_radius_um               Thomas-Fermi radius, or "auto"
condensate        trap_frequencies_hz        [fx, fy, fz] (y along gravity), or []
condensate        b_offset_mT                offset field
sensing           distance_um                cloud centre below the chip surface
sensing           detection_center_um        detection cylinder centre below cloud
sensing           detection_height_um        detection cylinder height
sensing           detection_radius_um        cylinder radius, or "auto" (3 a)
sensing           b_x_nT                     drive amplitude, or "attenuated"
sensing           enforce_distance           reject clouds closer than a + 1 um
sensing           radius_report              also report counts at 2a, 3a, 4a
quadrature        rel_tol, abs_tol           outer tolerances (inner levels tighter)
quadrature        max_subdivisions           leaves per adaptive integral
quadrature        tail_cutoff_strategy       semi-infinite strategy
quadrature        panel_width                wave-number panel width (1/a units)
quadrature        upper_limit                cutoff for "fixed_upper_limit"
quadrature        spectral_method            "reduced" or "nested"
output            directory                  output directory ("" = stdout)
output            format                     "csv" or "json"
================  =========================  =====================================
"""

from __future__ import annotations

import math
import sys
from dataclasses import asdict, dataclass, field, fields, replace

import tomli_w

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .condensate import OVERLAP_METHODS, CondensateParams
from .constants import DEFAULT_CONSTANTS, PhysicalConstants, hz_to_angular
from .cpw import CpwGeometry, CpwMode, b_at_condensate, make_mode
from .quadrature import TAIL_STRATEGIES, QuadratureSpec
from .sensing import DetectionVolume

AUTO = "auto"
ATTENUATED = "attenuated"
FORMATS = ("csv", "json")


class ConfigError(ValueError):
    """Invalid configuration; ``key`` is the dotted name of the offending entry."""

    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}" if key else message)
        self.key = key


def _positive(v):
    return v > 0


def _at_least_one(v):
    return v >= 1


def _non_negative(v):
    return v >= 0


@dataclass(frozen=True)
class GeometryConfig:
    strip_width_um: float = 15.0
    gap_um: float = 10.0
    ground_width_um: float = 7.5
    substrate_thickness_um: float = 500.0
    eps_r: float = 11.5

    def build(self) -> CpwGeometry:
        return CpwGeometry(self.strip_width_um * 1e-6, self.gap_um * 1e-6, self.ground_width_um * 1e-6,
                           self.substrate_thickness_um * 1e-6, self.eps_r)


@dataclass(frozen=True)
class ModeConfig:
    frequency_ghz: float = 6.8354
    quality_factor: float = 1.72e6
    transverse_index: int = 1


@dataclass(frozen=True)
class CondensateConfig:
    atom_number: float = 2e4
    tf_radius_um: float | str = 5.0
    trap_frequencies_hz: tuple[float, ...] = (84.0, 84.0, 84.0)
    b_offset_mT: float = 0.1

    def build(self) -> CondensateParams:
        radius = None if self.tf_radius_um == AUTO else self.tf_radius_um * 1e-6
        freqs = tuple(hz_to_angular(f) for f in self.trap_frequencies_hz) or None
        return CondensateParams(self.atom_number, radius, freqs, self.b_offset_mT * 1e-3)


@dataclass(frozen=True)
class SensingConfig:
    distance_um: float = 5.0
    detection_center_um: float = 65.0
    detection_height_um: float = 60.0
    detection_radius_um: float | str = AUTO
    b_x_nT: float | str = 2.56
    enforce_distance: bool = True
    radius_report: bool = True

    def detection(self) -> DetectionVolume:
        radius = None if self.detection_radius_um == AUTO else self.detection_radius_um * 1e-6
        return DetectionVolume(self.detection_center_um * 1e-6, self.detection_height_um * 1e-6, radius)


@dataclass(frozen=True)
class QuadratureConfig:
    rel_tol: float = 1e-4
    abs_tol: float = 1e-15
    max_subdivisions: int = 2000
    tail_cutoff_strategy: str = "successive_interval_convergence"
    panel_width: float = math.pi
    upper_limit: float = 500.0
    spectral_method: str = "reduced"

    def build(self) -> QuadratureSpec:
        return QuadratureSpec(rel_tol=self.rel_tol, abs_tol=self.abs_tol,
                              max_subdivisions=self.max_subdivisions,
                              tail_cutoff_strategy=self.tail_cutoff_strategy,
                              panel_width=self.panel_width, upper_limit=self.upper_limit)


@dataclass(frozen=True)
class OutputConfig:
    directory: str = ""
    format: str = "csv"


# per-key checks: (predicate, description); "auto"-style strings are handled by _coerce
_CHECKS = {
    "geometry": {"strip_width_um": (_positive, "must be positive"), "gap_um": (_positive, "must be positive"),
                 "ground_width_um": (_positive, "must be positive"),
                 "substrate_thickness_um": (_positive, "must be positive"),
                 "eps_r": (_at_least_one, "must be >= 1")},
    "mode": {"frequency_ghz": (_positive, "must be positive"), "quality_factor": (_positive, "must be positive"),
             "transverse_index": (_at_least_one, "must be >= 1")},
    "condensate": {"atom_number": (_at_least_one, "must be >= 1"), "tf_radius_um": (_positive, "must be positive"),
                   "trap_frequencies_hz": (_positive, "entries must be positive"),
                   "b_offset_mT": (_non_negative, "must be non-negative")},
    "sensing": {"distance_um": (_non_negative, "must be non-negative"),
                "detection_center_um": (_positive, "must be positive"),
                "detection_height_um": (_positive, "must be positive"),
                "detection_radius_um": (_positive, "must be positive"),
                "b_x_nT": (_non_negative, "must be non-negative")},
    "quadrature": {"rel_tol": (_positive, "must be positive"), "abs_tol": (_positive, "must be positive"),
                   "max_subdivisions": (lambda v: v >= 8, "must be >= 8"),
                   "panel_width": (_positive, "must be positive"), "upper_limit": (_positive, "must be positive")},
    "output": {},
}
_KEYWORDS = {
    ("condensate", "tf_radius_um"): (AUTO,),
    ("sensing", "detection_radius_um"): (AUTO,),
    ("sensing", "b_x_nT"): (ATTENUATED,),
    ("quadrature", "tail_cutoff_strategy"): TAIL_STRATEGIES,
    ("quadrature", "spectral_method"): OVERLAP_METHODS,
    ("output", "format"): FORMATS,
}


@dataclass(frozen=True)
class RunConfig:
    geometry: GeometryConfig = field(default_factory=GeometryConfig)
    mode: ModeConfig = field(default_factory=ModeConfig)
    condensate: CondensateConfig = field(default_factory=CondensateConfig)
    sensing: SensingConfig = field(default_factory=SensingConfig)
    quadrature: QuadratureConfig = field(default_factory=QuadratureConfig)
    output: OutputConfig = field(default_factory=OutputConfig)

    def build_geometry(self) -> CpwGeometry:
        return self.geometry.build()

    def build_mode(self, constants: PhysicalConstants = DEFAULT_CONSTANTS) -> CpwMode:
        return make_mode(self.build_geometry(), hz_to_angular(self.mode.frequency_ghz * 1e9),
                         self.mode.quality_factor, self.mode.transverse_index, constants)

    def drive_field(self, constants: PhysicalConstants = DEFAULT_CONSTANTS) -> float:
        """B_x at the cloud in tesla."""
        if self.sensing.b_x_nT == ATTENUATED:
            return b_at_condensate(self.build_geometry(), self.build_mode(constants),
                                   self.sensing.distance_um * 1e-6, constants)
        return self.sensing.b_x_nT * 1e-9

    def to_dict(self) -> dict:
        out = {}
        for block in fields(self):
            values = asdict(getattr(self, block.name))
            if "trap_frequencies_hz" in values:
                values["trap_frequencies_hz"] = list(values["trap_frequencies_hz"])
            out[block.name] = values
        return out


_BLOCK_TYPES = {f.name: f.default_factory for f in fields(RunConfig)}


def _coerce(block: str, key: str, value, default):
    name = f"{block}.{key}"
    keywords = _KEYWORDS.get((block, key), ())
    text_only = isinstance(default, str) and default not in (AUTO, ATTENUATED)
    if isinstance(value, str):
        if value in keywords or (block, key) == ("output", "directory"):
            return value
        expected = ", ".join(repr(k) for k in keywords) if text_only else "a number"
        if keywords and not text_only:
            expected += f" or {keywords[0]!r}"
        raise ConfigError(name, f"unrecognised value {value!r} (expected {expected})")
    if text_only:
        raise ConfigError(name, f"expected a string, got {value!r}")
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigError(name, f"expected true or false, got {value!r}")
        return value
    if isinstance(default, tuple):
        if not isinstance(value, list) or not all(
                isinstance(v, (int, float)) and not isinstance(v, bool) for v in value):
            raise ConfigError(name, "expected a list of numbers")
        if len(value) not in (0, 3):
            raise ConfigError(name, "expected three frequencies or an empty list")
        value = tuple(float(v) for v in value)
        items = value
    elif isinstance(default, int):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(name, f"expected an integer, got {value!r}")
        items = (value,)
    else:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(name, f"expected a number, got {value!r}")
        value = float(value)
        items = (value,)
    if not all(math.isfinite(v) for v in items):
        raise ConfigError(name, "must be finite")
    check = _CHECKS.get(block, {}).get(key)
    if check is not None and not all(check[0](v) for v in items):
        raise ConfigError(name, f"{check[1]}, got {value!r}")
    return value


def from_dict(doc: dict) -> RunConfig:
    """Validate a decoded document and fill in defaults."""
    blocks = {}
    for block, table in doc.items():
        if block not in _BLOCK_TYPES:
            raise ConfigError(block, "unknown block")
        if not isinstance(table, dict):
            raise ConfigError(block, "expected a table")
        defaults = _BLOCK_TYPES[block]()
        known = {f.name: getattr(defaults, f.name) for f in fields(defaults)}
        values = {}
        for key, value in table.items():
            if key not in known:
                raise ConfigError(f"{block}.{key}", "unknown key")
            values[key] = _coerce(block, key, value, known[key])
        blocks[block] = replace(defaults, **values)
    cfg = RunConfig(**blocks)
    _cross_validate(cfg)
    return cfg


def _cross_validate(cfg: RunConfig) -> None:
    c = cfg.condensate
    if c.tf_radius_um == AUTO and not c.trap_frequencies_hz:
        raise ConfigError("condensate.tf_radius_um", "need a radius or trap frequencies")
    checks = (("geometry", cfg.geometry.build), ("condensate", c.build),
              ("sensing", cfg.sensing.detection), ("quadrature", cfg.quadrature.build))
    for block, build in checks:
        try:
            build()
        except ValueError as exc:
            raise ConfigError(block, str(exc)) from exc


def parse_config(text: str) -> RunConfig:
    """Parse a TOML document; an empty document gives the default configuration."""
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        # the decoder message carries line and column
        raise ConfigError("", f"not valid TOML: {exc}") from exc
    return from_dict(doc)


def load_config(path) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


def dump_config(cfg: RunConfig) -> str:
    return tomli_w.dumps(cfg.to_dict())


def apply_overrides(cfg: RunConfig, overrides) -> RunConfig:
    """Apply ``KEY=VAL`` strings; bare keys refer to the quadrature block."""
    doc = cfg.to_dict()
    for item in overrides:
        key, sep, raw = item.partition("=")
        if not sep:
            raise ConfigError(key, "override must look like KEY=VALUE")
        block, _, name = key.strip().rpartition(".")
        block = block or "quadrature"
        try:
            value = tomllib.loads(f"v = {raw.strip()}")["v"]
        except tomllib.TOMLDecodeError:
            value = raw.strip()
        doc.setdefault(block, {})[name] = value
    return from_dict(doc)
