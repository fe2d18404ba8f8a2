"""Scenario configuration files.

Scenarios are INI-style key/value files. Every key is checked against
:data:`SCHEMA`; problems are reported with the file name and line number.
Angles are given in degrees here and converted to radians on load.
"""

from __future__ import annotations

import configparser
import math
import re
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

import numpy as np

from .channel import PropagationContext, fraunhofer_distance
from .control import Codebook, generate_codebook
from .geometry import (
    ArrayGeometry,
    ArraySpec,
    EulerAngles,
    ReceiverPose,
    build_planar_array,
    relative_to_anchor,
    spherical_to_cartesian,
)
from .rectenna import DEFAULT_EFFICIENCY, EfficiencyModel
from .scanner import hardware_constraints

__all__ = ["ConfigError", "ScenarioConfig", "SCHEMA", "load_config", "load_preset", "preset_names", "load_mask"]


class ConfigError(ValueError):
    """Invalid or incomplete scenario configuration."""


REQUIRED = object()


def _positive(v):
    return v > 0


def _non_negative(v):
    return v >= 0


def _fraction(v):
    return 0 <= v <= 1


def _width(v):
    return 0 < v <= 2


# section -> key -> (type, default, check, description)
SCHEMA: dict[str, dict[str, tuple]] = {
    "scenario": {
        "frequency_hz": (float, REQUIRED, _positive, "carrier frequency"),
        "model": (str, "exact", lambda v: v in ("exact", "decomposed"), "channel model: exact | decomposed"),
        "quantize_deg": (float, None, _positive, "phase shifter LSB in degrees (off when absent)"),
        "mask": (str, None, None, "transmit element mask file"),
        "efficiency_csv": (str, None, None, "rectifier efficiency curve (watts,fraction)"),
        "efficiency": (float, DEFAULT_EFFICIENCY, _fraction, "constant rectifier efficiency"),
    },
    "tx": {
        "n_rows": (int, REQUIRED, _positive, "element rows"),
        "n_cols": (int, REQUIRED, _positive, "element columns"),
        "row_spacing_m": (float, REQUIRED, _positive, "row pitch"),
        "col_spacing_m": (float, REQUIRED, _positive, "column pitch"),
        "element_gain": (float, 1.0, _positive, "linear element gain"),
        "per_element_power_w": (float, REQUIRED, _positive, "power radiated per element"),
        "aperture_x_m": (float, None, _positive, "physical aperture width"),
        "aperture_y_m": (float, None, _positive, "physical aperture height"),
        "max_dimension_m": (float, None, _positive, "aperture diagonal"),
        "element_extent_m": (float, None, _non_negative, "element size added to the layout extent"),
    },
    "rx": {
        "n_rows": (int, REQUIRED, _positive, "element rows"),
        "n_cols": (int, REQUIRED, _positive, "element columns"),
        "row_spacing_m": (float, REQUIRED, _positive, "row pitch"),
        "col_spacing_m": (float, REQUIRED, _positive, "column pitch"),
        "element_gain": (float, 1.0, _positive, "linear element gain"),
    },
    "receiver": {
        "x_m": (float, None, None, "Cartesian position"),
        "y_m": (float, None, None, "Cartesian position"),
        "z_m": (float, None, _non_negative, "Cartesian position"),
        "r_m": (float, None, _positive, "spherical radius"),
        "theta_deg": (float, None, lambda v: -90 <= v <= 90, "spherical elevation from +z"),
        "phi_deg": (float, None, lambda v: -180 <= v <= 180, "spherical azimuth"),
        "reference": (str, "anchor", lambda v: v in ("anchor", "center"), "point placed at the position: anchor | center"),
        "alpha_deg": (float, 0.0, math.isfinite, "Euler angle about x"),
        "beta_deg": (float, 0.0, math.isfinite, "Euler angle about y'"),
        "gamma_deg": (float, 0.0, math.isfinite, "Euler angle about z''"),
    },
    "codebook": {
        "delta_u": (float, 2.0, _width, "u scan width"),
        "delta_v": (float, 2.0, _width, "v scan width"),
        "upsilon_d": (int, REQUIRED, _positive, "number of focal distances"),
        "r_b_m": (float, None, _positive, "override of the near/far boundary"),
    },
}

_SECTION_RE = re.compile(r"^\s*\[([^\]]+)\]")
_KEY_RE = re.compile(r"^\s*([^\s=:#;][^=:]*?)\s*[=:]")


def _line_index(text: str) -> dict:
    index = {}
    section = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        m = _SECTION_RE.match(line)
        if m:
            section = m.group(1).strip()
            index.setdefault((section, None), lineno)
            continue
        m = _KEY_RE.match(line)
        if m and section is not None:
            index.setdefault((section, m.group(1).strip().lower()), lineno)
    return index


def _convert(kind, raw: str):
    if kind is int:
        value = float(raw)
        if not value.is_integer():
            raise ValueError(f"expected an integer, got {raw!r}")
        return int(value)
    if kind is float:
        value = float(raw)
        if not math.isfinite(value):
            raise ValueError(f"expected a finite number, got {raw!r}")
        return value
    return raw.strip()


@dataclass(frozen=True)
class ScenarioConfig:
    """Validated scenario; values are plain numbers in SI units."""

    values: dict
    base_dir: Path = field(default_factory=Path.cwd)
    source: str = "<config>"

    def get(self, section: str, key: str):
        return self.values[section][key]

    def with_overrides(self, section: str, **kv) -> "ScenarioConfig":
        values = {s: dict(d) for s, d in self.values.items()}
        values[section].update(kv)
        return replace(self, values=values)

    @property
    def model(self) -> str:
        return self.get("scenario", "model")

    def context(self) -> PropagationContext:
        return PropagationContext(
            self.get("scenario", "frequency_hz"), self.get("tx", "element_gain"), self.get("rx", "element_gain")
        )

    def tx_spec(self) -> ArraySpec:
        t = self.values["tx"]
        return ArraySpec(t["n_rows"], t["n_cols"], t["row_spacing_m"], t["col_spacing_m"],
                         t["element_gain"], t["per_element_power_w"])

    def rx_spec(self) -> ArraySpec:
        r = self.values["rx"]
        return ArraySpec(r["n_rows"], r["n_cols"], r["row_spacing_m"], r["col_spacing_m"], r["element_gain"])

    def tx_geometry(self) -> ArrayGeometry:
        return build_planar_array(self.tx_spec())

    def rx_local(self) -> ArrayGeometry:
        return relative_to_anchor(build_planar_array(self.rx_spec()))

    def attitude(self) -> EulerAngles:
        r = self.values["receiver"]
        return EulerAngles.from_degrees(r["alpha_deg"], r["beta_deg"], r["gamma_deg"])

    def reference_point(self) -> np.ndarray:
        """Configured receiver position as a Cartesian point."""
        r = self.values["receiver"]
        if r["r_m"] is not None:
            return spherical_to_cartesian(r["r_m"], math.radians(r["theta_deg"]), math.radians(r["phi_deg"]))
        return np.array([r["x_m"], r["y_m"], r["z_m"]], dtype=float)

    def pose(self, point=None) -> ReceiverPose:
        """Receiver pose with the reference point at ``point`` (default: as configured)."""
        point = self.reference_point() if point is None else np.asarray(point, dtype=float)
        if self.get("receiver", "reference") == "center":
            return ReceiverPose.from_center(point, self.rx_local(), self.attitude())
        return ReceiverPose(point, self.attitude())

    def fraunhofer(self) -> float:
        t = self.values["tx"]
        aperture = None
        if t["aperture_x_m"] is not None:
            aperture = (t["aperture_x_m"], t["aperture_y_m"])
        return fraunhofer_distance(
            self.context(), self.tx_geometry(), element_extent=t["element_extent_m"],
            aperture=aperture, max_dimension=t["max_dimension_m"],
        )

    def r_b(self) -> float:
        override = self.get("codebook", "r_b_m")
        return self.fraunhofer() if override is None else override

    def codebook(self) -> Codebook:
        c = self.values["codebook"]
        return generate_codebook(self.tx_spec(), self.r_b(), c["upsilon_d"], c["delta_u"], c["delta_v"])

    def lsb(self) -> float | None:
        q = self.get("scenario", "quantize_deg")
        return None if q is None else math.radians(q)

    def mask(self) -> np.ndarray | None:
        path = self.get("scenario", "mask")
        if path is None:
            return None
        return load_mask(self.base_dir / path, self.tx_spec().n_elements)

    def transform(self):
        return hardware_constraints(self.lsb(), self.mask())

    def efficiency_model(self) -> EfficiencyModel:
        path = self.get("scenario", "efficiency_csv")
        if path is not None:
            try:
                return EfficiencyModel.from_csv(self.base_dir / path)
            except (OSError, ValueError) as exc:
                raise ConfigError(f"{self.source}: efficiency_csv: {exc}") from None
        return EfficiencyModel(constant=self.get("scenario", "efficiency"))


def load_mask(path, n_elements: int) -> np.ndarray:
    """Read a 0/1 element mask (row-major, any whitespace or commas, '#' comments)."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read mask file {path}: {exc}") from None
    tokens = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        for tok in line.split("#", 1)[0].replace(",", " ").split():
            if tok not in ("0", "1"):
                raise ConfigError(f"{path}:{lineno}: mask entries must be 0 or 1, got {tok!r}")
            tokens.append(tok == "1")
    if len(tokens) != n_elements:
        raise ConfigError(f"{path}: mask has {len(tokens)} entries, expected {n_elements}")
    return np.array(tokens, dtype=bool)


def parse_config(text: str, source: str = "<config>", base_dir: Path | None = None) -> ScenarioConfig:
    lines = _line_index(text)
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {exc}") from None

    def where(section, key=None):
        lineno = lines.get((section, key)) or lines.get((section, None))
        return f"{source}:{lineno}" if lineno else source

    errors = []
    values: dict[str, dict] = {}
    for section in parser.sections():
        if section not in SCHEMA:
            errors.append(f"{where(section)}: unknown section [{section}]")
            continue
        for key in parser[section]:
            if key not in SCHEMA[section]:
                errors.append(f"{where(section, key)}: unknown key '{key}' in [{section}]")
    missing = []
    for section, keys in SCHEMA.items():
        values[section] = {}
        present = parser[section] if parser.has_section(section) else {}
        for key, (kind, default, check, _desc) in keys.items():
            if key in present:
                raw = present[key]
                try:
                    value = _convert(kind, raw)
                except ValueError as exc:
                    errors.append(f"{where(section, key)}: {section}.{key}: {exc}")
                    continue
                if check is not None and not check(value):
                    errors.append(f"{where(section, key)}: {section}.{key} = {raw!r} is out of range")
                    continue
                values[section][key] = value
            elif default is REQUIRED:
                missing.append(f"{section}.{key}")
            else:
                values[section][key] = default
    if missing:
        errors.append(f"{source}: missing required fields: {', '.join(missing)}")

    rcv = values["receiver"]
    cart = [rcv.get(k) is not None for k in ("x_m", "y_m", "z_m")]
    sph = [rcv.get(k) is not None for k in ("r_m", "theta_deg", "phi_deg")]
    if any(cart) and any(sph):
        errors.append(f"{where('receiver')}: give either x_m/y_m/z_m or r_m/theta_deg/phi_deg, not both")
    elif not (all(cart) or all(sph)):
        errors.append(
            f"{where('receiver') if parser.has_section('receiver') else source}: "
            "receiver position needs all of x_m, y_m, z_m or all of r_m, theta_deg, phi_deg"
        )
    tx = values["tx"]
    if (tx.get("aperture_x_m") is None) != (tx.get("aperture_y_m") is None):
        errors.append(f"{where('tx')}: aperture_x_m and aperture_y_m must be given together")

    if errors:
        raise ConfigError("\n".join(errors))
    cfg = ScenarioConfig(values, base_dir or Path.cwd(), source)
    try:
        cfg.pose()
        cfg.tx_geometry()
        cfg.rx_local()
    except ValueError as exc:
        raise ConfigError(f"{source}: {exc}") from None
    return cfg


def load_config(path) -> ScenarioConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config(text, str(path), path.parent)


def preset_names() -> list[str]:
    root = resources.files("rfwpt") / "presets"
    return sorted(p.name[:-4] for p in root.iterdir() if p.name.endswith(".cfg"))


def load_preset(name: str) -> ScenarioConfig:
    name = name[:-4] if name.endswith(".cfg") else name
    if name not in preset_names():
        raise ConfigError(f"unknown preset {name!r}; available: {', '.join(preset_names())}")
    text = (resources.files("rfwpt") / "presets" / f"{name}.cfg").read_text()
    return parse_config(text, f"preset:{name}")
