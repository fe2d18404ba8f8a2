"""Receive side: sensor power, RF-to-DC conversion and DC combining."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .geometry import ArraySpec

__all__ = [
    "EfficiencyModel",
    "ReceiverReport",
    "sensor_power",
    "combined_dc_power",
    "transfer_efficiency",
    "DEFAULT_EFFICIENCY",
]

DEFAULT_EFFICIENCY = 0.5


@dataclass(frozen=True)
class EfficiencyModel:
    """RF-to-DC efficiency versus RF input power.

    With ``powers``/``efficiencies`` set, the efficiency is interpolated
    linearly between breakpoints and clamped to the end values outside them.
    Otherwise ``constant`` is used for every input.
    """

    powers: tuple[float, ...] = ()
    efficiencies: tuple[float, ...] = ()
    constant: float = DEFAULT_EFFICIENCY

    def __post_init__(self):
        p = tuple(float(v) for v in self.powers)
        e = tuple(float(v) for v in self.efficiencies)
        if len(p) != len(e):
            raise ValueError("powers and efficiencies must have the same length")
        if any(b <= a for a, b in zip(p, p[1:])):
            raise ValueError("breakpoint powers must be strictly increasing")
        if any(not 0 <= v <= 1 for v in e) or not 0 <= self.constant <= 1:
            raise ValueError("efficiencies must lie in [0, 1]")
        object.__setattr__(self, "powers", p)
        object.__setattr__(self, "efficiencies", e)

    @classmethod
    def from_csv(cls, path) -> "EfficiencyModel":
        """Load a two-column ``watts,fraction`` curve with a header row."""
        path = Path(path)
        with path.open(newline="") as f:
            rows = list(csv.reader(f))
        if not rows:
            raise ValueError(f"{path}: empty efficiency curve")
        powers, effs = [], []
        for lineno, row in enumerate(rows[1:], start=2):
            if not row or not "".join(row).strip():
                continue
            if len(row) != 2:
                raise ValueError(f"{path}:{lineno}: expected 2 columns, got {len(row)}")
            try:
                powers.append(float(row[0]))
                effs.append(float(row[1]))
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from None
        if not powers:
            raise ValueError(f"{path}: no data rows after header")
        return cls(tuple(powers), tuple(effs))

    def __call__(self, rf_power):
        rf_power = np.asarray(rf_power, dtype=float)
        if not self.powers:
            return np.full_like(rf_power, self.constant)
        eff = np.interp(rf_power, self.powers, self.efficiencies)
        return np.clip(eff, 0.0, 1.0)


@dataclass(frozen=True)
class ReceiverReport:
    per_element_rf: np.ndarray
    per_element_dc: np.ndarray
    combined_dc: float
    sensor_power: float


def sensor_power(y) -> float:
    """Power in watts carried by a power wave, |y|^2 / 2."""
    return float(abs(complex(y)) ** 2 / 2)


def combined_dc_power(y, model: EfficiencyModel | None = None, anchor_index: int = 1) -> ReceiverReport:
    """Rectify each element's RF power and sum the DC outputs in parallel.

    ``anchor_index`` (1-based) selects which element reports the sensor power.
    """
    model = model or EfficiencyModel()
    y = np.asarray(y, dtype=complex).reshape(-1)
    rf = np.abs(y) ** 2 / 2
    dc = model(rf) * rf
    return ReceiverReport(rf, dc, float(dc.sum()), float(rf[anchor_index - 1]))


def transfer_efficiency(p_dc: float, tx: ArraySpec, mask=None) -> float:
    """DC output over the RF power radiated by the active transmit elements."""
    active = tx.n_elements if mask is None else int(np.count_nonzero(mask))
    if active == 0:
        raise ValueError("transfer efficiency is undefined with no active transmit elements")
    if not tx.per_element_power > 0:
        raise ValueError("transfer efficiency needs a positive per-element power")
    return p_dc / (tx.per_element_power * active)
