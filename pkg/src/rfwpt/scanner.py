"""Two-phase beam scanning.

Phase one sweeps the far-field u-v codebook and keeps the direction with the
highest sensor power. Phase two keeps that direction and sweeps the focal
distance over the near-field grid. Measurements go through a
:class:`PowerProbe`, so the same loop drives a simulation or real hardware.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Protocol, runtime_checkable

import numpy as np

from .channel import (
    ChannelMatrix,
    PropagationContext,
    channel_gain_decomposed,
    channel_gain_exact,
    received_waves,
)
from .control import (
    Codebook,
    Excitation,
    _check_lsb,
    apply_element_mask,
    far_field_excitation,
    near_field_excitation,
    quantize_phases,
)
from .geometry import ArrayGeometry, DirectionUV, ReceiverPose, receiver_global_positions
from .rectenna import sensor_power

__all__ = [
    "PowerProbe",
    "SimulatedProbe",
    "ScanOutcome",
    "simulated_probe",
    "hardware_constraints",
    "run_far_scan",
    "run_near_scan",
    "beam_scan",
]


@runtime_checkable
class PowerProbe(Protocol):
    def measure(self, x: Excitation) -> float:
        """Sensor-antenna power in watts for excitation ``x``."""


class SimulatedProbe:
    """Free-space probe reading the anchor element of a simulated receiver.

    ``call_count`` counts measurements so scans can be audited.
    """

    def __init__(self, channel: ChannelMatrix, anchor_index: int):
        self.channel = channel
        self.anchor_index = anchor_index
        self._anchor_gains = channel.gains[:, anchor_index - 1]
        self.call_count = 0

    def measure(self, x: Excitation) -> float:
        waves = x.waves
        if waves.shape != self._anchor_gains.shape:
            raise ValueError(
                f"excitation has {waves.size} elements, channel expects {self._anchor_gains.size}"
            )
        self.call_count += 1
        return sensor_power(waves @ self._anchor_gains)

    def receive(self, x: Excitation) -> np.ndarray:
        """Power waves at every receive element (does not count as a probe call)."""
        return received_waves(self.channel, x)


def simulated_probe(
    ctx: PropagationContext,
    tx: ArrayGeometry,
    pose: ReceiverPose,
    rx_local: ArrayGeometry,
    model: str = "exact",
) -> SimulatedProbe:
    if model == "exact":
        H = channel_gain_exact(ctx, tx, receiver_global_positions(pose, rx_local))
    elif model == "decomposed":
        H = channel_gain_decomposed(ctx, tx, pose, rx_local)
    else:
        raise ValueError(f"unknown channel model {model!r}; use 'exact' or 'decomposed'")
    return SimulatedProbe(H, rx_local.anchor_index)


Transform = Callable[[Excitation], Excitation]


def hardware_constraints(lsb: float | None = None, mask=None) -> Transform | None:
    """Excitation transform emulating a quantized shifter and/or element switches."""
    if lsb is None and mask is None:
        return None
    if lsb is not None:
        _check_lsb(lsb)

    def apply(x: Excitation) -> Excitation:
        if lsb is not None:
            x = quantize_phases(x, lsb)
        if mask is not None:
            x = apply_element_mask(x, mask)
        return x

    return apply


@dataclass(frozen=True)
class ScanOutcome:
    far_powers: tuple[tuple[int, float | None], ...]
    k_star: int
    xi_opt: DirectionUV
    near_powers: tuple[tuple[int, float], ...]
    i_star: int
    r_opt: float
    final_excitation: Excitation
    far_excitation: Excitation
    probe_call_count: int

    @property
    def far_best(self) -> float:
        return self.far_powers[self.k_star - 1][1]

    @property
    def near_best(self) -> float:
        return self.near_powers[self.i_star - 1][1]

    @property
    def improvement_db(self) -> float:
        """Gain of the near-field phase over the best far-field beam."""
        return 10 * math.log10(self.near_best / self.far_best)


def _argmax(values) -> int:
    best, best_i = -math.inf, None
    for i, v in values:
        if v is not None and v > best:
            best, best_i = v, i
    return best_i


def run_far_scan(
    probe: PowerProbe,
    ctx: PropagationContext,
    tx: ArrayGeometry,
    codebook: Codebook,
    transform: Transform | None = None,
) -> tuple[int, list[tuple[int, float | None]]]:
    """Probe every valid far-field beam; returns ``(k_star, powers)``.

    Invalid beams are not probed and carry ``None``.
    """
    if not codebook.valid_beams:
        raise ValueError("codebook has no valid far-field beam")
    powers: list[tuple[int, float | None]] = []
    for beam in codebook.far_beams:
        if not beam.valid:
            powers.append((beam.index, None))
            continue
        x = far_field_excitation(ctx, tx, beam.xi)
        if transform is not None:
            x = transform(x)
        powers.append((beam.index, float(probe.measure(x))))
    return _argmax(powers), powers


def run_near_scan(
    probe: PowerProbe,
    ctx: PropagationContext,
    tx: ArrayGeometry,
    xi_opt: DirectionUV,
    distance_grid,
    transform: Transform | None = None,
) -> tuple[int, list[tuple[int, float]], float]:
    """Probe focused beams along ``xi_opt``; returns ``(i_star, powers, r_opt)``."""
    grid = list(distance_grid)
    if not grid:
        raise ValueError("distance grid is empty")
    powers = []
    for i, r in grid:
        x = near_field_excitation(ctx, tx, xi_opt, r)
        if transform is not None:
            x = transform(x)
        powers.append((i, float(probe.measure(x))))
    i_star = _argmax(powers)
    r_opt = dict(grid)[i_star]
    return i_star, powers, r_opt


def beam_scan(
    probe: PowerProbe,
    ctx: PropagationContext,
    tx: ArrayGeometry,
    codebook: Codebook,
    transform: Transform | None = None,
) -> ScanOutcome:
    """Far-field direction search followed by the near-field focal search."""
    k_star, far_powers = run_far_scan(probe, ctx, tx, codebook, transform)
    xi_opt = codebook.beam(k_star).xi
    i_star, near_powers, r_opt = run_near_scan(probe, ctx, tx, xi_opt, codebook.distance_grid, transform)

    final = near_field_excitation(ctx, tx, xi_opt, r_opt)
    far_x = far_field_excitation(ctx, tx, xi_opt)
    if transform is not None:
        final, far_x = transform(final), transform(far_x)
    n_calls = sum(1 for _, p in far_powers if p is not None) + len(near_powers)
    return ScanOutcome(
        far_powers=tuple(far_powers),
        k_star=k_star,
        xi_opt=xi_opt,
        near_powers=tuple(near_powers),
        i_star=i_star,
        r_opt=r_opt,
        final_excitation=final,
        far_excitation=far_x,
        probe_call_count=n_calls,
    )
