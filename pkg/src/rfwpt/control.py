"""Transmit excitation vectors, scanning codebooks and hardware constraints.

Every element radiates the same power, so an excitation is fully described by
its phases and an on/off state per element: ``x_n = sqrt(2 rho) exp(-j w_n)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .channel import PropagationContext
from .geometry import ArrayGeometry, ArraySpec, DirectionUV, ReceiverPose

__all__ = [
    "Excitation",
    "FarBeam",
    "Codebook",
    "far_field_excitation",
    "near_field_excitation",
    "optimal_excitation",
    "grid_point",
    "generate_codebook",
    "quantize_phases",
    "phase_words",
    "apply_element_mask",
    "center_out_order",
    "center_out_mask",
]

TWO_PI = 2 * math.pi


def _readonly(a, dtype) -> np.ndarray:
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Excitation:
    """Phase-only excitation of an equal-power array.

    ``phases`` holds w_n in radians (the transmitted wave is exp(-j w_n)).
    ``active`` switches elements off; inactive elements radiate exactly zero.
    """

    phases: np.ndarray
    amplitude: float
    active: np.ndarray | None = None

    def __post_init__(self):
        phases = _readonly(self.phases, float).reshape(-1)
        if not np.all(np.isfinite(phases)):
            raise ValueError("phases must be finite")
        if not self.amplitude >= 0:
            raise ValueError("amplitude must be >= 0")
        active = np.ones(phases.shape, bool) if self.active is None else self.active
        active = _readonly(active, bool).reshape(-1)
        if active.shape != phases.shape:
            raise ValueError(f"mask length {active.size} does not match {phases.size} elements")
        object.__setattr__(self, "phases", phases)
        object.__setattr__(self, "active", active)

    @classmethod
    def from_power(cls, phases, per_element_power: float, active=None) -> "Excitation":
        return cls(phases, math.sqrt(2 * per_element_power), active)

    @property
    def n_elements(self) -> int:
        return self.phases.size

    @property
    def n_active(self) -> int:
        return int(self.active.sum())

    @property
    def waves(self) -> np.ndarray:
        return np.where(self.active, self.amplitude * np.exp(-1j * self.phases), 0.0)

    @property
    def wrapped_phases(self) -> np.ndarray:
        """Phases folded into [0, 2 pi)."""
        w = np.mod(self.phases, TWO_PI)
        return np.where(w >= TWO_PI, 0.0, w)


@dataclass(frozen=True)
class FarBeam:
    index: int
    xi: DirectionUV
    valid: bool


@dataclass(frozen=True)
class Codebook:
    far_beams: tuple[FarBeam, ...]
    delta_u: float
    delta_v: float
    psi_u: int
    psi_v: int
    distance_grid: tuple[tuple[int, float], ...]

    @property
    def n_beams(self) -> int:
        return len(self.far_beams)

    @property
    def valid_beams(self) -> list[FarBeam]:
        return [b for b in self.far_beams if b.valid]

    @property
    def distances(self) -> np.ndarray:
        return np.array([r for _, r in self.distance_grid])

    def beam(self, k: int) -> FarBeam:
        """Beam with 1-based index ``k``."""
        if not 1 <= k <= self.n_beams:
            raise IndexError(f"beam index {k} out of range 1..{self.n_beams}")
        return self.far_beams[k - 1]


def _direction_phase(ctx: PropagationContext, tx: ArrayGeometry, xi: DirectionUV) -> np.ndarray:
    return ctx.wavenumber * (tx.in_plane @ xi.as_array())


def _focus_phase(ctx: PropagationContext, tx: ArrayGeometry, r: float) -> np.ndarray:
    return ctx.wavenumber * np.sum(tx.positions**2, axis=1) / (2 * r)


def far_field_excitation(ctx: PropagationContext, tx: ArrayGeometry, xi: DirectionUV) -> Excitation:
    """Beam steered to ``xi`` with a planar phase front."""
    if not xi.valid:
        raise ValueError(f"direction (u={xi.u:.6g}, v={xi.v:.6g}) lies outside the unit disk")
    return Excitation.from_power(_direction_phase(ctx, tx, xi), tx.spec.per_element_power)


def near_field_excitation(
    ctx: PropagationContext, tx: ArrayGeometry, xi: DirectionUV, r: float
) -> Excitation:
    """Beam steered to ``xi`` and focused at range ``r``."""
    if not xi.valid:
        raise ValueError(f"direction (u={xi.u:.6g}, v={xi.v:.6g}) lies outside the unit disk")
    if not r > 0:
        raise ValueError(f"focal distance must be > 0, got {r!r}")
    phases = _direction_phase(ctx, tx, xi) - _focus_phase(ctx, tx, r)
    return Excitation.from_power(phases, tx.spec.per_element_power)


def optimal_excitation(ctx: PropagationContext, tx: ArrayGeometry, pose: ReceiverPose) -> Excitation:
    """Phases that co-phase every contribution at the anchor element."""
    return near_field_excitation(ctx, tx, pose.xi, pose.r)


def grid_point(j: int, size: int) -> float:
    """j-th point (1-based) of a unit-step grid of ``size`` points centred on 0."""
    return j - size / 2 - 0.5


def generate_codebook(
    tx: ArraySpec,
    r_b: float,
    upsilon_d: int,
    delta_u: float = 2.0,
    delta_v: float = 2.0,
) -> Codebook:
    """u-v scanning grid with 2 n_rows x 2 n_cols beams plus a focal-distance grid.

    Beam k has u-index ``(k - 1) % psi_u + 1`` and v-index ``(k - 1) // psi_u + 1``.
    Beams outside the unit disk keep their index but are flagged invalid.
    The distance grid is ``r_b * i / upsilon_d`` for ``i = 1..upsilon_d``.
    """
    for name, w in (("delta_u", delta_u), ("delta_v", delta_v)):
        if not 0 < w <= 2:
            raise ValueError(f"{name} must lie in (0, 2], got {w!r}")
    if int(upsilon_d) != upsilon_d or upsilon_d < 1:
        raise ValueError(f"upsilon_d must be a positive integer, got {upsilon_d!r}")
    if not r_b > 0:
        raise ValueError(f"r_b must be > 0, got {r_b!r}")
    upsilon_d = int(upsilon_d)
    psi_u, psi_v = 2 * tx.n_rows, 2 * tx.n_cols
    step_u, step_v = delta_u / (psi_u - 1), delta_v / (psi_v - 1)
    beams = []
    for k in range(1, psi_u * psi_v + 1):
        ku = (k - 1) % psi_u + 1
        kv = (k - 1) // psi_u + 1
        xi = DirectionUV(step_u * grid_point(ku, psi_u), step_v * grid_point(kv, psi_v))
        beams.append(FarBeam(k, xi, xi.valid))
    grid = tuple((i, r_b / upsilon_d * i) for i in range(1, upsilon_d + 1))
    return Codebook(tuple(beams), delta_u, delta_v, psi_u, psi_v, grid)


def _check_lsb(lsb: float) -> int:
    if not lsb > 0:
        raise ValueError(f"lsb must be > 0, got {lsb!r}")
    levels = TWO_PI / lsb
    n = round(levels)
    if n < 1 or abs(levels - n) > 1e-9 * levels:
        raise ValueError(f"2*pi is not an integer multiple of lsb={lsb!r}")
    return n


def quantize_phases(x: Excitation, lsb: float) -> Excitation:
    """Round each phase to the nearest multiple of ``lsb``; ties round up."""
    _check_lsb(lsb)
    q = np.floor(x.phases / lsb + 0.5) * lsb
    return replace(x, phases=q)


def phase_words(x: Excitation, lsb: float) -> np.ndarray:
    """Integer shifter words in ``[0, 2 pi / lsb)`` for a quantized excitation."""
    levels = _check_lsb(lsb)
    return np.mod(np.floor(x.phases / lsb + 0.5).astype(np.int64), levels)


def apply_element_mask(x: Excitation, mask) -> Excitation:
    """Switch off elements whose mask entry is False."""
    mask = np.asarray(mask, dtype=bool).reshape(-1)
    if mask.size != x.n_elements:
        raise ValueError(f"mask length {mask.size} does not match {x.n_elements} elements")
    return replace(x, active=x.active & mask)


def center_out_order(tx: ArrayGeometry) -> np.ndarray:
    """1-based element indices sorted by distance from the array centre."""
    d = np.round(np.linalg.norm(tx.positions, axis=1), 12)
    return np.argsort(d, kind="stable") + 1


def center_out_mask(tx: ArrayGeometry, n_active: int) -> np.ndarray:
    """Mask enabling the ``n_active`` elements closest to the array centre."""
    if not 0 <= n_active <= tx.n_elements:
        raise ValueError(f"n_active must lie in 0..{tx.n_elements}")
    mask = np.zeros(tx.n_elements, bool)
    mask[center_out_order(tx)[:n_active] - 1] = True
    return mask
