"""Free-space channel between a transmit array and a receive array.

Two models are provided. The exact model evaluates the Friis expression with
the true element-to-element distance. The decomposed model splits each gain
into a common distance term, a far-field direction phase and a near-field
focusing phase, using the first-order expansion of the distance around the
anchor range.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

from .geometry import ArrayGeometry, ReceiverPose, receiver_global_positions

__all__ = [
    "SPEED_OF_LIGHT",
    "MIN_DISTANCE",
    "PropagationContext",
    "ChannelMatrix",
    "pairwise_distances",
    "channel_gain_exact",
    "channel_gain_decomposed",
    "distance_term",
    "direction_term",
    "focusing_term",
    "coupling_offsets",
    "received_waves",
    "aperture_size",
    "fraunhofer_distance",
]

SPEED_OF_LIGHT = 299792458.0
MIN_DISTANCE = 1e-3  # metres; below this the radiative model is meaningless

ChannelModel = Literal["exact", "decomposed"]


@dataclass(frozen=True)
class PropagationContext:
    frequency: float
    tx_gain: float = 1.0
    rx_gain: float = 1.0

    def __post_init__(self):
        if not math.isfinite(self.frequency) or self.frequency <= 0:
            raise ValueError(f"frequency must be > 0, got {self.frequency!r}")
        for name in ("tx_gain", "rx_gain"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0")

    @property
    def wavelength(self) -> float:
        return SPEED_OF_LIGHT / self.frequency

    @property
    def wavenumber(self) -> float:
        return 2 * math.pi / self.wavelength


@dataclass(frozen=True)
class ChannelMatrix:
    """``gains[n, m]`` is the complex gain from transmit n to receive m."""

    gains: np.ndarray
    model_tag: str
    offsets: np.ndarray | None = None

    @property
    def shape(self) -> tuple[int, int]:
        return self.gains.shape


def pairwise_distances(tx: ArrayGeometry, rx_positions) -> np.ndarray:
    """``(N, M)`` Euclidean distances between transmit and receive elements."""
    rx = np.atleast_2d(np.asarray(rx_positions, dtype=float))
    if not np.all(np.isfinite(rx)):
        raise ValueError("receive positions must be finite")
    d = np.linalg.norm(tx.positions[:, None, :] - rx[None, :, :], axis=-1)
    if np.any(d < MIN_DISTANCE):
        raise ValueError(
            f"transmit/receive elements closer than {MIN_DISTANCE} m "
            f"(min distance {d.min():.3g} m); channel is singular"
        )
    return d


def _friis(ctx: PropagationContext, d: np.ndarray) -> np.ndarray:
    lam = ctx.wavelength
    amp = lam / (4 * np.pi * d) * math.sqrt(ctx.tx_gain * ctx.rx_gain)
    return amp * np.exp(-2j * np.pi * d / lam)


def channel_gain_exact(ctx: PropagationContext, tx: ArrayGeometry, rx_positions) -> ChannelMatrix:
    return ChannelMatrix(_friis(ctx, pairwise_distances(tx, rx_positions)), "exact")


def coupling_offsets(tx: ArrayGeometry, pose: ReceiverPose, rx_local: ArrayGeometry) -> np.ndarray:
    """``(N, M, 3)`` offsets a_n - R s_m between transmit and rotated receive elements."""
    rotated = rx_local.positions @ pose.rotation.T
    return tx.positions[:, None, :] - rotated[None, :, :]


def distance_term(ctx: PropagationContext, r: float) -> complex:
    """Gain shared by every element pair, evaluated at the anchor range ``r``."""
    if not r > 0:
        raise ValueError(f"anchor range must be > 0, got {r!r}")
    return complex(_friis(ctx, np.asarray(r)))


def direction_term(ctx: PropagationContext, unit_direction, offsets: np.ndarray) -> np.ndarray:
    return np.exp(1j * ctx.wavenumber * (offsets @ np.asarray(unit_direction, dtype=float)))


def focusing_term(ctx: PropagationContext, r: float, offsets: np.ndarray) -> np.ndarray:
    if not r > 0:
        raise ValueError(f"anchor range must be > 0, got {r!r}")
    return np.exp(-1j * ctx.wavenumber * np.sum(offsets**2, axis=-1) / (2 * r))


def channel_gain_decomposed(
    ctx: PropagationContext, tx: ArrayGeometry, pose: ReceiverPose, rx_local: ArrayGeometry
) -> ChannelMatrix:
    r = pose.r
    kappa = coupling_offsets(tx, pose, rx_local)
    # distances are still checked so that both models reject the same geometries
    pairwise_distances(tx, receiver_global_positions(pose, rx_local))
    gains = (
        distance_term(ctx, r)
        * direction_term(ctx, pose.unit_direction, kappa)
        * focusing_term(ctx, r, kappa)
    )
    return ChannelMatrix(gains, "decomposed", kappa)


def received_waves(H: ChannelMatrix, x) -> np.ndarray:
    """Power waves at each receive port, y_m = sum_n h[n, m] x[n]."""
    waves = np.asarray(getattr(x, "waves", x))
    if waves.ndim != 1 or waves.shape[0] != H.gains.shape[0]:
        raise ValueError(
            f"excitation length {waves.shape} does not match {H.gains.shape[0]} transmit elements"
        )
    return waves @ H.gains


def aperture_size(tx: ArrayGeometry, element_extent: float | None = None) -> tuple[float, float]:
    """Physical (x, y) extent of the array.

    Without an element extent this is ``count * spacing`` per axis; with one it
    is ``(count - 1) * spacing + element_extent``.
    """
    s = tx.spec
    if element_extent is None:
        return s.n_cols * s.col_spacing, s.n_rows * s.row_spacing
    if element_extent < 0:
        raise ValueError("element_extent must be >= 0")
    return (
        (s.n_cols - 1) * s.col_spacing + element_extent,
        (s.n_rows - 1) * s.row_spacing + element_extent,
    )


def fraunhofer_distance(
    ctx: PropagationContext,
    tx: ArrayGeometry,
    *,
    element_extent: float | None = None,
    aperture: tuple[float, float] | None = None,
    max_dimension: float | None = None,
) -> float:
    """Boundary 2 L^2 / lambda between the radiative near field and far field.

    ``L`` is the diagonal of the aperture. It can be given directly via
    ``max_dimension``, as physical ``aperture`` dimensions, or derived from the
    array layout (see :func:`aperture_size`).
    """
    if max_dimension is not None:
        L = float(max_dimension)
    elif aperture is not None:
        L = math.hypot(*aperture)
    else:
        L = math.hypot(*aperture_size(tx, element_extent))
    if L < 0:
        raise ValueError("aperture dimension must be >= 0")
    return 2 * L * L / ctx.wavelength
