"""Array geometry, receiver pose and direction parameterisation.

The transmitter sits in the x-y plane with its centre at the global origin and
radiates towards +z. Element indices are 1-based and row-major, so element
``n`` lives at row ``(n - 1) // n_cols + 1`` and column ``(n - 1) % n_cols + 1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "ArraySpec",
    "ArrayGeometry",
    "EulerAngles",
    "ReceiverPose",
    "DirectionUV",
    "build_planar_array",
    "relative_to_anchor",
    "rotation_matrix",
    "receiver_global_positions",
    "spherical_to_cartesian",
    "cartesian_to_spherical",
    "direction_to_uv",
    "uv_to_direction",
]


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


def _wrap_pi(angle: float) -> float:
    """Map an angle onto (-pi, pi]."""
    return math.pi - math.fmod(math.fmod(math.pi - angle, 2 * math.pi) + 2 * math.pi, 2 * math.pi)


@dataclass(frozen=True)
class ArraySpec:
    """Rectangular planar array description.

    Spacings are centre-to-centre distances in metres. ``per_element_power``
    is the power each element radiates in watts (only meaningful for a
    transmitter).
    """

    n_rows: int
    n_cols: int
    row_spacing: float
    col_spacing: float
    element_gain: float = 1.0
    per_element_power: float = 0.0

    def __post_init__(self):
        for name in ("n_rows", "n_cols"):
            value = getattr(self, name)
            if isinstance(value, bool) or int(value) != value or value < 1:
                raise ValueError(f"{name} must be a positive integer, got {value!r}")
            object.__setattr__(self, name, int(value))
        for name in ("row_spacing", "col_spacing", "element_gain"):
            value = getattr(self, name)
            if not math.isfinite(value) or value <= 0:
                raise ValueError(f"{name} must be > 0, got {value!r}")
        if not math.isfinite(self.per_element_power) or self.per_element_power < 0:
            raise ValueError(f"per_element_power must be >= 0, got {self.per_element_power!r}")

    @property
    def n_elements(self) -> int:
        return self.n_rows * self.n_cols

    @property
    def total_power(self) -> float:
        return self.per_element_power * self.n_elements


@dataclass(frozen=True)
class ArrayGeometry:
    """Element positions of a planar array in its owner frame.

    ``positions`` is an ``(N, 3)`` array ordered by element index and
    ``anchor_index`` is the 1-based index of the anchor element.
    """

    spec: ArraySpec
    positions: np.ndarray
    anchor_index: int

    def __post_init__(self):
        pos = _frozen(self.positions)
        if pos.shape != (self.spec.n_elements, 3):
            raise ValueError(
                f"expected {self.spec.n_elements} positions of shape (N, 3), got {pos.shape}"
            )
        if np.any(pos[:, 2] != 0.0):
            raise ValueError("planar array positions must have z == 0")
        if not 1 <= self.anchor_index <= self.spec.n_elements:
            raise ValueError(f"anchor_index {self.anchor_index} out of range 1..{self.spec.n_elements}")
        object.__setattr__(self, "positions", pos)

    @property
    def n_elements(self) -> int:
        return self.spec.n_elements

    @property
    def in_plane(self) -> np.ndarray:
        """``(N, 2)`` in-plane coordinates (x, y) of every element."""
        return self.positions[:, :2]

    @property
    def anchor_position(self) -> np.ndarray:
        return self.positions[self.anchor_index - 1]

    def row_col(self, n: int) -> tuple[int, int]:
        """1-based (row, column) of element ``n``."""
        return (n - 1) // self.spec.n_cols + 1, (n - 1) % self.spec.n_cols + 1


@dataclass(frozen=True)
class EulerAngles:
    """Intrinsic x-y'-z'' Euler angles in radians, wrapped to (-pi, pi]."""

    alpha: float = 0.0
    beta: float = 0.0
    gamma: float = 0.0

    def __post_init__(self):
        for name in ("alpha", "beta", "gamma"):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise ValueError(f"Euler angle {name} must be finite")
            object.__setattr__(self, name, _wrap_pi(value))

    @classmethod
    def from_degrees(cls, alpha: float = 0.0, beta: float = 0.0, gamma: float = 0.0) -> "EulerAngles":
        return cls(math.radians(alpha), math.radians(beta), math.radians(gamma))


@dataclass(frozen=True)
class DirectionUV:
    """Direction in u-v coordinates; the forward hemisphere is the unit disk."""

    u: float
    v: float

    @property
    def valid(self) -> bool:
        return self.u * self.u + self.v * self.v <= 1.0

    def as_array(self) -> np.ndarray:
        return np.array([self.u, self.v])


def spherical_to_cartesian(r: float, theta: float, phi: float) -> np.ndarray:
    """Radius, elevation from +z and azimuth to a Cartesian point."""
    if not r > 0:
        raise ValueError(f"radius must be > 0, got {r!r}")
    st = math.sin(theta)
    return np.array([r * st * math.cos(phi), r * st * math.sin(phi), r * math.cos(theta)])


def cartesian_to_spherical(point) -> tuple[float, float, float]:
    """Inverse of :func:`spherical_to_cartesian`; returns ``(r, theta, phi)``.

    ``theta`` is returned in ``[0, pi]`` and ``phi`` in ``(-pi, pi]``.
    """
    x, y, z = (float(c) for c in point)
    rho = math.hypot(x, y)
    r = math.hypot(rho, z)
    if not r > 0:
        raise ValueError("cannot convert the origin to spherical coordinates")
    return r, math.atan2(rho, z), math.atan2(y, x)


def direction_to_uv(theta: float, phi: float) -> DirectionUV:
    if abs(theta) > math.pi / 2:
        raise ValueError(f"elevation must satisfy |theta| <= pi/2, got {theta!r}")
    s = math.sin(theta)
    return DirectionUV(s * math.cos(phi), s * math.sin(phi))


def uv_to_direction(xi: DirectionUV) -> tuple[float, float]:
    """Return ``(theta, phi)`` for a valid u-v direction."""
    rho2 = xi.u * xi.u + xi.v * xi.v
    if rho2 > 1.0:
        raise ValueError(f"u^2 + v^2 = {rho2:.6g} > 1 is not a physical direction")
    return math.asin(math.sqrt(rho2)), math.atan2(xi.v, xi.u)


def rotation_matrix(angles: EulerAngles) -> np.ndarray:
    """R = Rx(alpha) @ Ry(beta) @ Rz(gamma)."""
    ca, sa = math.cos(angles.alpha), math.sin(angles.alpha)
    cb, sb = math.cos(angles.beta), math.sin(angles.beta)
    cg, sg = math.cos(angles.gamma), math.sin(angles.gamma)
    rx = np.array([[1.0, 0.0, 0.0], [0.0, ca, -sa], [0.0, sa, ca]])
    ry = np.array([[cb, 0.0, sb], [0.0, 1.0, 0.0], [-sb, 0.0, cb]])
    rz = np.array([[cg, -sg, 0.0], [sg, cg, 0.0], [0.0, 0.0, 1.0]])
    return rx @ ry @ rz


@dataclass(frozen=True)
class ReceiverPose:
    """Global position of the receiver's anchor element plus its attitude.

    The anchor must lie in the radiating half-space (z >= 0).
    """

    anchor_position: np.ndarray
    attitude: EulerAngles = field(default_factory=EulerAngles)

    def __post_init__(self):
        p = _frozen(self.anchor_position).reshape(-1)
        if p.shape != (3,) or not np.all(np.isfinite(p)):
            raise ValueError("anchor_position must be a finite 3-vector")
        if not np.linalg.norm(p) > 0:
            raise ValueError("anchor must not sit at the transmitter centre (r > 0)")
        if p[2] < 0:
            raise ValueError("receiver must be in front of the transmitter (z >= 0)")
        object.__setattr__(self, "anchor_position", p)

    @classmethod
    def from_spherical(cls, r: float, theta: float, phi: float, attitude: EulerAngles | None = None):
        if not -math.pi / 2 <= theta <= math.pi / 2:
            raise ValueError(f"theta must lie in [-pi/2, pi/2], got {theta!r}")
        if not -math.pi <= phi <= math.pi:
            raise ValueError(f"phi must lie in [-pi, pi], got {phi!r}")
        return cls(spherical_to_cartesian(r, theta, phi), attitude or EulerAngles())

    @classmethod
    def from_center(cls, center, rx_local: ArrayGeometry, attitude: EulerAngles | None = None):
        """Place the receiver so that its array centroid lands on ``center``.

        ``rx_local`` must be expressed relative to its anchor element.
        """
        attitude = attitude or EulerAngles()
        centroid = rx_local.positions.mean(axis=0)
        anchor = np.asarray(center, dtype=float) - rotation_matrix(attitude) @ centroid
        return cls(anchor, attitude)

    @property
    def spherical(self) -> tuple[float, float, float]:
        return cartesian_to_spherical(self.anchor_position)

    @property
    def r(self) -> float:
        return float(np.linalg.norm(self.anchor_position))

    @property
    def unit_direction(self) -> np.ndarray:
        return self.anchor_position / self.r

    @property
    def xi(self) -> DirectionUV:
        d = self.unit_direction
        return DirectionUV(float(d[0]), float(d[1]))

    @property
    def rotation(self) -> np.ndarray:
        return rotation_matrix(self.attitude)


def build_planar_array(spec: ArraySpec) -> ArrayGeometry:
    """Centred rectangular array; the anchor is the element nearest the centroid.

    Ties go to the lowest index.
    """
    n = np.arange(spec.n_elements)
    tau_row = n // spec.n_cols + 1
    tau_col = n % spec.n_cols + 1
    x = spec.col_spacing * ((spec.n_cols + 1) / 2 - tau_col)
    y = spec.row_spacing * (tau_row - (spec.n_rows + 1) / 2)
    positions = np.column_stack([x, y, np.zeros_like(x)])
    centroid = positions.mean(axis=0)
    dist = np.linalg.norm(positions - centroid, axis=1)
    # argmin returns the first occurrence, which is the lowest index on ties;
    # round so that float noise in the centroid does not break exact ties
    anchor = int(np.argmin(np.round(dist, 12))) + 1
    return ArrayGeometry(spec, positions, anchor)


def relative_to_anchor(geometry: ArrayGeometry) -> ArrayGeometry:
    """Same array expressed in a frame whose origin is the anchor element."""
    return ArrayGeometry(geometry.spec, geometry.positions - geometry.anchor_position, geometry.anchor_index)


def receiver_global_positions(pose: ReceiverPose, local: ArrayGeometry) -> np.ndarray:
    """Global ``(M, 3)`` positions of every receive element."""
    if np.any(local.anchor_position != 0.0):
        raise ValueError("local receive geometry must have its anchor element at the origin")
    return pose.anchor_position + local.positions @ pose.rotation.T
