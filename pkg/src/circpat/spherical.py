"""Closed-form spherical trigonometry for conical disks and intersection bigons.

Every kernel comes in two flavours: a numpy-broadcasting function taking the
disk's own curvature ``k``, the neighbouring curvature ``k_nbr`` and the
intersection angle ``theta`` (used by the assembly code), and a scalar
wrapper over :class:`BigonConfig` that validates its inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal, NamedTuple

import numpy as np

K_MIN = 1e-300
K_MAX = 1e300
HALF_PI = 0.5 * math.pi

Side = Literal["i", "j"]


class DomainError(ValueError):
    """A value lies outside the domain an operation is defined on."""


def arccot(x):
    """Inverse cotangent with range (0, pi), continuous and decreasing on R."""
    return np.arctan2(1.0, x)


def check_curvature(k: float, name: str = "k") -> float:
    k = float(k)
    if not math.isfinite(k) or k < K_MIN or k > K_MAX:
        raise DomainError(f"{name}={k!r} outside [{K_MIN:g}, {K_MAX:g}]")
    return k


def check_theta(theta: float, name: str = "theta") -> float:
    theta = float(theta)
    if not (0.0 < theta <= HALF_PI):
        raise DomainError(f"{name}={theta!r} outside (0, pi/2]")
    return theta


def curvature_radius_convert(x: float, direction: Literal["to-curvature", "to-radius"]) -> float:
    """Convert a radius to a geodesic curvature (``k = cot r``) or back."""
    x = float(x)
    if direction == "to-curvature":
        if not (0.0 < x < HALF_PI):
            raise DomainError(f"radius {x!r} outside (0, pi/2)")
        return math.cos(x) / math.sin(x)
    if direction == "to-radius":
        if not (x > 0.0) or math.isinf(x):
            raise DomainError(f"curvature {x!r} must be finite and > 0")
        return math.atan2(1.0, x)
    raise ValueError(f"unknown direction {direction!r}")


def radius_of(k):
    return np.arctan2(1.0, k)


@dataclass(frozen=True)
class DiskGeometry:
    """Conical spherical disk of cone angle ``cone_angle`` and radius ``radius``."""

    cone_angle: float
    radius: float

    def __post_init__(self):
        if not (self.cone_angle > 0.0) or math.isinf(self.cone_angle):
            raise DomainError(f"cone_angle={self.cone_angle!r} must be finite and > 0")
        if not (0.0 < self.radius < HALF_PI):
            raise DomainError(f"radius={self.radius!r} outside (0, pi/2)")

    @property
    def curvature(self) -> float:
        return math.cos(self.radius) / math.sin(self.radius)


class DiskQuantities(NamedTuple):
    circumference: float
    area: float
    total_curvature: float
    gaussian_defect: float


def disk_quantities(d: DiskGeometry) -> DiskQuantities:
    a, r = d.cone_angle, d.radius
    return DiskQuantities(
        circumference=a * math.sin(r),
        area=2.0 * a * math.sin(0.5 * r) ** 2,
        total_curvature=a * math.cos(r),
        gaussian_defect=2.0 * math.pi - a,
    )


@dataclass(frozen=True)
class BigonConfig:
    """Local data of one bigon: the two boundary curvatures and the angle."""

    k_i: float
    k_j: float
    theta: float

    def __post_init__(self):
        check_curvature(self.k_i, "k_i")
        check_curvature(self.k_j, "k_j")
        check_theta(self.theta)

    def oriented(self, side: Side) -> tuple[float, float, float]:
        if side == "i":
            return self.k_i, self.k_j, self.theta
        if side == "j":
            return self.k_j, self.k_i, self.theta
        raise ValueError(f"side must be 'i' or 'j', got {side!r}")


# -- broadcasting kernels ---------------------------------------------------


def _cot_half_angle(k, k_nbr, theta):
    return (k_nbr + k * np.cos(theta)) / (np.sin(theta) * np.hypot(k, 1.0))


def arc_angle(k, k_nbr, theta):
    """Central angle subtended by the bigon arc on the disk of curvature ``k``."""
    return 2.0 * arccot(_cot_half_angle(k, k_nbr, theta))


def arc_total_curvature(k, k_nbr, theta):
    """Total geodesic curvature of the bigon arc on the disk of curvature ``k``."""
    cos_r = k / np.hypot(k, 1.0)
    return cos_r * arc_angle(k, k_nbr, theta)


def _arccot_gap(x):
    # arccot(x) - x/(1+x^2) > 0 for x >= 0; series past x=100 avoids cancellation
    x = np.asarray(x, dtype=float)
    flat = x.reshape(-1)
    out = np.empty_like(flat)
    big = flat > 100.0
    xs = flat[~big]
    out[~big] = np.arctan2(1.0, xs) - xs / (1.0 + xs * xs)
    xb = flat[big]
    y = 1.0 / (xb * xb)
    out[big] = (y / xb) * (2.0 / 3.0 - y * (4.0 / 5.0 - y * (6.0 / 7.0 - y * (8.0 / 9.0))))
    return out.reshape(x.shape)


def arc_partials(k, k_nbr, theta):
    """Log-coordinate partials of :func:`arc_total_curvature`.

    Returns ``(d_own, d_cross)`` with ``d_own = dT/du`` and
    ``d_cross = dT/du_nbr`` where ``u = ln k``. The own partial is assembled as
    a strictly positive domination term minus the (negative) cross term, so
    ``d_own > 0`` and ``d_own + d_cross > 0`` hold in floating point too.
    """
    k = np.asarray(k, dtype=float)
    k_nbr = np.asarray(k_nbr, dtype=float)
    theta = np.asarray(theta, dtype=float)
    s = np.sin(theta)
    m = np.maximum(k, k_nbr)
    a = k / m
    b = k_nbr / m
    q = a * a + b * b + 2.0 * a * b * np.cos(theta) + (s / m) ** 2
    d_cross = -2.0 * a * b * s / q
    h = np.hypot(k, 1.0)
    x = _cot_half_angle(k, k_nbr, theta)
    dominance = 2.0 * (k / h) / h / h * _arccot_gap(x)
    return dominance - d_cross, d_cross


def lens_area_partial(k, k_nbr, theta):
    """``dArea/du`` of the lens with respect to this side's log-curvature.

    The cross partials are symmetric, so ``-(dT/du + dT_nbr/du)`` collapses to
    minus the domination term; evaluating that directly avoids cancelling two
    nearly equal partials.
    """
    k = np.asarray(k, dtype=float)
    h = np.hypot(k, 1.0)
    x = _cot_half_angle(k, np.asarray(k_nbr, dtype=float), np.asarray(theta, dtype=float))
    return -2.0 * (k / h) / h / h * _arccot_gap(x)


# -- validated scalar API ---------------------------------------------------


def central_angle(cfg: BigonConfig, side: Side = "i") -> float:
    return float(arc_angle(*cfg.oriented(side)))


def arc_curvature(cfg: BigonConfig, side: Side = "i") -> float:
    return float(arc_total_curvature(*cfg.oriented(side)))


def bigon_area(cfg: BigonConfig) -> float:
    """Area of the lens, from Gauss-Bonnet: ``2*theta - T_i - T_j``."""
    return 2.0 * cfg.theta - arc_curvature(cfg, "i") - arc_curvature(cfg, "j")


class BigonPartials(NamedTuple):
    dTi_dui: float
    dTi_duj: float
    dTj_duj: float
    dTj_dui: float


def arc_curvature_partials(cfg: BigonConfig) -> BigonPartials:
    di, ci = arc_partials(cfg.k_i, cfg.k_j, cfg.theta)
    dj, cj = arc_partials(cfg.k_j, cfg.k_i, cfg.theta)
    return BigonPartials(float(di), float(ci), float(dj), float(cj))
