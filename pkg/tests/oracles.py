"""Independent reference computations used to freeze expected values.

Nothing here imports the package: the geometry is rebuilt from an explicit
embedding of two circles on the unit sphere, and finite differences run on
an mpmath transcription of the arc formula at high precision.
"""

import math

import mpmath as mp
import numpy as np
from scipy import integrate


def two_caps(k_i, k_j, theta):
    """Centres, radii and one intersection point of two caps meeting at ``theta``."""
    r_i, r_j = math.atan2(1.0, k_i), math.atan2(1.0, k_j)
    # the radii to an intersection point meet at pi - theta
    cos_d = math.cos(r_i) * math.cos(r_j) - math.sin(r_i) * math.sin(r_j) * math.cos(theta)
    d = math.acos(cos_d)
    c_i = np.array([0.0, 0.0, 1.0])
    c_j = np.array([math.sin(d), 0.0, math.cos(d)])
    pz = math.cos(r_i)
    px = (math.cos(r_j) - pz * math.cos(d)) / math.sin(d)
    py = math.sqrt(max(0.0, 1.0 - px * px - pz * pz))
    return c_i, c_j, r_i, r_j, d, np.array([px, py, pz])


def measured_intersection_angle(k_i, k_j, theta):
    """Interior angle of the lens at an intersection point, measured in 3-space."""
    c_i, c_j, _, _, _, p = two_caps(k_i, k_j, theta)
    n_i = c_i - np.dot(c_i, p) * p
    n_j = c_j - np.dot(c_j, p) * p
    cos_a = np.dot(n_i, n_j) / (np.linalg.norm(n_i) * np.linalg.norm(n_j))
    return math.pi - math.acos(max(-1.0, min(1.0, cos_a)))


def embedded_central_angle(k_i, k_j, theta):
    """Angle at cap ``i``'s centre between the two intersection points."""
    _, _, _, _, _, p = two_caps(k_i, k_j, theta)
    return 2.0 * math.atan2(p[1], p[0])


def lens_area(k_i, k_j, theta):
    """Area of the intersection of the two caps by quadrature in polar coordinates about cap i."""
    _, _, r_i, r_j, d, p = two_caps(k_i, k_j, theta)
    corner = math.atan2(p[1], p[0])

    def strip(phi):
        a = math.cos(phi) * math.sin(d)
        b = math.cos(d)
        R = math.hypot(a, b)
        c = math.cos(r_j) / R
        if c >= 1.0:
            return 0.0
        beta = math.atan2(a, b)
        gamma = math.acos(max(-1.0, c))
        total = 0.0
        for shift in (-2 * math.pi, 0.0, 2 * math.pi):
            lo = max(0.0, beta - gamma + shift)
            hi = min(r_i, beta + gamma + shift)
            if hi > lo:
                total += math.cos(lo) - math.cos(hi)
        return total

    half, _ = integrate.quad(strip, 0.0, math.pi, points=[corner], limit=400, epsabs=1e-14, epsrel=1e-12)
    return 2.0 * half


mp.mp.dps = 40


def mp_arc_total(k, k_nbr, theta):
    k, k_nbr, theta = mp.mpf(k), mp.mpf(k_nbr), mp.mpf(theta)
    x = (k_nbr + k * mp.cos(theta)) / (mp.sin(theta) * mp.sqrt(k * k + 1))
    return k / mp.sqrt(k * k + 1) * 2 * mp.acot(x)


def fd_partials(k, k_nbr, theta, h="1e-6"):
    """Central differences of the arc total in log coordinates, step ``h``."""
    h = mp.mpf(h)
    up, dn = mp.exp(h), mp.exp(-h)
    d_own = (mp_arc_total(k * up, k_nbr, theta) - mp_arc_total(k * dn, k_nbr, theta)) / (2 * h)
    d_cross = (mp_arc_total(k, k_nbr * up, theta) - mp_arc_total(k, k_nbr * dn, theta)) / (2 * h)
    return float(d_own), float(d_cross)


def fd_area_partial(k, k_nbr, theta, h="1e-6"):
    """Central difference of the lens area ``2*theta - T - T_nbr`` in this side's log-curvature."""
    h = mp.mpf(h)

    def area(kk):
        return 2 * mp.mpf(theta) - mp_arc_total(kk, k_nbr, theta) - mp_arc_total(k_nbr, kk, theta)

    return float((area(k * mp.exp(h)) - area(k * mp.exp(-h))) / (2 * h))


def brute_force_fixed_point(theta_total_fn, target, lo=-40.0, hi=40.0, iters=200):
    """Plain bisection on a scalar increasing function (no derivatives, no package code)."""
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if theta_total_fn(mid) < target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
