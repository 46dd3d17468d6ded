"""Singular angular profile and sphere quadrature.

The grazing-collision profile is implemented as an exact regularized power
law: sin^(d-2)(theta) * b(cos theta) = b0 * theta^(-1-2s) on
[theta_min, pi/2], and b = 0 below the cutoff and beyond pi/2. Working
with the exact power (rather than an asymptotic) makes closed-form
cross-checks of the derived angular norms possible.

Scattering directions are parametrized as sigma = cos(theta) u_hat +
sin(theta) omega with omega a unit vector orthogonal to u_hat, so the
sphere measure is sin^(d-2)(theta) dtheta domega. The theta rule is a
graded composite midpoint rule: on [theta_min, 0.1] the substitution
theta = theta_min * exp(u) resolves the theta^(-1-2s) singularity, and a
uniform rule covers the rest. A uniform rule all the way down loses
accuracy catastrophically near the cutoff once theta_min is small.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "CollisionKernel",
    "AngularQuadrature",
    "b_profile",
    "b_tilde",
    "b_s_minus_1",
    "b_norms",
    "angular_quadrature",
    "subsphere_measure",
]

_GRADE_BREAK = 0.1  # end of the log-graded segment


def subsphere_measure(d: int) -> float:
    """Measure of the (d-2)-sphere of omega directions: 2*pi for d=3,
    counting measure 2 for d=2 (two unit vectors orthogonal to u_hat)."""
    if d == 3:
        return 2.0 * math.pi
    if d == 2:
        return 2.0
    raise ValueError(f"dimension must be 2 or 3, got {d}")


@dataclass(frozen=True)
class CollisionKernel:
    """Parameters of the collision kernel |u|^gamma * b(cos theta).

    gamma must sit in (max(-4, -d), 0) and s in (0, 1). The very soft
    regime gamma + 2s < 0 is the primary target; moderately soft
    configurations (gamma + 2s >= 0) are allowed because some convolution
    bounds are stated for that branch.
    """

    d: int
    gamma: float
    s: float
    b0: float = 1.0
    theta_min: float = 1e-2
    n_theta: int = 16
    n_omega: int = 8

    def __post_init__(self) -> None:
        if self.d not in (2, 3):
            raise ValueError(f"dimension must be 2 or 3, got {self.d}")
        lo = max(-4.0, -float(self.d))
        if not (lo < self.gamma < 0.0):
            raise ValueError(f"gamma must be in ({lo}, 0), got {self.gamma}")
        if not (0.0 < self.s < 1.0):
            raise ValueError(f"s must be in (0, 1), got {self.s}")
        if self.b0 <= 0:
            raise ValueError(f"b0 must be positive, got {self.b0}")
        if not (0.0 < self.theta_min <= math.pi / 2):
            # closed at pi/2: that endpoint gives the (legal) b == 0 kernel
            raise ValueError(f"theta_min must be in (0, pi/2], got {self.theta_min}")
        if self.n_theta < 2:
            raise ValueError("n_theta must be at least 2")
        if self.n_omega < 1:
            raise ValueError("n_omega must be at least 1")

    @property
    def very_soft(self) -> bool:
        return self.gamma + 2.0 * self.s < 0.0

    def with_gamma(self, gamma: float) -> "CollisionKernel":
        """Same angular profile over a different velocity power."""
        return CollisionKernel(
            d=self.d, gamma=gamma, s=self.s, b0=self.b0,
            theta_min=self.theta_min, n_theta=self.n_theta, n_omega=self.n_omega,
        )


def _check_theta(theta: np.ndarray) -> np.ndarray:
    theta = np.asarray(theta, dtype=np.float64)
    if np.any(theta <= 0.0) or np.any(theta > math.pi):
        raise ValueError("theta must lie in (0, pi]")
    return theta


def b_profile(kernel: CollisionKernel, theta) -> float | np.ndarray:
    """Angular profile b(cos theta) of the regularized power-law kernel.

    Zero below theta_min (cutoff) and beyond pi/2 (support convention:
    only the near-grazing behavior is physically constrained, and cutting
    at pi/2 keeps the cancellation integrals in their half-range form).
    """
    theta = _check_theta(theta)
    scalar = theta.ndim == 0
    th = np.atleast_1d(theta)
    out = np.zeros_like(th)
    m = (th >= kernel.theta_min) & (th <= math.pi / 2)
    out[m] = kernel.b0 * th[m] ** (-1.0 - 2.0 * kernel.s) / np.sin(th[m]) ** (kernel.d - 2)
    return float(out[0]) if scalar else out


def b_tilde(kernel: CollisionKernel, theta) -> float | np.ndarray:
    """Modified profile [(cos(theta/2))^(-gamma-d) - 1] * b(cos theta).

    This is the profile whose sphere L1 norm multiplies |z|^gamma in the
    closed form of the gain-loss cancellation convolution. The bracket is
    nonnegative for gamma > -d and vanishes quadratically at theta = 0,
    which is what makes the product integrable despite the singular b.
    """
    theta = _check_theta(theta)
    bracket = np.cos(theta / 2.0) ** (-kernel.gamma - kernel.d) - 1.0
    return bracket * b_profile(kernel, theta)


def b_s_minus_1(kernel: CollisionKernel, theta) -> float | np.ndarray:
    """Companion profile with the singularity weakened by one order of s:
    sin^(d-2)(theta) * b_{s-1}(cos theta) = b0 * theta^(1-2s) on the same
    support. It shows up when one power of sin^2(theta/2) has been spent
    against the kernel singularity."""
    theta = _check_theta(theta)
    scalar = theta.ndim == 0
    th = np.atleast_1d(theta)
    out = np.zeros_like(th)
    m = (th >= kernel.theta_min) & (th <= math.pi / 2)
    out[m] = kernel.b0 * th[m] ** (1.0 - 2.0 * kernel.s) / np.sin(th[m]) ** (kernel.d - 2)
    return float(out[0]) if scalar else out


@dataclass(frozen=True)
class AngularQuadrature:
    """Nodes and weights for the (theta, omega) sphere parametrization.

    theta/w_theta cover [theta_min, pi] (plain dtheta weights, no measure
    factor); azimuth/w_azimuth sample the circle of omega directions for
    d=3, or the two orthogonal directions (azimuth 0 and pi) with unit
    weights for d=2.
    """

    theta: np.ndarray
    w_theta: np.ndarray
    azimuth: np.ndarray
    w_azimuth: np.ndarray
    d: int

    def sphere_measure_check(self) -> float:
        """Quadrature value of the full sphere measure (b == 1)."""
        s = float(np.sum(self.w_theta * np.sin(self.theta) ** (self.d - 2)))
        return s * float(np.sum(self.w_azimuth))


def angular_quadrature(kernel: CollisionKernel, cover_full_range: bool = True) -> AngularQuadrature:
    """Build the graded theta rule and the azimuthal rule for a kernel.

    n_theta nodes cover the profile support [theta_min, pi/2] with a
    60/40 split between the log-graded and uniform segments; a coarser
    uniform segment extends to pi when cover_full_range is set, so that
    the rule integrates the plain sphere measure even though the profile
    vanishes there.
    """
    tmin, n = kernel.theta_min, kernel.n_theta
    brk = min(_GRADE_BREAK, math.pi / 2)
    nodes, weights = [], []
    n_uni = n
    if tmin < brk:
        n_graded = min(max(int(round(0.6 * n)), 2), n - 2)
        n_uni = n - n_graded
        du = math.log(brk / tmin) / n_graded
        th = tmin * np.exp((np.arange(n_graded) + 0.5) * du)
        nodes.append(th)
        weights.append(du * th)  # dtheta = theta du
    else:
        brk = tmin
    dth = (math.pi / 2 - brk) / n_uni
    nodes.append(brk + (np.arange(n_uni) + 0.5) * dth)
    weights.append(np.full(n_uni, dth))
    if cover_full_range:
        n_tail = max(4, n // 2)
        dtail = (math.pi / 2) / n_tail
        nodes.append(math.pi / 2 + (np.arange(n_tail) + 0.5) * dtail)
        weights.append(np.full(n_tail, dtail))
    theta = np.concatenate(nodes)
    w_theta = np.concatenate(weights)
    if kernel.d == 3:
        m = kernel.n_omega
        azimuth = (np.arange(m) + 0.5) * (2.0 * math.pi / m)
        w_azimuth = np.full(m, 2.0 * math.pi / m)
    else:
        azimuth = np.array([0.0, math.pi])
        w_azimuth = np.array([1.0, 1.0])
    return AngularQuadrature(theta=theta, w_theta=w_theta, azimuth=azimuth,
                             w_azimuth=w_azimuth, d=kernel.d)


def _sphere_l1(kernel: CollisionKernel, profile_values: np.ndarray, quad: AngularQuadrature) -> float:
    """L1 norm over the sphere of a profile given at the theta nodes."""
    integrand = profile_values * np.sin(quad.theta) ** (kernel.d - 2)
    return subsphere_measure(kernel.d) * float(np.sum(quad.w_theta * integrand))


def b_norms(kernel: CollisionKernel) -> tuple[float, float, float]:
    """Sphere L1 norms derived from the profile, by the graded quadrature.

    Returns (norm of b_tilde, integral of b * sin^2(theta/2) over the
    sphere, norm of b_{s-1}). All three stay finite as theta_min shrinks:
    each integrand behaves like theta^(1-2s) near zero.
    """
    quad = angular_quadrature(kernel, cover_full_range=False)
    th = quad.theta
    n_tilde = _sphere_l1(kernel, b_tilde(kernel, th), quad)
    n_sin2 = _sphere_l1(kernel, b_profile(kernel, th) * np.sin(th / 2.0) ** 2, quad)
    n_sm1 = _sphere_l1(kernel, b_s_minus_1(kernel, th), quad)
    return n_tilde, n_sin2, n_sm1
