"""Connectivity kernels, external inputs, delays and the firing nonlinearity.

All Gaussians are normalized to unit mass,

    G_d(r, sigma) = exp(-r**2 / sigma**2) / (sigma**d * pi**(d/2)),

so that integrating G_d over d-1 transverse coordinates yields G_1, the
one-dimensional Fourier transform in the transverse directions is
exp(-sigma**2 * l**2 / 4), and int_0^y G_1 = erf(y / sigma) / 2.
erf/erfc come from ``scipy.special`` (Cephes, relative error ~1e-16).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np
from scipy.special import erf

SQRT_PI = math.sqrt(math.pi)


@dataclass(frozen=True)
class KernelParams:
    """Difference-of-Gaussians connectivity ``w_e G_d(., s_e) - w_i G_d(., s_i)``."""

    w_e: float
    sigma_e: float
    w_i: float
    sigma_i: float
    d: int = 1

    def __post_init__(self):
        if not (self.sigma_e > 0 and self.sigma_i > 0):
            raise ValueError("kernel widths must be positive, got sigma_e=%r sigma_i=%r"
                             % (self.sigma_e, self.sigma_i))
        if self.w_e < 0 or self.w_i < 0:
            raise ValueError("kernel amplitudes must be non-negative")
        if int(self.d) != self.d or self.d < 1:
            raise ValueError("dimension d must be an integer >= 1, got %r" % (self.d,))

    def with_dim(self, d: int) -> "KernelParams":
        return KernelParams(self.w_e, self.sigma_e, self.w_i, self.sigma_i, d)

    @property
    def max_width(self) -> float:
        return max(self.sigma_e, self.sigma_i)

    def is_inverse_mexican_hat(self) -> bool:
        return connectivity(self.with_dim(1), 0.0) < 0

    def is_mexican_hat(self) -> bool:
        return self.sigma_e < self.sigma_i and connectivity(self, 0.0) > 0


@dataclass(frozen=True)
class NoInput:
    I_0: float = 0.0


@dataclass(frozen=True)
class GaussianPulse:
    """Radial stimulus ``I_0 exp(-r^2/sigma^2)``."""

    I_0: float
    sigma: float

    def __post_init__(self):
        if self.I_0 < 0:
            raise ValueError("input amplitude must be non-negative")
        if self.sigma <= 0:
            raise ValueError("input width must be positive")


@dataclass(frozen=True)
class SigmoidFront:
    """Planar stimulus ``I_0 (1 - 1/(1 + exp(-s e.x)))`` along unit direction ``e``."""

    I_0: float
    s: float
    e: tuple = field(default=(1.0,))

    def __post_init__(self):
        if self.I_0 < 0:
            raise ValueError("input amplitude must be non-negative")
        if self.s <= 0:
            raise ValueError("input stiffness must be positive")
        if not math.isclose(float(np.linalg.norm(self.e)), 1.0, rel_tol=1e-12):
            raise ValueError("front direction must be a unit vector")


InputProfile = Union[NoInput, GaussianPulse, SigmoidFront]


@dataclass(frozen=True)
class DelayModel:
    """Total delay of a displacement z is ``tau_D + |z| / c``."""

    tau_D: float = 0.0
    c: float = math.inf

    def __post_init__(self):
        if self.tau_D < 0:
            raise ValueError("constant delay must be non-negative")
        if not self.c > 0:
            raise ValueError("propagation speed must be positive (or inf)")

    @property
    def finite_speed(self) -> bool:
        return math.isfinite(self.c)

    def total(self, distance):
        if not self.finite_speed:
            return self.tau_D + 0.0 * np.asarray(distance, dtype=float)
        return self.tau_D + np.abs(distance) / self.c


def heaviside(u, theta):
    """Firing rate: 1 where ``u > theta`` and 0 elsewhere."""
    return (np.asarray(u) > theta).astype(float)


def gaussian_d(r, sigma, d=1):
    if sigma <= 0:
        raise ValueError("sigma must be positive, got %r" % (sigma,))
    if d < 1:
        raise ValueError("dimension must be >= 1")
    r = np.asarray(r, dtype=float)
    out = np.exp(-(r / sigma) ** 2) / (sigma ** d * math.pi ** (d / 2))
    return out if out.ndim else float(out)


def connectivity(params: KernelParams, r):
    """Radial connectivity J_d(r)."""
    return (params.w_e * gaussian_d(r, params.sigma_e, params.d)
            - params.w_i * gaussian_d(r, params.sigma_i, params.d))


def J1(params: KernelParams, x):
    """One-dimensional marginal kernel J_1(|x|), whatever ``params.d``."""
    return connectivity(params.with_dim(1), np.abs(x))


def connectivity_antiderivative_1d(params: KernelParams, x):
    """int_0^x J_1(|y|) dy (odd in x)."""
    x = np.asarray(x, dtype=float)
    out = 0.5 * (params.w_e * erf(x / params.sigma_e) - params.w_i * erf(x / params.sigma_i))
    return out if out.ndim else float(out)


def connectivity_integral_1d(params: KernelParams, x_lo, x_hi):
    """Definite integral of J_1(|x|) over ``[x_lo, x_hi]`` (infinite limits allowed)."""
    if np.any(np.asarray(x_lo) > np.asarray(x_hi)):
        raise ValueError("x_lo must not exceed x_hi")
    F = connectivity_antiderivative_1d
    return F(params, x_hi) - F(params, x_lo)


def input_value(profile: InputProfile, x):
    """Stimulus at radius ``x`` (pulses) or at coordinate ``e.x`` (fronts)."""
    x = np.asarray(x, dtype=float)
    if isinstance(profile, GaussianPulse):
        out = profile.I_0 * np.exp(-(x / profile.sigma) ** 2)
    elif isinstance(profile, SigmoidFront):
        # 1 - 1/(1+exp(-s x)) == 1/(1+exp(s x)), written to avoid overflow
        out = profile.I_0 * 0.5 * (1.0 - np.tanh(0.5 * profile.s * x))
    elif isinstance(profile, NoInput):
        out = np.zeros_like(x)
    else:
        raise TypeError("unknown input profile %r" % (profile,))
    return out if out.ndim else float(out)


def input_derivative(profile: InputProfile, x):
    x = np.asarray(x, dtype=float)
    if isinstance(profile, GaussianPulse):
        out = -2.0 * x / profile.sigma ** 2 * profile.I_0 * np.exp(-(x / profile.sigma) ** 2)
    elif isinstance(profile, SigmoidFront):
        out = -profile.I_0 * profile.s / (4.0 * np.cosh(0.5 * profile.s * x) ** 2)
    elif isinstance(profile, NoInput):
        out = np.zeros_like(x)
    else:
        raise TypeError("unknown input profile %r" % (profile,))
    return out if out.ndim else float(out)


def gaussian_transverse_transform(ell, sigma):
    """Fourier transform of the unit-mass Gaussian over the transverse directions."""
    return np.exp(-(sigma * np.asarray(ell, dtype=float)) ** 2 / 4.0)


def kernel_transverse_transform(params: KernelParams, ell):
    """Kernel value on the front line for a transverse wave number ``ell``.

    Equals ``J_1(0)`` at ``ell = 0`` and decays to zero for large ``ell``.
    """
    ell = np.asarray(ell, dtype=float)
    if np.any(ell < 0):
        raise ValueError("transverse wave number must be non-negative")
    out = (params.w_e * gaussian_d(0.0, params.sigma_e, 1) * gaussian_transverse_transform(ell, params.sigma_e)
           - params.w_i * gaussian_d(0.0, params.sigma_i, 1) * gaussian_transverse_transform(ell, params.sigma_i))
    return out if out.ndim else float(out)
