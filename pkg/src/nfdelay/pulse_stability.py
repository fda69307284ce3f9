"""Linear stability of pulses: dispersion relations and delay-induced Hopf points."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy.integrate import quad
from scipy.special import gamma as gamma_fn

from .hopf import (BifurcationCurve, DelayRelation, HopfPoint, characteristic_G, hopf_from_rhs,
                   scan_roots_vectorized, speed_sweep)
from .kernel import DelayModel, GaussianPulse, KernelParams, J1, connectivity, input_derivative
from .pulse_existence import (PulseSolution, _richardson_derivative, ball_overlap, circle_integral,
                              input_amplitude_for_halfwidth, pulse_from_halfwidth, pulse_gradient_at_a,
                              pulse_profile)

__all__ = [
    "HopfPoint", "BifurcationCurve", "PulseRelation1d", "dispersion_residual_1d", "hopf_constant_delay_1d",
    "hopf_region_boundaries_1d", "eigenmode_1d", "hopf_propagation_curve_1d", "first_hopf_curve_1d",
    "phi_radial_nd", "hopf_radial_nd", "angular_mode_coefficient_2d", "hopf_angular_2d",
    "linearized_operator_oracle", "circle_operator_oracle", "hopf_curve_by_halfwidth",
]

_SIGN = {"sym_plus": 1.0, "asym_minus": -1.0, "+": 1.0, "-": -1.0}


def _mode_name(mode):
    if mode in ("+", "sym_plus"):
        return "sym_plus"
    if mode in ("-", "asym_minus"):
        return "asym_minus"
    raise ValueError("mode must be 'sym_plus' or 'asym_minus', got %r" % (mode,))


class PulseRelation1d(DelayRelation):
    """(lambda+1) e^{lambda tau} = (J_1(0) +/- J_1(2a) E) / |U'(a)|."""

    def __init__(self, sol: PulseSolution, mode="sym_plus"):
        super().__init__(sol.a)
        self.mode = _mode_name(mode)
        self.sign = _SIGN[self.mode]
        self.up = pulse_gradient_at_a(sol)
        self.J0 = float(J1(sol.kernel, 0.0))
        self.J2a = float(J1(sol.kernel, 2 * sol.a))

    def g_roots(self, E):
        return (self.J0 + self.sign * self.J2a * np.asarray(E)) / self.up

    def xi(self, G):
        return self.sign * (self.up * np.asarray(G) - self.J0) / self.J2a

    def bound(self):
        return (abs(self.J0) + abs(self.J2a)) / self.up


def dispersion_residual_1d(sol: PulseSolution, delays: DelayModel, lam, mode="sym_plus"):
    rel = PulseRelation1d(sol, mode)
    lam = np.asarray(lam, dtype=complex)
    E = rel.E_of(lam, delays.c)
    out = characteristic_G(lam, delays.tau_D) - rel.g_roots(E)
    return complex(out) if out.ndim == 0 else out


def hopf_constant_delay_1d(sol: PulseSolution, mode="sym_plus", branch=0) -> Optional[HopfPoint]:
    """Hopf point of the 1d pulse for a purely constant delay, or None."""
    rel = PulseRelation1d(sol, mode)
    pts = rel.constant_delay_hopf(branch)
    return pts[0] if pts else None


def hopf_propagation_curve_1d(sol: PulseSolution, mode="sym_plus", omegas=None, n_max=3):
    """omega-parametrised Hopf points in the (c, tau_D) plane (all branches n <= n_max)."""
    rel = PulseRelation1d(sol, mode)
    if omegas is None:
        omegas = np.logspace(-3, 2, 2000)
    curve = BifurcationCurve("omega", label=rel.mode)
    for p in rel.trace_omega(omegas, n_max=n_max):
        curve.append(p.omega, p)
    return curve.sort()


def first_hopf_curve_1d(sol: PulseSolution, mode="sym_plus", speeds=None):
    """First (smallest tau_D) Hopf curve of the 1d pulse as a function of c."""
    if speeds is None:
        speeds = np.logspace(-1, 3, 200)
    return speed_sweep(PulseRelation1d(sol, mode), speeds)


def eigenmode_1d(sol: PulseSolution, hopf: HopfPoint, x):
    """Destabilised mode p_+ (even) or p_- (odd), normalised to p(a) = 1."""
    sign = _SIGN[_mode_name(hopf.mode)]
    lam = hopf.lam
    x = np.asarray(x, dtype=float)

    def p(xx):
        decay_m = np.exp(-lam * np.abs(xx - sol.a) / hopf.c) if math.isfinite(hopf.c) else 1.0
        decay_p = np.exp(-lam * np.abs(xx + sol.a) / hopf.c) if math.isfinite(hopf.c) else 1.0
        return J1(sol.kernel, xx - sol.a) * decay_m + sign * J1(sol.kernel, xx + sol.a) * decay_p

    return p(x) / p(np.array(sol.a))


# -- existence region of Hopf points ---------------------------------------------


@dataclass(frozen=True)
class HopfRegion1d:
    theta: float
    I0_star: Optional[float]
    a_star: Optional[float]
    asym_interval: Optional[Tuple[float, float]]
    asym_halfwidths: Optional[Tuple[float, float]]


def _ratios_along_branch(kernel, sigma, theta, a):
    I0 = input_amplitude_for_halfwidth(kernel, sigma, theta, a)
    # I(a) = theta - M(a, a) on the branch, which avoids exp overflow for wide pulses
    inp_slope = -(2 * a / sigma ** 2) * (theta - ball_overlap(kernel, a, a))
    J0 = J1(kernel, 0.0)
    J2a = J1(kernel, 2 * a)
    up = np.abs(J2a - J0 + inp_slope)
    return I0, (J0 + J2a) / up, (J0 - J2a) / up


def hopf_region_boundaries_1d(kernel: KernelParams, sigma, theta, a_max=None, n_grid=4000) -> HopfRegion1d:
    """Boundaries of the Hopf region along the (increasing) existence branch I_0(a).

    ``I0_star`` is where the symmetric ratio crosses modulus one (omega_+ -> 0);
    the asymmetric interval is the image of the half-widths where
    ``2 (J_1(2a) - J_1(0)) >= |I'(a)|``.
    """
    if a_max is None:
        a_max = 10 * max(kernel.sigma_e, kernel.sigma_i, sigma)
    grid = np.linspace(a_max / n_grid, a_max, n_grid)

    def sym_excess(a):
        return np.abs(_ratios_along_branch(kernel, sigma, theta, a)[1]) - 1.0

    def asym_excess(a):
        return np.abs(_ratios_along_branch(kernel, sigma, theta, a)[2]) - 1.0

    I0_of = lambda a: float(input_amplitude_for_halfwidth(kernel, sigma, theta, a))  # noqa: E731
    roots = scan_roots_vectorized(sym_excess, grid)
    a_star = roots[0] if roots else None
    I0_star = I0_of(a_star) if a_star is not None else None

    asym = scan_roots_vectorized(asym_excess, grid)
    interval = halfwidths = None
    if len(asym) >= 2:
        halfwidths = (asym[0], asym[1])
        interval = (I0_of(asym[0]), I0_of(asym[1]))
    elif len(asym) == 1 and asym_excess(np.array([grid[0]]))[0] > 0:
        halfwidths = (0.0, asym[0])
        interval = (float(theta), I0_of(asym[0]))
    return HopfRegion1d(float(theta), I0_star, a_star, interval, halfwidths)


# -- general dimension --------------------------------------------------------------


def _sphere_area(n):
    """Surface measure of the unit sphere S^n in R^{n+1}."""
    return 2 * math.pi ** ((n + 1) / 2) / gamma_fn((n + 1) / 2)


def _sphere_kernel_integral(kernel: KernelParams, a, weight=None):
    d = kernel.d
    if d == 1:
        w = weight or (lambda phi: 1.0)
        # S^0 = {+1, -1} with counting measure
        return float(J1(kernel, 0.0) * w(0.0) + J1(kernel, 2 * a) * w(math.pi))
    if d == 2:
        return circle_integral(kernel, a, weight)
    if weight is not None:
        raise NotImplementedError("angular weights are only available for d <= 2")
    f = lambda t: connectivity(kernel, 2 * a * math.sin(t / 2)) * math.sin(t) ** (d - 2)  # noqa: E731
    return _sphere_area(d - 2) * quad(f, 0, math.pi, epsabs=1e-14, epsrel=1e-13, limit=200)[0]


def phi_radial_nd(sol: PulseSolution) -> float:
    """Right-hand side Phi_d(a) of the radially symmetric dispersion relation (c = inf)."""
    up = pulse_gradient_at_a(sol)
    return sol.a ** (sol.d - 1) / up * _sphere_kernel_integral(sol.kernel, sol.a)


def hopf_radial_nd(sol: PulseSolution, branch=0) -> Optional[HopfPoint]:
    phi = phi_radial_nd(sol)
    res = hopf_from_rhs(complex(phi), branch)
    if res is None:
        return None
    omega, tau = res
    r = abs(characteristic_G(1j * omega, tau) - phi)
    return HopfPoint(omega, tau, math.inf, "radial", branch, residual=r)


def angular_mode_coefficient_2d(sol: PulseSolution, n: int) -> float:
    """J_n(a) = a/|U'(a)| int_0^{2pi} J_2(2a|sin(phi/2)|) cos(n phi) dphi; J_0 equals Phi_2(a)."""
    if sol.d != 2:
        raise ValueError("angular modes are defined for d = 2")
    if n < 0:
        raise ValueError("angular index must be non-negative")
    up = pulse_gradient_at_a(sol)
    return sol.a / up * circle_integral(sol.kernel, sol.a, lambda phi: np.cos(n * phi))


def hopf_angular_2d(sol: PulseSolution, n: int, branch=0) -> Optional[HopfPoint]:
    Jn = angular_mode_coefficient_2d(sol, n)
    res = hopf_from_rhs(complex(Jn), branch)
    if res is None:
        return None
    omega, tau = res
    r = abs(characteristic_G(1j * omega, tau) - Jn)
    return HopfPoint(omega, tau, math.inf, "radial" if n == 0 else "angular", branch, n=n, residual=r)


# -- oracles ----------------------------------------------------------------------


def _fd_gradient(sol: PulseSolution) -> float:
    return abs(_richardson_derivative(lambda r: pulse_profile(sol, r), sol.a, 1e-3 * sol.a))


def linearized_operator_oracle(sol: PulseSolution, x, return_vectors=False):
    """Eigenvalues of the discretised non-delayed linearised operator of a 1d pulse.

    The Heaviside derivative is represented by point masses at +/-a with weight
    1/|U'(a)|, where |U'(a)| is obtained by finite differences of the profile
    (independently of the closed-form gradient).
    """
    if sol.d != 1:
        raise ValueError("1d oracle; use circle_operator_oracle for d = 2")
    x = np.asarray(x, dtype=float)
    if np.max(np.diff(np.sort(x))) > sol.a / 20:
        warnings.warn("grid spacing exceeds a/20; the oracle may be inaccurate", RuntimeWarning)
    nodes = np.unique(np.concatenate([x, [-sol.a, sol.a]]))
    ia = int(np.argmin(np.abs(nodes - sol.a)))
    im = int(np.argmin(np.abs(nodes + sol.a)))
    up = _fd_gradient(sol)
    A = -np.eye(nodes.size)
    A[:, ia] += J1(sol.kernel, nodes - sol.a) / up
    A[:, im] += J1(sol.kernel, nodes + sol.a) / up
    if return_vectors:
        vals, vecs = np.linalg.eig(A)
        return vals, vecs, nodes
    return np.linalg.eigvals(A)


def circle_operator_oracle(sol: PulseSolution, n_nodes=256):
    """Eigenvalues of the 2d linearised operator restricted to the threshold circle (tau_D = 0)."""
    if sol.d != 2:
        raise ValueError("circle oracle needs d = 2")
    up = _fd_gradient(sol)
    phi = np.arange(n_nodes) * 2 * math.pi / n_nodes
    P = np.stack([np.cos(phi), np.sin(phi)], axis=1) * sol.a
    D = np.linalg.norm(P[:, None, :] - P[None, :, :], axis=2)
    K = sol.a / up * connectivity(sol.kernel, D) * (2 * math.pi / n_nodes)
    return np.sort(np.linalg.eigvalsh(K))[::-1] - 1.0


# -- curves ----------------------------------------------------------------------


def hopf_point_for(sol: PulseSolution, kind="sym_plus", n=None):
    if kind in ("sym_plus", "asym_minus"):
        return hopf_constant_delay_1d(sol, kind)
    if kind == "radial":
        return hopf_radial_nd(sol)
    if kind == "angular":
        return hopf_angular_2d(sol, n)
    raise ValueError("unknown Hopf kind %r" % (kind,))


def hopf_curve_by_halfwidth(kernel: KernelParams, sigma, theta, a_values, kind="sym_plus", n=None):
    """Constant-delay Hopf curve tau_D(I_0), parametrised by the half-width.

    Sweep values are the input amplitudes I_0(a); points are None where the
    destabilising ratio has modulus <= 1 or the pulse is not admissible.
    """
    label = kind if n is None else "%s_n%d" % (kind, n)
    curve = BifurcationCurve("I_0", label=label)
    for a in np.asarray(a_values, dtype=float):
        I0 = float(input_amplitude_for_halfwidth(kernel, sigma, theta, a))
        if I0 < 0:
            continue
        sol = pulse_from_halfwidth(kernel, GaussianPulse(I0, sigma), theta, a, check_crossing=False)
        if sol.u_prime_a < 1e-10:
            curve.append(I0, None)
            continue
        curve.append(I0, hopf_point_for(sol, kind, n))
    return curve.sort()
