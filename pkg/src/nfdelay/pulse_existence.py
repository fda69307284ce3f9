"""Stationary radially symmetric pulses (bumps) of the Heaviside neural field."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import List

import numpy as np
from scipy.special import chdtr, chndtr

from .hopf import scan_roots_vectorized
from .kernel import (GaussianPulse, KernelParams, connectivity, connectivity_antiderivative_1d,
                     input_derivative, input_value, J1)

TANGENCY_TOL = 1e-10


class TangencyError(ValueError):
    """The pulse gradient vanishes on the threshold sphere."""


def _as_float(x):
    x = np.asarray(x, dtype=float)
    return x if x.ndim else float(x)


def _gauss_ball_mass(r, a, sigma, d):
    """Mass of the unit Gaussian G_d(., sigma) centred at distance r inside the ball B(0, a).

    G_d(., sigma) is the density of N(0, sigma^2/2 I_d), so the mass is a
    (non-central) chi-square CDF with d degrees of freedom.
    """
    r = np.asarray(r, dtype=float)
    a = np.asarray(a, dtype=float)
    x = 2.0 * a ** 2 / sigma ** 2
    nc = 2.0 * r ** 2 / sigma ** 2
    nc_b, x_b = np.broadcast_arrays(nc, x)
    out = np.empty(nc_b.shape)
    zero = nc_b == 0
    out[zero] = chdtr(d, x_b[zero])
    out[~zero] = chndtr(x_b[~zero], d, nc_b[~zero])
    return out


def ball_overlap(kernel: KernelParams, r, a):
    """M(r, a): integral of J_d(|x - y|) over the ball of radius ``a``, for |x| = r."""
    if np.any(np.asarray(a) < 0):
        raise ValueError("half-width must be non-negative")
    r = np.abs(np.asarray(r, dtype=float))
    a = np.asarray(a, dtype=float)
    if kernel.d == 1:
        F = connectivity_antiderivative_1d
        return _as_float(F(kernel, r + a) - F(kernel, r - a))
    out = (kernel.w_e * _gauss_ball_mass(r, a, kernel.sigma_e, kernel.d)
           - kernel.w_i * _gauss_ball_mass(r, a, kernel.sigma_i, kernel.d))
    return _as_float(np.where(a == 0, 0.0, out))


def circle_integral(kernel: KernelParams, a, weight=None, tol=1e-13, n0=128, n_max=1 << 16):
    """Periodic trapezoid rule for int_0^{2pi} J_2(2a|sin(phi/2)|) w(phi) dphi.

    The node count is doubled until two successive results agree to ``tol``.
    """
    k2 = kernel.with_dim(2)
    if weight is None:
        weight = lambda phi: 1.0  # noqa: E731
    prev = None
    n = n0
    while True:
        phi = np.arange(n) * (2 * math.pi / n)
        vals = connectivity(k2, 2 * a * np.abs(np.sin(phi / 2))) * weight(phi)
        val = float(np.sum(vals) * (2 * math.pi / n))
        if prev is not None and abs(val - prev) <= tol * max(1.0, abs(val)):
            return val
        if n >= n_max:
            return val
        prev, n = val, 2 * n


def _overlap_radial_derivative(kernel: KernelParams, a):
    """d/dr M(r, a) at r = a, via the boundary form of the gradient integral."""
    if kernel.d == 1:
        return float(J1(kernel, 2 * a) - J1(kernel, 0.0))
    if kernel.d == 2:
        return -a * circle_integral(kernel, a, np.cos)
    return _richardson_derivative(lambda r: ball_overlap(kernel, r, a), a, 1e-3 * a)


def _richardson_derivative(f, x, h):
    def d5(h):
        return (-f(x + 2 * h) + 8 * f(x + h) - 8 * f(x - h) + f(x - 2 * h)) / (12 * h)

    return (16 * d5(h / 2) - d5(h)) / 15


@dataclass(frozen=True)
class PulseSolution:
    a: float
    kernel: KernelParams
    input: GaussianPulse
    theta: float
    u_prime_signed: float
    degenerate: bool = False
    single_crossing: bool = True

    @property
    def d(self):
        return self.kernel.d

    @property
    def u_prime_a(self) -> float:
        return abs(self.u_prime_signed)

    def profile(self, r):
        return pulse_profile(self, r)

    def residual(self) -> float:
        return float(ball_overlap(self.kernel, self.a, self.a) + input_value(self.input, self.a) - self.theta)


def halfwidth_equation(kernel: KernelParams, inp: GaussianPulse, theta, a):
    """g(a) = M(a, a) + I(a) - theta."""
    return ball_overlap(kernel, a, a) + input_value(inp, a) - theta


def default_a_max(kernel: KernelParams, inp: GaussianPulse) -> float:
    return 10.0 * max(kernel.sigma_e, kernel.sigma_i, inp.sigma)


def pulse_from_halfwidth(kernel: KernelParams, inp: GaussianPulse, theta, a, degenerate=False,
                         check_crossing=True) -> PulseSolution:
    uprime = _overlap_radial_derivative(kernel, a) + float(input_derivative(inp, a))
    sol = PulseSolution(float(a), kernel, inp, float(theta), float(uprime), degenerate)
    if check_crossing:
        sol = PulseSolution(sol.a, kernel, inp, sol.theta, sol.u_prime_signed, degenerate,
                            crosses_threshold_once(sol))
    return sol


def solve_halfwidth(kernel: KernelParams, inp: GaussianPulse, theta, n_grid=2000, a_max=None) -> List[PulseSolution]:
    """All pulse half-widths in (0, a_max], by sign scan plus Brent polishing.

    Double roots (the profile touching theta tangentially) do not change sign;
    they are detected as near-zero local minima of |g| and returned with
    ``degenerate=True``.
    """
    if theta <= 0:
        raise ValueError("threshold must be positive")
    if a_max is None:
        a_max = default_a_max(kernel, inp)
    grid = np.linspace(a_max / n_grid, a_max, n_grid)
    g = lambda a: halfwidth_equation(kernel, inp, theta, a)  # noqa: E731
    roots = [(float(a), False) for a in scan_roots_vectorized(g, grid, xtol=1e-15)]

    vals = np.abs(np.asarray(g(grid)))
    scale = max(1.0, abs(theta))
    for k in range(1, n_grid - 1):
        if vals[k] <= vals[k - 1] and vals[k] <= vals[k + 1] and vals[k] < 1e-6 * scale:
            from scipy.optimize import minimize_scalar
            res = minimize_scalar(lambda a: abs(g(a)), bounds=(grid[k - 1], grid[k + 1]), method="bounded",
                                  options={"xatol": 1e-14})
            if abs(res.fun) < 1e-9 * scale and all(abs(res.x - r) > 2 * (grid[1] - grid[0]) for r, _ in roots):
                roots.append((float(res.x), True))
    roots.sort()
    return [pulse_from_halfwidth(kernel, inp, theta, a, degenerate) for a, degenerate in roots]


def input_amplitude_for_halfwidth(kernel: KernelParams, sigma, theta, a):
    """Input amplitude I_0 for which a pulse of half-width ``a`` exists."""
    a = np.asarray(a, dtype=float)
    # exp overflows for a >> sigma; the resulting +-inf correctly marks "no finite amplitude"
    with np.errstate(over="ignore", invalid="ignore"):
        return _as_float(np.exp((a / sigma) ** 2) * (theta - ball_overlap(kernel, a, a)))


def pulse_profile(sol: PulseSolution, r):
    return _as_float(ball_overlap(sol.kernel, r, sol.a) + input_value(sol.input, np.abs(r)))


def pulse_gradient_at_a(sol: PulseSolution) -> float:
    """|U'(a)|; raises :class:`TangencyError` when it (numerically) vanishes."""
    if sol.u_prime_a < TANGENCY_TOL:
        raise TangencyError("pulse gradient %.3g vanishes at the threshold crossing (a=%.6g)"
                            % (sol.u_prime_a, sol.a))
    return sol.u_prime_a


def crosses_threshold_once(sol: PulseSolution, n=4000) -> bool:
    r_max = default_a_max(sol.kernel, sol.input)
    r = np.linspace(0.0, r_max, n)
    u = pulse_profile(sol, r)
    near = np.abs(r - sol.a) < 2 * r_max / n
    inside = (r < sol.a) & ~near
    outside = (r > sol.a) & ~near
    return bool(np.all(u[inside] > sol.theta) and np.all(u[outside] < sol.theta))


def static_stability_sign(kernel: KernelParams, sigma, theta, a, fold_tol=1e-9) -> str:
    """'stable' when dI_0/da > 0, 'unstable' when < 0 and 'fold' near zero (no delays)."""
    if a <= 0:
        raise ValueError("half-width must be positive")
    h = 1e-5 * a
    slope = (input_amplitude_for_halfwidth(kernel, sigma, theta, a + h)
             - input_amplitude_for_halfwidth(kernel, sigma, theta, a - h)) / (2 * h)
    if abs(slope) < fold_tol:
        return "fold"
    return "stable" if slope > 0 else "unstable"


def existence_curve(kernel: KernelParams, sigma, theta, a_values):
    """Rows ``(a, I_0, stability, d)`` of the I_0(a) existence curve."""
    rows = []
    for a in np.asarray(a_values, dtype=float):
        rows.append((float(a), float(input_amplitude_for_halfwidth(kernel, sigma, theta, a)),
                     static_stability_sign(kernel, sigma, theta, a), kernel.d))
    return rows


def write_existence_csv(path, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("a", "I_0", "stability_sign", "d"))
        for a, I0, s, d in rows:
            w.writerow(("%.12g" % a, "%.12g" % I0, s, d))
