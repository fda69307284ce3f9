"""Stationary planar fronts, their dispersion relations and Hopf curves.

Fronts are pinned so that they cross the threshold at x = 0 and connect the
plateau w_e - w_i + I_0 (x -> -inf) to 0 (x -> +inf).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from .hopf import (BifurcationCurve, DelayRelation, HopfPoint, characteristic_G, golden_minimize, hopf_from_rhs,
                   scan_roots_vectorized, speed_sweep)
from .kernel import (InputProfile, KernelParams, NoInput, SigmoidFront, J1, connectivity_integral_1d,
                     input_derivative, input_value, kernel_transverse_transform)

RTM_TOL = 1e-12


def front_threshold(kernel: KernelParams, I_0=0.0) -> float:
    """Compatibility condition between threshold and connectivity for a front crossing at 0."""
    return 0.5 * (kernel.w_e - kernel.w_i) + 0.5 * I_0


@dataclass(frozen=True)
class FrontSolution:
    kind: str
    kernel: KernelParams
    input: InputProfile
    theta: float
    a: Optional[float] = None
    gradients: Dict[float, float] = field(default_factory=dict)

    @property
    def crossings(self) -> Tuple[float, ...]:
        if self.kind == "monotonous":
            return (0.0,)
        return (-self.a, 0.0, self.a)

    @property
    def I_0(self) -> float:
        return float(getattr(self.input, "I_0", 0.0))

    @property
    def plateau(self) -> float:
        return self.kernel.w_e - self.kernel.w_i + self.I_0

    def profile(self, x):
        return front_profile(self, x)

    def derivative(self, x):
        return front_derivative(self, x)


def _tail(kernel, x):
    """int_x^inf J_1(|y|) dy."""
    return connectivity_integral_1d(kernel, x, math.inf) if np.ndim(x) == 0 else \
        connectivity_integral_1d(kernel, np.asarray(x, dtype=float), np.full(np.shape(x), math.inf))


def front_profile(front: FrontSolution, x):
    x = np.asarray(x, dtype=float)
    k = front.kernel
    if front.kind == "monotonous":
        out = _tail(k, x)
    else:
        a = front.a
        out = connectivity_integral_1d(k, x - a, x) + _tail(k, x + a)
    out = out + input_value(front.input, x)
    return out if np.ndim(out) else float(out)


def front_derivative(front: FrontSolution, x):
    x = np.asarray(x, dtype=float)
    k = front.kernel
    if front.kind == "monotonous":
        out = -J1(k, x)
    else:
        a = front.a
        out = J1(k, x) - J1(k, x - a) - J1(k, x + a)
    out = out + input_derivative(front.input, x)
    return out if np.ndim(out) else float(out)


def _check_theta(kernel, I_0, theta):
    expected = front_threshold(kernel, I_0)
    if theta is None:
        return expected
    if abs(theta - expected) > RTM_TOL * max(1.0, abs(expected)):
        raise ValueError("threshold %.15g incompatible with a front crossing at 0; expected %.15g"
                         % (theta, expected))
    return expected


def build_monotonous_front(kernel: KernelParams, inp: InputProfile = NoInput(), theta=None,
                           check_extent=None, n_check=4001, require_monotone=True) -> FrontSolution:
    """Monotonous front V(x) = int_x^inf J_1 + I(x).

    Raises ``ValueError`` when V is not non-increasing on the check grid
    (a three-crossing front may exist instead).  With ``require_monotone=False``
    only the crossing at 0 is checked; the linear analysis at that crossing is
    still well defined, which matters for inverse Mexican hats close to the
    lower end of the Hopf input interval.
    """
    I_0 = float(getattr(inp, "I_0", 0.0))
    theta = _check_theta(kernel, I_0, theta)
    if kernel.w_e - kernel.w_i + I_0 <= theta:
        raise ValueError("plateau w_e - w_i + I_0 must exceed theta")
    front = FrontSolution("monotonous", kernel, inp, theta)
    if check_extent is None:
        check_extent = 10 * kernel.max_width
    xs = np.linspace(-check_extent, check_extent, n_check)
    dv = front_derivative(front, xs)
    if require_monotone and np.any(dv > 1e-14):
        raise ValueError("monotonicity violated (max V' = %.3g); try build_three_crossing_front"
                         % float(np.max(dv)))
    g0 = front_derivative(front, 0.0)
    if not g0 < 0:
        raise ValueError("front gradient at the crossing must be negative")
    return FrontSolution("monotonous", kernel, inp, theta, None, {0.0: float(g0)})


def count_crossings(front: FrontSolution, extent=None, n=20001):
    if extent is None:
        extent = 10 * front.kernel.max_width
    xs = np.linspace(-extent, extent, n)
    v = front_profile(front, xs) - front.theta
    s = np.sign(v)
    s = s[s != 0]
    return int(np.count_nonzero(s[1:] != s[:-1])), xs, v


def build_three_crossing_front(kernel: KernelParams, theta=None, inp: InputProfile = NoInput(),
                               a_max=None, n_grid=4000) -> FrontSolution:
    """Front crossing theta at -a, 0 and a; ``a`` solves int_a^{2a} J_1 + (I(-a) - I(a))/2 = 0."""
    I_0 = float(getattr(inp, "I_0", 0.0))
    theta = _check_theta(kernel, I_0, theta)
    if a_max is None:
        a_max = 10 * kernel.max_width

    def g(a):
        return (connectivity_integral_1d(kernel, a, 2 * a)
                + 0.5 * (input_value(inp, -a) - input_value(inp, a)))

    grid = np.linspace(a_max / n_grid, a_max, n_grid)
    roots = scan_roots_vectorized(g, grid, xtol=1e-15)
    if not roots:
        raise ValueError("no three-crossing front for these parameters")
    last_err = "no three-crossing front for these parameters"
    scale = kernel.w_e / kernel.sigma_e + kernel.w_i / kernel.sigma_i + I_0 * getattr(inp, "s", 0.0)
    for a in roots:
        h = 1e-6 * a
        slope = (g(a + h) - g(a - h)) / (2 * h)
        if abs(slope) < 1e-8 * scale:
            # erf saturation makes g vanish to rounding for large a; not a genuine root
            continue
        front = FrontSolution("three_crossing", kernel, inp, theta, float(a))
        n_cross, _, _ = count_crossings(front)
        if n_cross != 3:
            last_err = "profile crosses the threshold %d times (a=%.6g)" % (n_cross, a)
            continue
        grads = {x: float(front_derivative(front, x)) for x in (-a, 0.0, a)}
        return FrontSolution("three_crossing", kernel, inp, theta, float(a), grads)
    raise ValueError(last_err)


# -- monotonous fronts, one dimension ---------------------------------------------


def front_ratio_1d(front: FrontSolution) -> float:
    """J_1(0) / |V'(0)| = J_1(0) / (J_1(0) - I'(0))."""
    J0 = float(J1(front.kernel, 0.0))
    return J0 / (J0 - float(input_derivative(front.input, 0.0)))


def front_hopf_1d(front: FrontSolution, branch=0) -> Optional[HopfPoint]:
    """Hopf point of a monotonous 1d front (independent of the propagation speed)."""
    if front.kind != "monotonous":
        raise ValueError("front_hopf_1d needs a monotonous front")
    R = front_ratio_1d(front)
    if not R < -1:
        return None
    omega, tau = hopf_from_rhs(complex(R), branch)
    return HopfPoint(omega, tau, math.inf, "sym_plus", branch,
                     residual=abs(characteristic_G(1j * omega, tau) - R))


def front_dispersion_residual_1d(front: FrontSolution, tau_D, lam):
    return characteristic_G(np.asarray(lam, dtype=complex), tau_D) - front_ratio_1d(front)


def front_hopf_input_interval(kernel: KernelParams, s) -> Tuple[float, float]:
    """(I_m, I_M) = (-4 J_1(0)/s, -8 J_1(0)/s): inputs for which a monotonous front has a Hopf point."""
    J0 = float(J1(kernel, 0.0))
    return -4 * J0 / s, -8 * J0 / s


# -- transverse instabilities ---------------------------------------------------------


def front_transverse_psi(front: FrontSolution, ell):
    """Psi(|l|): right-hand side of the dispersion relation for transverse wave number ``ell``."""
    return kernel_transverse_transform(front.kernel, ell) / abs(front.gradients[0.0])


def _transverse_front(kernel: KernelParams):
    J0 = float(J1(kernel, 0.0))
    if not J0 > 0:
        raise ValueError("transverse analysis needs J_1(0) > 0 (monotonous input-free front)")
    return FrontSolution("monotonous", kernel, NoInput(), front_threshold(kernel), None, {0.0: -J0})


def transverse_front(kernel: KernelParams) -> FrontSolution:
    """Input-free monotonous planar front used for the transverse analysis."""
    return _transverse_front(kernel)


def front_transverse_hopf(front: FrontSolution, ell_max=None) -> Optional[HopfPoint]:
    if front.I_0 != 0:
        raise ValueError("transverse analysis is input-free")
    if ell_max is None:
        ell_max = 20.0 / min(front.kernel.sigma_e, front.kernel.sigma_i)
    l0, psi_min = golden_minimize(lambda l: front_transverse_psi(front, l), 0.0, ell_max, n_scan=2000,
                                   vectorized=True)
    if not psi_min < -1:
        return None
    omega, tau = hopf_from_rhs(complex(psi_min))
    return HopfPoint(omega, tau, math.inf, "transverse", 0, l0=l0,
                     residual=abs(characteristic_G(1j * omega, tau) - psi_min))


def transverse_hopf_curve(w_e, w_i, sigma_e, sigma_i_values, d=2):
    """Transverse Hopf curve tau_D(sigma_i) of the input-free front."""
    curve = BifurcationCurve("sigma_i", label="DF")
    for si in np.asarray(sigma_i_values, dtype=float):
        k = KernelParams(w_e, sigma_e, w_i, si, d)
        try:
            front = _transverse_front(k)
        except ValueError:
            curve.append(si, None)
            continue
        curve.append(si, front_transverse_hopf(front))
    return curve


# -- three-crossing fronts -------------------------------------------------------------


@dataclass(frozen=True)
class FrontHopfSystemConstants:
    a: float
    J0: float
    Ja: float
    J2a: float
    gamma1: float
    gamma2: float

    def alpha(self, E=1.0):
        return (self.gamma1 + self.gamma2) * self.J0 + self.gamma1 * self.J2a * np.asarray(E)

    def beta(self, E=1.0):
        return self.gamma1 * self.gamma2 * (self.J0 ** 2 + (self.J0 * self.J2a - 2 * self.Ja ** 2) * np.asarray(E))

    def theta_roots(self, E=1.0):
        """Theta_+/-: the two roots of G^2 - alpha G + beta = 0 (principal square root)."""
        al = np.asarray(self.alpha(E), dtype=complex)
        disc = np.sqrt(al ** 2 - 4 * self.beta(E) + 0j)
        return np.stack([(al + disc) / 2, (al - disc) / 2])

    def matrix(self, G, E=1.0):
        """The 3x3 system acting on (p(-a), p(0), p(a))."""
        E = complex(E)
        Eh = np.sqrt(E) if E != 1 else 1.0
        g1, g2 = self.gamma1, self.gamma2
        return np.array([
            [G - g1 * self.J0, -g2 * self.Ja * Eh, -g1 * self.J2a * E],
            [-g1 * self.Ja * Eh, G - g2 * self.J0, -g1 * self.Ja * Eh],
            [-g1 * self.J2a * E, -g2 * self.Ja * Eh, G - g1 * self.J0],
        ], dtype=complex)


def three_crossing_constants(front: FrontSolution) -> FrontHopfSystemConstants:
    if front.kind != "three_crossing":
        raise ValueError("needs a three-crossing front")
    if front.I_0 != 0:
        raise ValueError("three-crossing stability analysis is only available without input")
    k, a = front.kernel, front.a
    J0, Ja, J2a = float(J1(k, 0.0)), float(J1(k, a)), float(J1(k, 2 * a))
    d1 = J0 + J2a - Ja
    d2 = J0 - 2 * Ja
    if not (d1 > 0 and d2 > 0):
        raise ValueError("gamma positivity violated: J0+J2a-Ja=%.6g, J0-2Ja=%.6g" % (d1, d2))
    return FrontHopfSystemConstants(a, J0, Ja, J2a, 1.0 / d1, 1.0 / d2)


class AsymFrontRelation(DelayRelation):
    """G = gamma_1 (J_1(0) - J_1(2a) E)  (curve Y)."""

    mode = "asym_minus"

    def __init__(self, consts: FrontHopfSystemConstants):
        super().__init__(consts.a)
        self.k = consts

    def g_roots(self, E):
        return self.k.gamma1 * (self.k.J0 - self.k.J2a * np.asarray(E))

    def xi(self, G):
        return (self.k.J0 - np.asarray(G) / self.k.gamma1) / self.k.J2a

    def bound(self):
        return self.k.gamma1 * (abs(self.k.J0) + abs(self.k.J2a))


class SymFrontRelation(DelayRelation):
    """G^2 - alpha(E) G + beta(E) = 0  (curve Z)."""

    mode = "sym_plus"

    def __init__(self, consts: FrontHopfSystemConstants):
        super().__init__(consts.a)
        self.k = consts

    def g_roots(self, E):
        return self.k.theta_roots(E)

    def xi(self, G):
        k = self.k
        G = np.asarray(G)
        num = G ** 2 - (k.gamma1 + k.gamma2) * k.J0 * G + k.gamma1 * k.gamma2 * k.J0 ** 2
        den = k.gamma1 * k.J2a * G + k.gamma1 * k.gamma2 * (2 * k.Ja ** 2 - k.J0 * k.J2a)
        return num / den

    def bound(self):
        # |roots| <= max(1, |alpha| + |beta|) for any |E| <= 1 (Cauchy bound)
        k = self.k
        al = (k.gamma1 + k.gamma2) * abs(k.J0) + k.gamma1 * abs(k.J2a)
        be = k.gamma1 * k.gamma2 * (k.J0 ** 2 + abs(k.J0 * k.J2a - 2 * k.Ja ** 2))
        return 1.0 + max(al, be)


def three_crossing_dispersion(front: FrontSolution, delays, lam):
    """(residual1, residual2) of the two factors of the determinant."""
    k = three_crossing_constants(front)
    lam = complex(lam)
    G = complex(characteristic_G(lam, delays.tau_D))
    E = complex(np.exp(-2 * lam * k.a / delays.c)) if math.isfinite(delays.c) else 1.0
    r1 = G - k.gamma1 * (k.J0 - k.J2a * E)
    r2 = G * G - complex(k.alpha(E)) * G + complex(k.beta(E))
    return r1, r2


def three_crossing_hopf_constant(front: FrontSolution, branch=0) -> List[HopfPoint]:
    """Constant-delay Hopf points: asymmetric (curve Y) and both symmetric roots Theta_+/-."""
    k = three_crossing_constants(front)
    out = []
    for rel in (AsymFrontRelation(k), SymFrontRelation(k)):
        roots = np.atleast_1d(rel.g_roots(np.array(1.0 + 0j)))
        for idx, R in enumerate(roots):
            sol = hopf_from_rhs(complex(R), branch)
            if sol is None:
                continue
            omega, tau = sol
            r1, r2 = three_crossing_dispersion(front, _ConstDelay(tau), 1j * omega)
            resid = abs(r1) if rel.mode == "asym_minus" else abs(r2)
            out.append(HopfPoint(omega, tau, math.inf, rel.mode, branch,
                                 n=(None if rel.mode == "asym_minus" else idx), residual=resid))
    return sorted(out, key=lambda p: p.tau_D)


@dataclass(frozen=True)
class _ConstDelay:
    tau_D: float
    c: float = math.inf


def three_crossing_relations(front: FrontSolution):
    k = three_crossing_constants(front)
    return {"Y": AsymFrontRelation(k), "Z": SymFrontRelation(k)}


def three_crossing_hopf_propagation(front: FrontSolution, speeds=None, omegas=None, n_max=3):
    """Hopf curves of the three-crossing front with propagation delays.

    Returns ``{"Y": (first_curve, traced), "Z": (first_curve, traced)}`` where
    ``first_curve`` is the smallest-delay curve over ``speeds`` and ``traced``
    the omega-parametrised point cloud (all branches n <= n_max).
    """
    if speeds is None:
        speeds = np.logspace(-1, 3, 200)
    out = {}
    for name, rel in three_crossing_relations(front).items():
        first = speed_sweep(rel, speeds, label=name)
        traced = None
        if omegas is not None:
            traced = BifurcationCurve("omega", label=name)
            for p in rel.trace_omega(omegas, n_max=n_max):
                traced.append(p.omega, p)
            traced.sort()
        out[name] = (first, traced)
    return out


def three_crossing_operator_oracle(front: FrontSolution):
    """Eigenvalues of the non-delayed operator restricted to the crossings (3x3 matrix)."""
    k = front.kernel
    a = front.a
    xs = np.array([-a, 0.0, a])
    # gradients by central differences of the profile, independent of the closed forms
    h = 1e-5 * a
    grads = np.abs((front_profile(front, xs + h) - front_profile(front, xs - h)) / (2 * h))
    K = J1(k, xs[:, None] - xs[None, :]) / grads[None, :]
    return np.linalg.eigvals(K) - 1.0


def front_eigenmode(front: FrontSolution, hopf: HopfPoint, x):
    """Destabilised mode sampled on ``x``, normalised to unit maximum modulus."""
    x = np.asarray(x, dtype=float)
    k = front.kernel
    lam = hopf.lam
    c = hopf.c

    def dec(r):
        return np.exp(-lam * np.abs(r) / c) if math.isfinite(c) else np.ones_like(r, dtype=complex)

    if front.kind == "monotonous":
        p = J1(k, x) * dec(x)
    elif hopf.mode == "asym_minus":
        a = front.a
        p = J1(k, x - a) * dec(x - a) - J1(k, x + a) * dec(x + a)
    else:
        a = front.a
        p = J1(k, x - a) * dec(x - a) + J1(k, x + a) * dec(x + a) + 2 * J1(k, x) * dec(x)
    p = np.asarray(p, dtype=complex)
    m = np.max(np.abs(p))
    return p / m if m > 0 else p


def monotonous_hopf_curve(kernel: KernelParams, s, I0_values):
    """tau_D(I_0) for the 1d monotonous front with a sigmoid input of stiffness ``s``."""
    curve = BifurcationCurve("I_0", label="DelayFront1")
    for I0 in np.asarray(I0_values, dtype=float):
        try:
            front = build_monotonous_front(kernel, SigmoidFront(float(I0), s))
        except ValueError:
            curve.append(I0, None)
            continue
        curve.append(I0, front_hopf_1d(front))
    return curve


def warn_theta_conflict(kernel, I_0, theta):
    expected = front_threshold(kernel, I_0)
    if theta is not None and abs(theta - expected) > RTM_TOL * max(1.0, abs(expected)):
        warnings.warn("supplied theta=%g conflicts with the front condition; using %g" % (theta, expected))
    return expected
