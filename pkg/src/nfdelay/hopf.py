"""Hopf points, bifurcation curves and the root-finding helpers shared by the
pulse and front analyses.

Every delayed dispersion relation handled here can be brought to the form

    G(lambda) = (lambda + 1) exp(lambda tau_D),    E(lambda) = exp(-2 lambda a / c),
    E = Xi(G)   (equivalently G is a root of a polynomial whose coefficients depend on E)

so purely imaginary roots ``lambda = i omega`` satisfy ``|G| = sqrt(1 + omega^2)``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, asdict
from typing import Callable, List, Optional, Sequence

import numpy as np
from scipy.optimize import brentq

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class HopfPoint:
    omega: float
    tau_D: float
    c: float = math.inf
    mode: str = "sym_plus"
    branch: int = 0
    l0: Optional[float] = None
    n: Optional[int] = None
    residual: float = float("nan")

    @property
    def period(self) -> float:
        return TWO_PI / self.omega

    @property
    def lam(self) -> complex:
        return 1j * self.omega


@dataclass
class BifurcationCurve:
    """Ordered samples of Hopf points along a sweep parameter.

    ``points[k]`` is ``None`` where no Hopf point exists for ``values[k]``.
    """

    sweep_parameter: str
    values: List[float] = field(default_factory=list)
    points: List[Optional[HopfPoint]] = field(default_factory=list)
    label: str = ""

    def append(self, value, point):
        self.values.append(float(value))
        self.points.append(point)

    def sort(self):
        order = np.argsort(self.values, kind="stable")
        self.values = [self.values[k] for k in order]
        self.points = [self.points[k] for k in order]
        return self

    def existing(self):
        return [(v, p) for v, p in zip(self.values, self.points) if p is not None]

    def arrays(self):
        """(values, omega, tau_D) arrays with NaN at gaps."""
        v = np.asarray(self.values, dtype=float)
        om = np.array([p.omega if p else np.nan for p in self.points])
        tau = np.array([p.tau_D if p else np.nan for p in self.points])
        return v, om, tau

    def __len__(self):
        return len(self.values)

    def write_csv(self, path):
        write_points_csv(path, self.sweep_parameter, zip(self.values, self.points), self.label)


CSV_FIELDS = ("sweep_value", "omega", "tau_D", "c", "mode", "branch", "l0", "n", "residual")


def _fmt(x):
    if x is None:
        return ""
    if isinstance(x, float):
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return "%.12g" % x
    return str(x)


def write_points_csv(path, sweep_parameter, rows, label=""):
    """Deterministic CSV with one row per (sweep value, Hopf point or gap)."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("curve", "sweep_parameter") + CSV_FIELDS)
        for value, p in rows:
            if p is None:
                w.writerow([label, sweep_parameter, _fmt(float(value))] + [""] * (len(CSV_FIELDS) - 1))
            else:
                d = asdict(p)
                w.writerow([label, sweep_parameter, _fmt(float(value))]
                           + [_fmt(d[k]) for k in CSV_FIELDS[1:]])


def hopf_from_rhs(R: complex, branch: int = 0):
    """Purely imaginary root of ``(i omega + 1) exp(i omega tau) = R``.

    Returns ``(omega, tau)`` with the smallest non-negative delay (plus
    ``branch`` extra periods), or ``None`` when ``|R| <= 1``.
    """
    mod = abs(R)
    if not mod > 1.0:
        return None
    omega = math.sqrt(mod * mod - 1.0)
    phase = math.atan2(R.imag, R.real) - math.acos(1.0 / mod)
    if phase < 0:
        phase += TWO_PI
    return omega, (phase + TWO_PI * branch) / omega


def delay_for_phase(G: complex, omega: float, branch: int = 0) -> float:
    """Smallest non-negative tau with ``(1 + i omega) exp(i omega tau)`` having the phase of ``G``."""
    phase = (math.atan2(G.imag, G.real) - math.atan(omega)) % TWO_PI
    return (phase + TWO_PI * branch) / omega


def characteristic_G(lam, tau_D):
    return (lam + 1.0) * np.exp(lam * tau_D)


def scan_roots(f: Callable[[float], float], grid: Sequence[float], xtol=1e-14):
    """All sign changes of ``f`` on ``grid``, polished with Brent's method."""
    grid = np.asarray(grid, dtype=float)
    vals = np.array([f(x) for x in grid])
    return _roots_from_samples(f, grid, vals, xtol)


def _roots_from_samples(f, grid, vals, xtol=1e-14):
    roots = []
    finite = np.isfinite(vals)
    for k in range(len(grid) - 1):
        if not (finite[k] and finite[k + 1]):
            continue
        v0, v1 = vals[k], vals[k + 1]
        if v0 == 0.0:
            if not roots or roots[-1] != grid[k]:
                roots.append(float(grid[k]))
            continue
        if v0 * v1 < 0:
            roots.append(brentq(f, grid[k], grid[k + 1], xtol=xtol, rtol=4 * np.finfo(float).eps, maxiter=200))
    if len(grid) and finite[-1] and vals[-1] == 0.0:
        roots.append(float(grid[-1]))
    return roots


def scan_roots_vectorized(f, grid, xtol=1e-14):
    """Like :func:`scan_roots` but ``f`` is evaluated on the whole grid at once."""
    grid = np.asarray(grid, dtype=float)
    vals = np.asarray(f(grid), dtype=float)

    def fs(x):
        return float(np.asarray(f(np.array([x])))[0])

    return _roots_from_samples(fs, grid, vals, xtol)


def golden_minimize(f, lo, hi, n_scan=400, tol=1e-12, vectorized=False):
    """Global minimum of a 1d function on [lo, hi]: coarse scan then golden section.

    With ``vectorized=True`` the scan evaluates ``f`` once on the whole grid.
    """
    from scipy.optimize import minimize_scalar

    xs = np.linspace(lo, hi, n_scan)
    if vectorized:
        vals = np.asarray(f(xs), dtype=float)
        g = f
        f = lambda x: float(g(x))  # noqa: E731
    else:
        vals = np.array([f(x) for x in xs])
    k = int(np.argmin(vals))
    a, b = xs[max(k - 1, 0)], xs[min(k + 1, n_scan - 1)]
    if a == b:
        return float(xs[k]), float(vals[k])
    res = minimize_scalar(f, bounds=(a, b), method="bounded", options={"xatol": tol})
    if res.fun <= vals[k]:
        return float(res.x), float(res.fun)
    return float(xs[k]), float(vals[k])


# -- delayed relations --------------------------------------------------------


class DelayRelation:
    """A dispersion relation written as ``E = Xi(G)``.

    Subclasses implement :meth:`g_roots` (all ``G`` solving the relation for a
    given ``E``), :meth:`xi` (the inverse map) and :meth:`bound` (an upper
    bound for ``|G|`` valid for every ``|E| <= 1``).
    """

    mode = "sym_plus"

    def __init__(self, a: float):
        self.a = float(a)

    def g_roots(self, E):  # pragma: no cover - interface
        raise NotImplementedError

    def xi(self, G):  # pragma: no cover - interface
        raise NotImplementedError

    def bound(self) -> float:  # pragma: no cover - interface
        raise NotImplementedError

    def E_of(self, lam, c):
        if not math.isfinite(c):
            return np.ones_like(np.asarray(lam, dtype=complex))
        return np.exp(-2.0 * np.asarray(lam) * self.a / c)

    def residual(self, lam, tau_D, c):
        """Smallest distance between ``G(lam)`` and a root of the relation."""
        G = characteristic_G(lam, tau_D)
        roots = np.atleast_1d(self.g_roots(self.E_of(lam, c)))
        return float(np.min(np.abs(roots - G)))

    # constant delay ------------------------------------------------------
    def constant_delay_hopf(self, branch=0):
        """Hopf points for ``c = inf`` (one per root ``G`` with ``|G| > 1``)."""
        out = []
        for k, R in enumerate(np.atleast_1d(self.g_roots(np.array(1.0 + 0j)))):
            sol = hopf_from_rhs(complex(R), branch)
            if sol is not None:
                omega, tau = sol
                out.append(HopfPoint(omega, tau, math.inf, self.mode, branch,
                                     residual=self.residual(1j * omega, tau, math.inf)))
        return sorted(out, key=lambda p: p.tau_D)

    # fixed finite speed -------------------------------------------------
    def hopf_at_speed(self, c, n_scan=None, branch=0):
        """All Hopf points for a given speed, sorted by delay."""
        if not math.isfinite(c):
            return self.constant_delay_hopf(branch)
        B = self.bound()
        if not B > 1.0:
            return []
        w_max = math.sqrt(B * B - 1.0) * (1 + 1e-9)
        # the phase of E turns once every pi c / a in omega
        if n_scan is None:
            n_scan = int(min(200000, max(4000, 40 * w_max * self.a / (math.pi * c))))
        grid = np.linspace(w_max * 1e-7, w_max, n_scan)

        def sym_h(w):
            w = np.atleast_1d(w)
            roots = np.atleast_2d(self.g_roots(np.exp(-2j * w * self.a / c)))
            rho2 = 1.0 + w ** 2
            return np.prod(np.abs(roots) ** 2 - rho2, axis=0) / rho2 ** roots.shape[0]

        points = []
        for w in scan_roots_vectorized(sym_h, grid):
            E = np.exp(-2j * w * self.a / c)
            roots = np.atleast_1d(self.g_roots(np.array(E)))
            k = int(np.argmin(np.abs(np.abs(roots) - math.sqrt(1 + w * w))))
            tau = delay_for_phase(complex(roots[k]), w, branch)
            points.append(HopfPoint(float(w), tau, float(c), self.mode, branch,
                                    residual=self.residual(1j * w, tau, c)))
        return sorted(points, key=lambda p: p.tau_D)

    def first_hopf(self, c, **kw) -> Optional[HopfPoint]:
        pts = self.hopf_at_speed(c, **kw)
        return pts[0] if pts else None

    # omega-parametric tracing ---------------------------------------------
    def trace_omega(self, omegas, n_phase=720, n_max=3):
        """Parametric Hopf points ``(c(omega), tau_D(omega))``.

        For each frequency, the phases of ``G`` on the circle of radius
        ``sqrt(1 + omega^2)`` where ``|Xi(G)| = 1`` are located by bracketed
        root finding; each gives a delay and one speed per branch ``n`` with
        ``c = 2 a omega / (2 pi n - arg Xi(G)) > 0``.
        """
        points = []
        phis = np.linspace(0.0, TWO_PI, n_phase + 1)
        for w in np.asarray(omegas, dtype=float):
            rho = math.sqrt(1.0 + w * w)

            def f(phi, rho=rho):
                return np.abs(self.xi(rho * np.exp(1j * np.asarray(phi)))) - 1.0

            for phi in scan_roots_vectorized(f, phis):
                if phi >= TWO_PI:
                    continue
                G = rho * complex(math.cos(phi), math.sin(phi))
                psi = float(np.angle(self.xi(G)))
                tau = delay_for_phase(G, w)
                for n in range(0, n_max + 1):
                    den = TWO_PI * n - psi
                    if den <= 0:
                        continue
                    c = 2.0 * self.a * w / den
                    points.append(HopfPoint(float(w), tau, c, self.mode, n,
                                            residual=self.residual(1j * w, tau, c)))
        return points


def speed_sweep(relation: DelayRelation, speeds, label=""):
    """First Hopf curve in the (c, tau_D) plane."""
    curve = BifurcationCurve("c", label=label or relation.mode)
    for c in speeds:
        curve.append(c, relation.first_hopf(float(c)))
    return curve


def continuity_ok(curve: BifurcationCurve, factor=10.0, floor=1e-6):
    """Indices ``k`` where the delay jumps between existing neighbours ``k, k+1``.

    A step is a jump when it exceeds ``factor`` times both adjacent steps (and
    an absolute ``floor``), so smooth curves that flatten out on a log-spaced
    sweep are not flagged. An empty list means the curve looks continuous.
    """
    _, _, tau = curve.arrays()
    dtau = np.abs(np.diff(tau))
    bad = []
    for k in np.flatnonzero(np.isfinite(dtau)):
        nb = [dtau[j] for j in (k - 1, k + 1) if 0 <= j < len(dtau) and np.isfinite(dtau[j])]
        if dtau[k] > floor * (1 + abs(tau[k])) and nb and dtau[k] > factor * max(nb):
            bad.append(int(k))
    return bad
