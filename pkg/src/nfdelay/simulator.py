"""Direct integration of the delayed neural field on 1d intervals and 2d squares.

The nonlocal term is a discrete convolution of the firing-rate field with the
sampled kernel. Each grid cell fires with the fraction of its width lying
above threshold (a linear subgrid estimate from the local gradient), which is
the exact indicator for a profile that is linear inside the cell. This keeps
threshold crossings moving continuously instead of jumping cell by cell.

Time stepping is Heun's method. The delayed inputs are read from a ring buffer
with linear interpolation in time:

* ``c = inf``: the buffer holds the convolved term ``S_k = J * F(u_k)``,
  so each step needs a single FFT convolution.
* finite ``c`` in 1d: the buffer holds deviations ``F_k - F_0`` from the
  initial firing field. The constant part is convolved once; the deviation is
  a direct sum over the cells where it is nonzero, each offset read at its own
  delay ``tau_D + |x - y| / c`` (numba loop).
* finite ``c`` in 2d: offsets are grouped by delay bin and each bin kernel is
  convolved by FFT.

Boundaries are open: there is no activity outside the domain, except for
fronts, whose left plateau is extended to minus infinity analytically. 2d
fronts are periodic along y.
"""

from __future__ import annotations

import csv
import math
import struct
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numba
import numpy as np

from .kernel import (DelayModel, GaussianPulse, InputProfile, KernelParams, NoInput, SigmoidFront, connectivity,
                     connectivity_integral_1d, input_value)

FRAME_MAGIC = b"NFDS"


class SimulationAbort(RuntimeError):
    """Non-finite values appeared; ``step`` holds the index of the last good step."""

    def __init__(self, message, step, frame=None):
        super().__init__(message)
        self.step = step
        self.frame = frame


@dataclass(frozen=True)
class Grid:
    d: int
    L: float
    n: int

    def __post_init__(self):
        if self.d not in (1, 2):
            raise ValueError("simulation supports d = 1 or 2")
        if self.n < 4 or self.n & (self.n - 1):
            raise ValueError("n must be a power of two, got %r" % (self.n,))
        if not self.L > 0:
            raise ValueError("half-length L must be positive")

    @property
    def dx(self) -> float:
        return 2.0 * self.L / self.n

    @property
    def x(self) -> np.ndarray:
        return -self.L + self.dx * np.arange(self.n)

    @property
    def shape(self):
        return (self.n,) * self.d

    @property
    def center_index(self):
        return (self.n // 2,) * self.d

    def mesh(self):
        if self.d == 1:
            return (self.x,)
        return tuple(np.meshgrid(self.x, self.x, indexing="ij"))

    def radius(self):
        if self.d == 1:
            return np.abs(self.x)
        X, Y = self.mesh()
        return np.hypot(X, Y)

    def check(self, kernel: KernelParams, input_width=None) -> List[str]:
        """Resolution and extent problems for the given kernel (empty when fine)."""
        problems = []
        widths = [kernel.sigma_e, kernel.sigma_i] + ([input_width] if input_width else [])
        if self.L < 8 * max(widths) * (1 - 1e-12):
            problems.append("L=%g is below 8 x the largest width %g" % (self.L, max(widths)))
        fine = min([kernel.sigma_i] + ([input_width] if input_width else []))
        if self.dx > fine / 8 * (1 + 1e-12):
            problems.append("dx=%g exceeds min(sigma_i, sigma)/8=%g" % (self.dx, fine / 8))
        return problems


# -- firing fields ----------------------------------------------------------------------


def firing_fraction(u, theta, dx, subgrid=True):
    """Fraction of each cell above threshold."""
    if not subgrid:
        return (u > theta).astype(float)
    grads = np.gradient(u, dx)
    if u.ndim == 1:
        gnorm = np.abs(grads)
    else:
        gnorm = np.sqrt(sum(g * g for g in grads))
    with np.errstate(divide="ignore", invalid="ignore"):
        frac = 0.5 + (u - theta) / (gnorm * dx)
    frac = np.where(gnorm > 0, frac, (u > theta).astype(float))
    return np.clip(frac, 0.0, 1.0)


# -- convolution ----------------------------------------------------------------------


def _offset_axis(n, periodic):
    """Signed offsets (in cells) matching the FFT layout of one axis."""
    if periodic:
        k = np.arange(n)
        return np.where(k <= n // 2, k, k - n)
    k = np.arange(2 * n)
    return np.where(k < n, k, k - 2 * n)


class Convolver:
    """Linear (zero padded) or, along y for fronts, periodic convolution with J_d."""

    def __init__(self, grid: Grid, kernel: KernelParams, periodic_y=False, weights=None):
        self.grid = grid
        self.kernel = kernel.with_dim(grid.d)
        self.periodic_y = periodic_y
        n, dx = grid.n, grid.dx
        if grid.d == 1:
            off = _offset_axis(n, False) * dx
            r = np.abs(off)
        else:
            ox = _offset_axis(n, False) * dx
            oy = _offset_axis(n, periodic_y) * dx
            r = np.hypot(ox[:, None], oy[None, :])
        self.r = r
        kern = connectivity(self.kernel, r) * dx ** grid.d
        if weights is not None:
            kern = kern * weights
        self.kern = kern
        self.pad_shape = kern.shape
        self.axes = tuple(range(grid.d))
        self.kern_hat = np.fft.rfftn(kern)

    def with_weights(self, weights) -> "Convolver":
        return Convolver(self.grid, self.kernel, self.periodic_y, weights)

    def transform(self, F):
        return np.fft.rfftn(F, s=self.pad_shape, axes=self.axes)

    def apply_hat(self, F_hat):
        out = np.fft.irfftn(F_hat * self.kern_hat, s=self.pad_shape, axes=self.axes)
        n = self.grid.n
        return out[:n] if self.grid.d == 1 else out[:n, :n]

    def __call__(self, F):
        return self.apply_hat(self.transform(F))


def direct_convolution(grid: Grid, kernel: KernelParams, F, periodic_y=False):
    """Brute-force sum over all cell pairs (an oracle for :class:`Convolver`; keep n small in 2d)."""
    x = grid.x
    dx = grid.dx
    if grid.d == 1:
        K = connectivity(kernel.with_dim(1), np.abs(x[:, None] - x[None, :])) * dx
        return K @ F
    k2 = kernel.with_dim(2)
    DX = x[:, None] - x[None, :]
    DY = DX.copy()
    if periodic_y:
        period = grid.n * dx
        DY = (DY + 0.5 * period) % period - 0.5 * period
    F = np.asarray(F, dtype=float)
    out = np.empty_like(F)
    for i in range(grid.n):
        for j in range(grid.n):
            r = np.hypot(DX[i][:, None], DY[j][None, :])
            out[i, j] = np.sum(connectivity(k2, r) * F) * dx * dx
    return out


# -- history ----------------------------------------------------------------------------


class RingHistory:
    """Fixed-depth ring of frames indexed by integer step."""

    def __init__(self, depth, frame):
        self.depth = int(depth)
        self.buf = np.repeat(np.asarray(frame, dtype=float)[None], self.depth, axis=0)

    def put(self, k, frame):
        self.buf[k % self.depth] = frame

    def get(self, k):
        return self.buf[k % self.depth]

    def at(self, pos):
        """Linear interpolation at fractional step position ``pos``."""
        k0 = math.floor(pos)
        w = pos - k0
        if w < 1e-12:
            return self.get(k0)
        return (1.0 - w) * self.get(k0) + w * self.get(k0 + 1)


@numba.njit(cache=True)
def _gather_delayed_1d(buf, e, depth, kern, steps, fracs, active, kmax, out):
    n = out.shape[0]
    for jj in range(active.shape[0]):
        j = active[jj]
        lo = max(0, j - kmax)
        hi = min(n - 1, j + kmax)
        for i in range(lo, hi + 1):
            k = abs(i - j)
            m = steps[k]
            w = fracs[k]
            v = buf[(e - m) % depth, j]
            if w > 0.0:
                v = (1.0 - w) * v + w * buf[(e - m - 1) % depth, j]
            out[i] += kern[k] * v


# -- configuration and records -------------------------------------------------------------


@dataclass
class SimulationConfig:
    grid: Grid
    kernel: KernelParams
    theta: float
    input: InputProfile = field(default_factory=NoInput)
    delays: DelayModel = field(default_factory=DelayModel)
    T: float = 100.0
    dt: float = 0.005
    kind: str = "pulse"            # "pulse" or "front"
    initial: Optional[np.ndarray] = None
    perturbation: Optional[np.ndarray] = None
    perturbation_amplitude: float = 0.1
    noise: float = 0.0             # std of seeded white noise added to the initial state
    seed: int = 0
    record_every: float = 0.05     # time between diagnostic samples
    frame_every: float = 1.0       # time between stored frames (0 disables)
    window_start: float = 0.5      # fraction of T where symmetry statistics start
    subgrid: bool = True
    strict_grid: bool = True

    def validate(self):
        if not self.dt > 0 or self.dt > 0.05:
            raise ValueError("dt must be in (0, 0.05], got %r" % (self.dt,))
        if not self.T > 0:
            raise ValueError("T must be positive")
        if self.kind not in ("pulse", "front"):
            raise ValueError("kind must be 'pulse' or 'front'")
        if self.theta <= 0:
            raise ValueError("threshold must be positive")
        if self.strict_grid:
            width = getattr(self.input, "sigma", None)
            problems = self.grid.check(self.kernel, width)
            if problems:
                raise ValueError("; ".join(problems))


@dataclass
class SpaceTimeRecord:
    grid: Grid
    theta: float
    dt: float
    kind: str
    times: np.ndarray
    center: np.ndarray
    mode_amplitude: Optional[np.ndarray]
    odd_sup: np.ndarray
    transverse_sup: np.ndarray
    active_measure: np.ndarray
    frame_times: np.ndarray
    frames: np.ndarray
    frame_stride: int
    stats: Dict[str, float]
    final: np.ndarray

    @property
    def T(self) -> float:
        return float(self.times[-1]) if len(self.times) else 0.0


def _point_reflect(u):
    """u(-x) on the grid x_j = -L + j dx (index j -> n - j, j >= 1)."""
    r = np.zeros_like(u)
    if u.ndim == 1:
        r[1:] = u[1:][::-1]
    else:
        r[1:, 1:] = u[1:, 1:][::-1, ::-1]
    return r


def _odd_even(u):
    sl = (slice(1, None),) * u.ndim
    ur = _point_reflect(u)[sl]
    core = u[sl]
    return 0.5 * (core - ur), 0.5 * (core + ur)


def stimulus_coordinate(inp: InputProfile, grid: Grid):
    """Radius for pulse stimuli, ``e.x`` for planar ones."""
    if isinstance(inp, SigmoidFront):
        e = np.asarray(inp.e, dtype=float)
        if e.size != grid.d:
            if e.size == 1:
                e = np.eye(grid.d)[0] * e[0]
            else:
                raise ValueError("front direction has %d components for a %dd grid" % (e.size, grid.d))
        return sum(ei * xi for ei, xi in zip(e, grid.mesh()))
    return grid.radius()


class _Stepper:
    def __init__(self, cfg: SimulationConfig):
        cfg.validate()
        self.cfg = cfg
        g = cfg.grid
        self.grid = g
        self.dt = cfg.dt
        self.front = cfg.kind == "front"
        self.conv = Convolver(g, cfg.kernel, periodic_y=(self.front and g.d == 2))
        mesh = g.mesh()
        self.I = np.asarray(input_value(cfg.input, stimulus_coordinate(cfg.input, g)), dtype=float)
        self.plateau = np.zeros(g.shape)
        if self.front:
            # activity on (-inf, -L - dx/2) is held at 1
            self.plateau = _front_plateau(cfg.kernel, mesh[0], -g.L - 0.5 * g.dx)
        self.delays = cfg.delays
        self.finite = cfg.delays.finite_speed
        if not self.finite:
            tau_max = cfg.delays.tau_D
        else:
            tau_max = cfg.delays.tau_D + (2 * math.sqrt(g.d) * g.L) / cfg.delays.c
        self.depth = int(math.ceil(tau_max / self.dt)) + 3
        self.tau_steps = cfg.delays.tau_D / self.dt
        if self.finite:
            self._setup_finite()

    # -- finite speed preparation --------------------------------------------------------
    def _setup_finite(self):
        g, cfg = self.grid, self.cfg
        if g.d == 1:
            k = np.arange(g.n)
            r = k * g.dx
            kern = connectivity(cfg.kernel.with_dim(1), r) * g.dx
            big = np.abs(kern) > 1e-17 * np.max(np.abs(kern))
            kmax = int(np.max(np.flatnonzero(big))) if np.any(big) else 0
            q = (cfg.delays.tau_D + r / cfg.delays.c) / self.dt
            self.f_kern = kern[:kmax + 1].copy()
            self.f_steps = np.floor(q[:kmax + 1]).astype(np.int64)
            self.f_fracs = (q[:kmax + 1] - self.f_steps).astype(float)
            self.f_kmax = kmax
            # steps since each source last fired
            self.last_active = np.full(g.n, -10 ** 9, dtype=np.int64)
            self.f_window = int(self.f_steps.max()) + 2
        else:
            q = (cfg.delays.tau_D + self.conv.r / cfg.delays.c) / self.dt
            m = np.floor(q).astype(np.int64)
            w = q - m
            bins = {}
            for b in np.unique(m):
                bins.setdefault(int(b), np.zeros_like(q))
                bins[int(b)] += np.where(m == b, 1.0 - w, 0.0)
                bins.setdefault(int(b) + 1, np.zeros_like(q))
                bins[int(b) + 1] += np.where(m == b, w, 0.0)
            kabs = np.abs(self.conv.kern)
            cut = 1e-17 * kabs.max()
            self.bin_hats = []
            for b, wts in sorted(bins.items()):
                if np.max(kabs * wts) <= cut:
                    continue
                self.bin_hats.append((b, np.fft.rfftn(self.conv.kern * wts)))

    # -- nonlocal term ---------------------------------------------------------------------
    def firing(self, u):
        return firing_fraction(u, self.cfg.theta, self.grid.dx, self.cfg.subgrid)

    def convolve(self, F):
        return self.conv(F) + self.plateau

    def nonlocal_at(self, e):
        """Nonlocal term at step index ``e`` (history must hold frames up to ``e``)."""
        if not self.finite:
            return self.hist.at(e - self.tau_steps)
        g = self.grid
        if g.d == 1:
            out = np.zeros(g.n)
            lo = e - self.f_window
            active = np.flatnonzero(self.last_active >= lo).astype(np.int64)
            _gather_delayed_1d(self.hist.buf, e, self.depth, self.f_kern, self.f_steps, self.f_fracs,
                               active, self.f_kmax, out)
            return out + self.base_N
        acc = None
        for b, khat in self.bin_hats:
            Fh = self.conv.transform(self.hist.get(e - b))
            term = Fh * khat
            acc = term if acc is None else acc + term
        out = np.fft.irfftn(acc, s=self.conv.pad_shape, axes=self.conv.axes)[:g.n, :g.n]
        return out + self.plateau

    def store(self, k, u):
        F = self.firing(u)
        if self.finite:
            if self.grid.d == 1:
                D = F - self.base_F
                self.hist.put(k, D)
                self.last_active[D != 0] = k
            else:
                self.hist.put(k, F)
        else:
            self.hist.put(k, self.convolve(F))

    def init_history(self, u0):
        F = self.firing(u0)
        if self.finite and self.grid.d == 1:
            # the history is held constant, so only deviations from F0 need a delayed gather
            self.base_F = F
            self.base_N = self.convolve(F)
            self.hist = RingHistory(self.depth, np.zeros_like(F))
            return
        frame = F if self.finite else self.convolve(F)
        self.hist = RingHistory(self.depth, frame)

    def rhs(self, u, N):
        return -u + N + self.I

    def step(self, k, u):
        """Advance from step ``k`` to ``k + 1``; history must hold index ``k``."""
        dt = self.dt
        f0 = self.rhs(u, self.nonlocal_at(k))
        pred = u + dt * f0
        needs_pred = (self.tau_steps < 1.0) if not self.finite else (self.f_steps.min() < 1 if self.grid.d == 1
                                                                      else min(b for b, _ in self.bin_hats) < 1)
        if needs_pred:
            self.store(k + 1, pred)
        f1 = self.rhs(pred, self.nonlocal_at(k + 1))
        new = u + 0.5 * dt * (f0 + f1)
        self.store(k + 1, new)
        return new


def _front_plateau(kernel, xs, edge):
    k1 = kernel.with_dim(1)
    return np.asarray(connectivity_integral_1d(k1, xs - edge, np.full(np.shape(xs), np.inf)), dtype=float)


def run(cfg: SimulationConfig, progress=None) -> SpaceTimeRecord:
    """Integrate over [0, T] from the configured initial state (held constant on the history)."""
    st = _Stepper(cfg)
    g = cfg.grid
    if cfg.initial is None:
        u = np.zeros(g.shape)
    else:
        u = np.array(cfg.initial, dtype=float).reshape(g.shape)
    base = u.copy()
    pert = None
    if cfg.perturbation is not None:
        p = np.asarray(cfg.perturbation, dtype=float).reshape(g.shape)
        pmax = np.max(np.abs(p))
        if pmax > 0:
            scale = cfg.perturbation_amplitude * max(np.max(np.abs(base)), cfg.theta)
            pert = p / pmax
            u = u + scale * pert
    if cfg.noise > 0:
        u = u + cfg.noise * np.random.default_rng(cfg.seed).standard_normal(g.shape)
    st.init_history(u)

    n_steps = int(round(cfg.T / cfg.dt))
    rec_stride = max(1, int(round(cfg.record_every / cfg.dt)))
    frame_stride = max(1, int(round(cfg.frame_every / cfg.dt))) if cfg.frame_every > 0 else 0
    win0 = int(cfg.window_start * n_steps)
    ci = g.center_index

    times, center, modeamp, odd_sup, trans_sup, measure = [], [], [], [], [], []
    frame_times, frames = [], []
    pnorm = float(np.sum(pert * pert)) if pert is not None else 0.0
    acc = {"n": 0}
    cell = g.dx ** g.d

    def sample(k, u):
        t = k * cfg.dt
        times.append(t)
        center.append(float(u[ci]))
        if pert is not None:
            modeamp.append(float(np.sum((u - base) * pert) / pnorm))
        odd, _ = _odd_even(u)
        odd_sup.append(float(np.max(np.abs(odd))) if not st.front else 0.0)
        if g.d == 2:
            trans_sup.append(float(np.max(np.abs(u - u.mean(axis=1, keepdims=True)))))
        else:
            trans_sup.append(0.0)
        measure.append(float(np.sum(u > cfg.theta) * cell))

    def accumulate(u):
        if st.front:
            parts = {"transverse": (u - u.mean(axis=1, keepdims=True)) if g.d == 2 else np.zeros(1),
                     "planar": u.mean(axis=1) if g.d == 2 else u}
        else:
            odd, even = _odd_even(u)
            parts = {"odd": odd, "even": even}
        for key, v in parts.items():
            s1 = acc.setdefault(key + "_s1", np.zeros_like(v))
            s2 = acc.setdefault(key + "_s2", np.zeros_like(v))
            s1 += v
            s2 += v * v
        acc["n"] += 1

    sample(0, u)
    if frame_stride:
        frame_times.append(0.0)
        frames.append(u.copy())
    for k in range(n_steps):
        u = st.step(k, u)
        if not np.all(np.isfinite(u)):
            raise SimulationAbort("non-finite field at step %d (t=%.6g)" % (k + 1, (k + 1) * cfg.dt), k,
                                  frames[-1] if frames else None)
        kk = k + 1
        if kk % rec_stride == 0:
            sample(kk, u)
            if kk >= win0:
                accumulate(u)
        if frame_stride and kk % frame_stride == 0:
            frame_times.append(kk * cfg.dt)
            frames.append(u.copy())
        if progress is not None and kk % 1000 == 0:
            progress(kk, n_steps)

    stats = {}
    N = max(acc["n"], 1)
    for key in ("odd", "even", "transverse", "planar"):
        if key + "_s1" in acc:
            s1, s2 = acc[key + "_s1"], acc[key + "_s2"]
            var = np.maximum(s2 / N - (s1 / N) ** 2, 0.0)
            # the planar part is a function of x only: weight it by the y extent
            weight = g.dx * 2 * g.L if (key == "planar" and g.d == 2) else cell
            stats[key + "_energy"] = float(np.sum(var) * weight)
    if not st.front:
        # mean squared odd part (a stationary but shifted pulse also counts as asymmetric)
        stats["odd_mean_square"] = float(np.sum(acc.get("odd_s2", 0.0)) * cell / N)

    return SpaceTimeRecord(
        grid=g, theta=cfg.theta, dt=cfg.dt, kind=cfg.kind,
        times=np.array(times), center=np.array(center),
        mode_amplitude=np.array(modeamp) if pert is not None else None,
        odd_sup=np.array(odd_sup), transverse_sup=np.array(trans_sup), active_measure=np.array(measure),
        frame_times=np.array(frame_times), frames=np.array(frames) if frames else np.zeros((0,) + g.shape),
        frame_stride=frame_stride, stats=stats, final=u)


# -- diagnostics ------------------------------------------------------------------------------


def _late(record, series, start_frac):
    t = record.times
    keep = t >= start_frac * t[-1]
    return t[keep], np.asarray(series)[keep]


def _oscillation_series(record):
    if record.mode_amplitude is not None:
        return record.mode_amplitude
    return record.center


def measure_period(record: SpaceTimeRecord, series=None, discard=0.3, min_amplitude=1e-4):
    """Dominant period from the autocorrelation of a recorded scalar series.

    Uses the seed-mode projection when present, else the centre value. Returns
    ``None`` for runs whose late oscillation is below ``min_amplitude``.
    """
    y = np.asarray(_oscillation_series(record) if series is None else series, dtype=float)
    _, y = _late(record, y, discard)
    if len(y) < 8 or np.ptp(y) < min_amplitude:
        return None
    y = y - y.mean()
    n = len(y)
    f = np.fft.rfft(y, 2 * n)
    ac = np.fft.irfft(f * np.conj(f))[:n]
    ac = ac / ac[0]
    neg = np.flatnonzero(ac < 0)
    if len(neg) == 0:
        return None
    start = neg[0]
    stop = n // 2
    if stop <= start + 2:
        return None
    seg = ac[start:stop]
    peaks = np.flatnonzero((seg[1:-1] >= seg[:-2]) & (seg[1:-1] > seg[2:])) + 1
    if len(peaks) == 0:
        return None
    # first local maximum comparable to the best one (skips harmonics and multiples)
    good = peaks[seg[peaks] >= 0.5 * seg[peaks].max()]
    k = start + int(good[0])
    if ac[k] < 0.2:
        return None
    if 0 < k < n - 1:
        y0, y1, y2 = ac[k - 1], ac[k], ac[k + 1]
        den = y0 - 2 * y1 + y2
        shift = 0.5 * (y0 - y2) / den if den != 0 else 0.0
    else:
        shift = 0.0
    return float((k + shift) * (record.times[1] - record.times[0]))


@dataclass(frozen=True)
class ClassifyThresholds:
    min_amplitude: float = 1e-4
    decay_ratio: float = 0.7
    asym_ratio: float = 1.0
    transverse_ratio: float = 1.0


def _window_ptp(record, series, lo, hi):
    t = record.times
    T = t[-1]
    m = (t >= lo * T) & (t <= hi * T)
    s = np.asarray(series)[m]
    return float(np.ptp(s)) if len(s) else 0.0


def oscillation_amplitudes(record: SpaceTimeRecord):
    """(early, late) peak-to-peak oscillation over [0.3T, 0.65T] and [0.65T, T]."""
    series = [record.center, record.odd_sup, record.transverse_sup]
    if record.mode_amplitude is not None:
        series.append(record.mode_amplitude * record.theta)
    early = max(_window_ptp(record, s, 0.3, 0.65) for s in series)
    late = max(_window_ptp(record, s, 0.65, 1.0) for s in series)
    return early, late


def classify_pattern(record: SpaceTimeRecord, kind=None, thresholds=ClassifyThresholds()):
    """One of ``stationary``, ``breather``, ``slosher``, ``pulsatile_front``,
    ``transverse_breather`` or ``other``.

    A run is stationary when its late oscillation is tiny or still decaying.
    Oscillating pulses are split by the energy of the odd (point reflected)
    part of the fluctuations against the even part, and fronts by the
    transverse fluctuation energy against the planar one. Pulses that die out
    or reach the domain boundary are ``other``.
    """
    kind = kind or record.kind
    g = record.grid
    if kind == "pulse":
        t = record.times
        if np.all(record.active_measure[t >= 0.9 * t[-1]] == 0):
            return "other"
        edge = np.concatenate([record.final[[0, -1]].ravel(), record.final.T[[0, -1]].ravel()]) \
            if g.d == 2 else record.final[[0, -1]]
        if np.any(edge > record.theta):
            return "other"
    early, late = oscillation_amplitudes(record)
    if late < thresholds.min_amplitude or late < thresholds.decay_ratio * early:
        return "stationary"
    s = record.stats
    if kind == "pulse":
        odd, even = s.get("odd_energy", 0.0), s.get("even_energy", 0.0)
        return "slosher" if odd > thresholds.asym_ratio * even else "breather"
    if kind == "front":
        tr, pl = s.get("transverse_energy", 0.0), s.get("planar_energy", 0.0)
        if g.d == 2 and tr > thresholds.transverse_ratio * pl:
            return "transverse_breather"
        return "pulsatile_front"
    return "other"


# -- initial states ------------------------------------------------------------------------------


def pulse_initial_state(sol, grid: Grid, n_radial=4000):
    """Stationary pulse profile sampled on the grid."""
    r = grid.radius()
    rr = np.linspace(0.0, float(np.max(r)) * (1 + 1e-9), n_radial)
    prof = np.asarray(sol.profile(rr), dtype=float)
    return np.interp(r, rr, prof)


def pulse_mode_field(sol, grid: Grid, mode="sym_plus", n=None, hopf=None, n_nodes=256):
    """Real part of a destabilised pulse mode on the grid.

    1d: ``sym_plus``/``asym_minus`` modes (propagation delays included via
    ``hopf``). 2d: angular mode ``n`` (0 is radial), constant delays.
    """
    k = sol.kernel
    a = sol.a
    if grid.d == 1:
        x = grid.x
        lam = hopf.lam if hopf is not None else 0.0
        c = hopf.c if hopf is not None else math.inf
        sign = 1.0 if mode == "sym_plus" else -1.0

        def part(s):
            dec = np.exp(-lam * np.abs(x - s) / c) if math.isfinite(c) else 1.0
            return connectivity(k.with_dim(1), np.abs(x - s)) * dec

        return np.real(part(a) + sign * part(-a))
    if n is None:
        n = 0 if mode in ("sym_plus", "radial") else 1
    X, Y = grid.mesh()
    k2 = k.with_dim(2)
    out = np.zeros(grid.shape)
    psi = np.arange(n_nodes) * (2 * math.pi / n_nodes)
    for p in psi:
        out += connectivity(k2, np.hypot(X - a * math.cos(p), Y - a * math.sin(p))) * math.cos(n * p)
    return out * (2 * math.pi / n_nodes)


def front_initial_state(front, grid: Grid):
    """Front profile V(x) on the grid (constant along y in 2d)."""
    x = grid.mesh()[0]
    return np.asarray(front.profile(x), dtype=float)


def front_mode_field(front, grid: Grid, mode="sym_plus", hopf=None, ell=None):
    """Destabilised front mode; ``ell`` > 0 selects a transverse mode in 2d.

    Along a periodic y axis the wave number is rounded to the nearest multiple
    of pi/L.
    """
    from .front_analysis import front_eigenmode
    from .kernel import gaussian_d, gaussian_transverse_transform

    if grid.d == 2 and ell:
        X, Y = grid.mesh()
        k1 = 2 * math.pi / (2 * grid.L)
        ell_q = max(1, round(ell / k1)) * k1
        k = front.kernel
        prof = (k.w_e * gaussian_d(X, k.sigma_e, 1) * gaussian_transverse_transform(ell_q, k.sigma_e)
                - k.w_i * gaussian_d(X, k.sigma_i, 1) * gaussian_transverse_transform(ell_q, k.sigma_i))
        return prof * np.cos(ell_q * Y)
    x = grid.mesh()[0]
    if hopf is None:
        from .hopf import HopfPoint
        hopf = HopfPoint(0.0, 0.0, math.inf, mode, 0)
    p = np.real(front_eigenmode(front, hopf, x.ravel())).reshape(x.shape)
    return p


# -- exports --------------------------------------------------------------------------------------


def write_frame_stack(path, record: SpaceTimeRecord):
    """Binary stack: magic, d, n (int32), L, dt (float64), stride, frame count (int32), then float64 frames."""
    g = record.grid
    with open(path, "wb") as fh:
        fh.write(FRAME_MAGIC)
        fh.write(struct.pack("<iiddii", g.d, g.n, g.L, record.dt, record.frame_stride, len(record.frames)))
        fh.write(np.ascontiguousarray(record.frames, dtype="<f8").tobytes())


def read_frame_stack(path):
    with open(path, "rb") as fh:
        if fh.read(4) != FRAME_MAGIC:
            raise ValueError("not a frame stack file")
        d, n, L, dt, stride, count = struct.unpack("<iiddii", fh.read(32))
        data = np.frombuffer(fh.read(), dtype="<f8")
    return {"d": d, "n": n, "L": L, "dt": dt, "stride": stride,
            "frames": data.reshape((count,) + (n,) * d)}


def write_center_csv(path, record: SpaceTimeRecord):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("t", "center", "mode_amplitude", "active_measure"))
        ma = record.mode_amplitude
        for i, t in enumerate(record.times):
            w.writerow(("%.12g" % t, "%.12g" % record.center[i],
                        "%.12g" % ma[i] if ma is not None else "",
                        "%.12g" % record.active_measure[i]))


def threshold_contours(frame, grid: Grid, theta):
    """Threshold level set: crossing abscissae (1d) or polylines (2d)."""
    if grid.d == 1:
        v = frame - theta
        idx = np.flatnonzero(np.sign(v[:-1]) * np.sign(v[1:]) < 0)
        x = grid.x
        return [x[i] + (x[i + 1] - x[i]) * v[i] / (v[i] - v[i + 1]) for i in idx]
    from skimage.measure import find_contours

    out = []
    for cont in find_contours(frame, theta):
        out.append(-grid.L + grid.dx * cont)  # (x, y) columns in index order
    return out


def write_contour_csv(path, record: SpaceTimeRecord):
    g = record.grid
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if g.d == 1:
            w.writerow(("frame", "t", "x"))
            for f, (t, frame) in enumerate(zip(record.frame_times, record.frames)):
                for x in threshold_contours(frame, g, record.theta):
                    w.writerow((f, "%.12g" % t, "%.12g" % x))
        else:
            w.writerow(("frame", "t", "contour", "x", "y"))
            for f, (t, frame) in enumerate(zip(record.frame_times, record.frames)):
                for ci, poly in enumerate(threshold_contours(frame, g, record.theta)):
                    for x, y in poly:
                        w.writerow((f, "%.12g" % t, ci, "%.12g" % x, "%.12g" % y))
