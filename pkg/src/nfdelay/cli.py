"""Command line driver: ``nfdelay <command> ...``.

Exit codes: 0 success, 1 configuration error, 2 no solution, 3 numerical abort.
The output directory is taken from ``--output``, then the ``NFDELAY_OUTPUT_DIR``
environment variable, then ``output_dir`` in the config.
"""

from __future__ import annotations

import argparse
import csv
import math
import os
import sys
from importlib import resources
from typing import Dict, List

import numpy as np

from . import front_analysis as fa
from . import pulse_existence as pe
from . import pulse_stability as ps
from . import simulator as sim
from .config import ConfigError, RunConfig, apply_overrides, deep_merge, load_toml, parse_config
from .hopf import BifurcationCurve, speed_sweep, write_points_csv
from .kernel import GaussianPulse, NoInput, SigmoidFront
from .plotting import Canvas, heatmap, write_ppm

EXIT_OK, EXIT_CONFIG, EXIT_NO_SOLUTION, EXIT_ABORT = 0, 1, 2, 3
OUTPUT_ENV = "NFDELAY_OUTPUT_DIR"


class NoSolution(RuntimeError):
    """The requested object (pulse, front, Hopf point, curve) does not exist."""


def _fmt(x):
    return "%.12g" % x


def _say(msg):
    print(msg, flush=True)


# -- shared builders ----------------------------------------------------------------------


def _require_gaussian(cfg: RunConfig):
    if not isinstance(cfg.input, GaussianPulse):
        raise ConfigError("input.type must be gaussian for pulse analyses")
    return cfg.input


def _pick_pulse(sols, which="stable"):
    if not sols:
        return None
    if which == "stable":
        for s in sols:
            if s.single_crossing and not s.degenerate and \
                    pe.static_stability_sign(s.kernel, s.input.sigma, s.theta, s.a) == "stable":
                return s
        return sols[-1]
    if which == "largest":
        return sols[-1]
    if which == "smallest":
        return sols[0]
    raise ConfigError("initial.pulse must be stable, largest or smallest")


def _front_theta(cfg: RunConfig):
    return fa.warn_theta_conflict(cfg.kernel, float(getattr(cfg.input, "I_0", 0.0)), cfg.theta)


def _build_front(cfg: RunConfig):
    theta = _front_theta(cfg)
    kind = cfg.front.get("kind", "monotonous")
    try:
        if kind == "three_crossing":
            return fa.build_three_crossing_front(cfg.kernel, theta, cfg.input)
        return fa.build_monotonous_front(cfg.kernel, cfg.input, theta)
    except ValueError as exc:
        raise NoSolution(str(exc))


def _plot_curves(path, curves: List[BifurcationCurve]):
    series = []
    for c in curves:
        v, _, tau = c.arrays()
        if np.any(np.isfinite(tau)):
            series.append((v, tau))
    Canvas().polylines(series).save(path)


# -- commands --------------------------------------------------------------------------------


def cmd_pulse_exist(cfg: RunConfig, out: str) -> int:
    """Existence curve I_0(a) with the static stability of each point."""
    inp = _require_gaussian(cfg)
    if cfg.sweep.parameter != "a":
        raise ConfigError("pulse-exist sweeps the half-width: sweep.parameter must be 'a'")
    a_vals = cfg.sweep.values()
    if np.any(a_vals <= 0):
        raise ConfigError("sweep over a must stay positive")
    rows = []
    for d in cfg.trace.get("dims", [cfg.kernel.d]):
        k = cfg.kernel.with_dim(int(d))
        rows.extend(pe.existence_curve(k, inp.sigma, cfg.theta, a_vals))
    path = os.path.join(out, "%s_existence.csv" % cfg.name)
    pe.write_existence_csv(path, rows)
    series = []
    for d in sorted({r[3] for r in rows}):
        sel = [r for r in rows if r[3] == d]
        series.append((np.array([r[1] for r in sel]), np.array([r[0] for r in sel])))
    Canvas().polylines(series).save(os.path.join(out, "%s_existence.ppm" % cfg.name))
    admissible = [r for r in rows if r[1] >= 0]
    _say("existence curve: %d points (%d admissible) -> %s" % (len(rows), len(admissible), path))
    if not admissible:
        raise NoSolution("no half-width in the sweep has a non-negative input amplitude")
    return EXIT_OK


def _pulse_hopf_points(sol, cfg: RunConfig):
    pts = []
    if sol.d == 1:
        for mode in cfg.trace.get("modes", ["sym_plus", "asym_minus"]):
            rel = ps.PulseRelation1d(sol, mode)
            p = rel.first_hopf(cfg.delays.c)
            if p is not None:
                pts.append(p)
    else:
        p = ps.hopf_radial_nd(sol)
        if p is not None:
            pts.append(p)
        if sol.d == 2:
            for n in cfg.trace.get("angular", [1, 2, 3]):
                p = ps.hopf_angular_2d(sol, int(n))
                if p is not None:
                    pts.append(p)
    return pts


def cmd_pulse_hopf(cfg: RunConfig, out: str) -> int:
    inp = _require_gaussian(cfg)
    sols = pe.solve_halfwidth(cfg.kernel, inp, cfg.theta)
    if not sols:
        raise NoSolution("no pulse exists for these parameters (try a larger I_0)")
    rows = []
    for s in sols:
        for p in _pulse_hopf_points(s, cfg):
            rows.append((s.a, p))
    path = os.path.join(out, "%s_hopf.csv" % cfg.name)
    write_points_csv(path, "a", rows, "pulse")
    for a, p in rows:
        _say("a=%s mode=%s n=%s omega=%s tau_D=%s c=%s" % (_fmt(a), p.mode, p.n, _fmt(p.omega), _fmt(p.tau_D),
                                                            _fmt(p.c)))
    if not rows:
        raise NoSolution("pulses exist but no Hopf point (|ratio| <= 1 for every mode)")
    return EXIT_OK


def cmd_front_build(cfg: RunConfig, out: str) -> int:
    front = _build_front(cfg)
    ext = float(cfg.front.get("extent", 10 * cfg.kernel.max_width))
    x = np.linspace(-ext, ext, int(cfg.front.get("samples", 2001)))
    v = front.profile(x)
    dv = front.derivative(x)
    path = os.path.join(out, "%s_front.csv" % cfg.name)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("x", "V", "dV"))
        for row in zip(x, v, dv):
            w.writerow(tuple(_fmt(t) for t in row))
    Canvas().polylines([(x, v), (x, np.full_like(x, front.theta))]).save(os.path.join(out, "%s_front.ppm" % cfg.name))
    _say("front kind=%s theta=%s a=%s crossings=%s" % (front.kind, _fmt(front.theta),
                                                        _fmt(front.a) if front.a else "-",
                                                        ",".join(_fmt(c) for c in front.crossings)))
    return EXIT_OK


def cmd_front_hopf(cfg: RunConfig, out: str) -> int:
    front = _build_front(cfg)
    pts = []
    if front.kind == "monotonous":
        if cfg.kernel.d >= 2:
            p = fa.front_transverse_hopf(fa.transverse_front(cfg.kernel))
        else:
            p = fa.front_hopf_1d(front)
        if p is not None:
            pts.append(p)
    else:
        rels = fa.three_crossing_relations(front)
        for name in ("Z", "Y"):
            p = rels[name].first_hopf(cfg.delays.c)
            if p is not None:
                pts.append(p)
    path = os.path.join(out, "%s_front_hopf.csv" % cfg.name)
    write_points_csv(path, "c", [(p.c, p) for p in pts], front.kind)
    for p in pts:
        _say("mode=%s omega=%s tau_D=%s l0=%s" % (p.mode, _fmt(p.omega), _fmt(p.tau_D), p.l0))
    if not pts:
        raise NoSolution("no front Hopf point (see the existence conditions of the relevant relation)")
    return EXIT_OK


def _trace_pulse(cfg: RunConfig, values, d2=False):
    inp = _require_gaussian(cfg)
    k = cfg.kernel
    kinds = []
    if d2:
        kinds.append(("radial", None))
        kinds += [("angular", int(n)) for n in cfg.trace.get("angular", [1, 2, 3])]
    else:
        kinds += [(m, None) for m in cfg.trace.get("modes", ["sym_plus", "asym_minus"])]
    curves = []
    for kind, n in kinds:
        if cfg.sweep.parameter == "a":
            curves.append(ps.hopf_curve_by_halfwidth(k, inp.sigma, cfg.theta, values, kind, n))
            continue
        if cfg.sweep.parameter != "I_0":
            raise ConfigError("pulse traces sweep 'a' or 'I_0'")
        curve = BifurcationCurve("I_0", label=kind if n is None else "%s_n%d" % (kind, n))
        for I0 in values:
            sol = _pick_pulse(pe.solve_halfwidth(k, GaussianPulse(float(I0), inp.sigma), cfg.theta))
            p = None
            if sol is not None and sol.u_prime_a > pe.TANGENCY_TOL:
                p = ps.hopf_point_for(sol, kind, n)
            curve.append(I0, p)
        curves.append(curve)
    return curves


def cmd_trace(cfg: RunConfig, out: str) -> int:
    target = cfg.trace["target"]
    values = cfg.sweep.values()
    k = cfg.kernel
    if target == "pulse_1d":
        curves = _trace_pulse(cfg, values)
    elif target == "pulse_2d":
        curves = _trace_pulse(cfg, values, d2=True)
    elif target == "pulse_propagation":
        if cfg.sweep.parameter != "c":
            raise ConfigError("pulse_propagation sweeps c")
        sol = _pick_pulse(pe.solve_halfwidth(k, _require_gaussian(cfg), cfg.theta))
        if sol is None:
            raise NoSolution("no pulse exists for these parameters")
        curves = [speed_sweep(ps.PulseRelation1d(sol, m), values)
                  for m in cfg.trace.get("modes", ["sym_plus", "asym_minus"])]
    elif target == "front_monotonous":
        if cfg.sweep.parameter != "I_0":
            raise ConfigError("front_monotonous sweeps I_0")
        s = cfg.trace.get("s", getattr(cfg.input, "s", None))
        if s is None:
            raise ConfigError("front_monotonous needs trace.s or a sigmoid input")
        curves = [fa.monotonous_hopf_curve(k, float(s), values)]
    elif target == "front_transverse":
        if cfg.sweep.parameter != "sigma_i":
            raise ConfigError("front_transverse sweeps sigma_i")
        curves = [fa.transverse_hopf_curve(k.w_e, k.w_i, k.sigma_e, values, max(k.d, 2))]
    else:
        if cfg.sweep.parameter != "c":
            raise ConfigError("front_three_crossing sweeps c")
        front = _build_front(cfg)
        res = fa.three_crossing_hopf_propagation(front, speeds=values)
        curves = [res["Z"][0], res["Y"][0]]
    paths = []
    for c in curves:
        path = os.path.join(out, "%s_%s.csv" % (cfg.name, c.label or target))
        c.write_csv(path)
        paths.append(path)
    _plot_curves(os.path.join(out, "%s_curves.ppm" % cfg.name), curves)
    n_pts = sum(len(c.existing()) for c in curves)
    _say("trace %s: %d curves, %d Hopf points -> %s" % (target, len(curves), n_pts, ", ".join(paths)))
    if n_pts == 0:
        raise NoSolution("empty Hopf curve: no sweep value satisfies the Hopf existence condition "
                         "(|right-hand side| > 1)")
    return EXIT_OK


def build_simulation(cfg: RunConfig) -> sim.SimulationConfig:
    """Translate a run config into a simulator config with initial state and seed mode."""
    d = cfg.kernel.d
    g = sim.Grid(d, float(cfg.grid["L"]), int(cfg.grid["n"]))
    ini = cfg.initial
    kind = ini.get("kind", "pulse")
    integ = cfg.integration
    if kind == "pulse":
        inp = _require_gaussian(cfg)
        sol = _pick_pulse(pe.solve_halfwidth(cfg.kernel, inp, cfg.theta), ini.get("pulse", "stable"))
        if sol is None:
            raise NoSolution("no pulse exists to initialise the simulation")
        theta = cfg.theta
        u0 = sim.pulse_initial_state(sol, g)
        mode = ini.get("mode", "sym_plus")
        hopf = None
        if d == 1 and cfg.delays.finite_speed and mode in ("sym_plus", "asym_minus"):
            hopf = ps.PulseRelation1d(sol, mode).first_hopf(cfg.delays.c)
        pert = sim.pulse_mode_field(sol, g, mode, n=ini.get("angular_n"), hopf=hopf) if mode != "none" else None
    else:
        front = _build_front(cfg)
        theta = front.theta
        u0 = sim.front_initial_state(front, g)
        mode = ini.get("mode", "sym_plus")
        ell = ini.get("ell")
        if ell == "auto":
            p = fa.front_transverse_hopf(fa.transverse_front(cfg.kernel))
            if p is None:
                raise NoSolution("no transverse instability to seed (min Psi >= -1)")
            ell = p.l0
        pert = sim.front_mode_field(front, g, mode, ell=ell) if mode != "none" else None
    return sim.SimulationConfig(
        grid=g, kernel=cfg.kernel, theta=theta, input=cfg.input, delays=cfg.delays,
        T=float(integ.get("T", 100.0)), dt=float(integ.get("dt", 0.005)), kind=kind,
        initial=u0, perturbation=pert, perturbation_amplitude=float(ini.get("amplitude", 0.1)),
        record_every=float(integ.get("record_every", 0.05)), frame_every=float(integ.get("frame_every", 1.0)),
        noise=float(ini.get("noise", 0.0)), seed=cfg.seed, strict_grid=bool(cfg.grid.get("strict", True)))


def cmd_simulate(cfg: RunConfig, out: str) -> int:
    try:
        scfg = build_simulation(cfg)
        scfg.validate()
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc))
    try:
        rec = sim.run(scfg)
    except sim.SimulationAbort as exc:
        _say("simulation aborted: %s (last good step %d)" % (exc, exc.step))
        if exc.frame is not None:
            np.save(os.path.join(out, "%s_abort_frame.npy" % cfg.name), exc.frame)
        return EXIT_ABORT
    base = os.path.join(out, cfg.name)
    sim.write_frame_stack(base + "_frames.bin", rec)
    sim.write_center_csv(base + "_center.csv", rec)
    sim.write_contour_csv(base + "_contours.csv", rec)
    theta = rec.theta
    if rec.grid.d == 1 and len(rec.frames):
        img = heatmap(rec.frames[::-1], theta * 0.8, theta * 1.2)
    else:
        img = heatmap(rec.final.T[::-1])
    write_ppm(base + "_field.ppm", img)
    pattern = sim.classify_pattern(rec)
    period = sim.measure_period(rec)
    with open(base + "_summary.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("classification", "period"))
        w.writerow((pattern, _fmt(period) if period else ""))
    _say("classification: %s" % pattern)
    _say("period: %s" % (_fmt(period) if period else "none"))
    return EXIT_OK


COMMANDS = {
    "pulse-exist": cmd_pulse_exist,
    "pulse-hopf": cmd_pulse_hopf,
    "front-build": cmd_front_build,
    "front-hopf": cmd_front_hopf,
    "trace": cmd_trace,
    "simulate": cmd_simulate,
}


# -- presets ------------------------------------------------------------------------------------


def preset_names() -> List[str]:
    files = resources.files("nfdelay").joinpath("presets").iterdir()
    return sorted(f.name[:-5] for f in files if f.name.endswith(".toml"))


def load_preset(name: str) -> Dict:
    path = resources.files("nfdelay").joinpath("presets", name + ".toml")
    if not path.is_file():
        raise KeyError(name)
    with resources.as_file(path) as p:
        return load_toml(p)


def preset_tasks(preset: Dict, only=None) -> List[Dict]:
    base = preset.get("base", {})
    tasks = []
    for t in preset.get("task", []):
        if only and t.get("name") not in only:
            continue
        tasks.append(deep_merge(base, t))
    return tasks


# -- entry point ------------------------------------------------------------------------------------


def _resolve_output(flag, cfg_dir):
    return flag or os.environ.get(OUTPUT_ENV) or cfg_dir


def _run_raw(raw, output_flag, analysis=None):
    if analysis is not None:
        if raw.get("analysis", analysis) != analysis:
            raise ConfigError("config analysis %r does not match command %r" % (raw.get("analysis"), analysis))
        raw = dict(raw, analysis=analysis)
    cfg = parse_config(raw)
    out = _resolve_output(output_flag, cfg.output_dir)
    os.makedirs(out, exist_ok=True)
    return COMMANDS[cfg.analysis](cfg, out)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="nfdelay", description="Pulses, fronts and delay-induced Hopf "
                                                                 "bifurcations in delayed neural fields.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("run",) + tuple(COMMANDS):
        p = sub.add_parser(name, help="run a config file" if name == "run" else "%s analysis" % name)
        p.add_argument("config")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override a config key, e.g. kernel.w_e=1.3")
        p.add_argument("-o", "--output", default=None)
    rp = sub.add_parser("reproduce", help="run the bundled preset for a figure")
    rp.add_argument("figure")
    rp.add_argument("--task", action="append", default=None, help="only run the named task(s)")
    rp.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                    help="override applied to every task")
    rp.add_argument("-o", "--output", default=None)
    sub.add_parser("presets", help="list bundled presets")
    args = parser.parse_args(argv)

    try:
        if args.command == "presets":
            for n in preset_names():
                _say(n)
            return EXIT_OK
        if args.command == "reproduce":
            try:
                preset = load_preset(args.figure)
            except KeyError:
                _say("unknown figure %r; known: %s" % (args.figure, ", ".join(preset_names())))
                return EXIT_CONFIG
            out_root = _resolve_output(args.output, preset.get("base", {}).get("output_dir", "out"))
            status = EXIT_OK
            for task in preset_tasks(preset, args.task):
                raw = apply_overrides(task, args.set)
                _say("== %s / %s" % (args.figure, raw.get("name")))
                try:
                    rc = _run_raw(raw, os.path.join(out_root, args.figure))
                except NoSolution as exc:
                    _say("no solution: %s" % exc)
                    rc = EXIT_NO_SOLUTION
                status = max(status, rc)
            return status
        raw = apply_overrides(load_toml(args.config), args.set)
        return _run_raw(raw, args.output, None if args.command == "run" else args.command)
    except ConfigError as exc:
        print("config error: %s" % exc, file=sys.stderr)
        return EXIT_CONFIG
    except NoSolution as exc:
        print("no solution: %s" % exc, file=sys.stderr)
        return EXIT_NO_SOLUTION


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
