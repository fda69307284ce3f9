import math

import numpy as np
import pytest

from nfdelay import simulator as sim
from nfdelay.kernel import DelayModel, GaussianPulse, KernelParams, SigmoidFront

BUMP = KernelParams(2.0, 1.0, 2.5, 0.5, 2)


def test_grid_validation_and_resolution_check(model1):
    for bad in ((3, 1.0, 16), (1, 1.0, 48), (1, 0.0, 16)):
        with pytest.raises(ValueError):
            sim.Grid(*bad)
    g = sim.Grid(1, 32.0, 512)
    assert g.dx == pytest.approx(0.125) and g.x[0] == -32.0 and g.x[g.center_index] == 0.0
    assert g.check(model1, 1.5) == []
    problems = sim.Grid(1, 16.0, 64).check(model1, 1.5)
    assert len(problems) == 2


def test_firing_fraction_is_exact_for_linear_profiles():
    dx = 0.1
    x = np.arange(40) * dx
    u = 1.0 - 0.5 * x            # crosses 0.3 at x = 1.4
    F = sim.firing_fraction(u, 0.3, dx)
    assert F.sum() * dx == pytest.approx(1.4 + 0.5 * dx)
    np.testing.assert_array_equal(sim.firing_fraction(u, 0.3, dx, subgrid=False), (u > 0.3).astype(float))
    flat = np.full(5, 0.5)
    np.testing.assert_array_equal(sim.firing_fraction(flat, 0.3, dx), np.ones(5))


def test_ring_history_interpolates():
    h = sim.RingHistory(4, np.zeros(3))
    for k in range(6):
        h.put(k, np.full(3, float(k)))
    np.testing.assert_allclose(h.at(4.25), np.full(3, 4.25))
    np.testing.assert_array_equal(h.get(5), np.full(3, 5.0))
    np.testing.assert_array_equal(h.at(3.0), np.full(3, 3.0))


def test_fft_convolution_matches_direct_sum(rng, model1):
    g = sim.Grid(1, 6.0, 128)
    F = rng.random(g.n)
    np.testing.assert_allclose(sim.Convolver(g, model1)(F), sim.direct_convolution(g, model1, F), atol=1e-12)
    g2 = sim.Grid(2, 2.0, 16)
    F2 = rng.random(g2.shape)
    for periodic in (False, True):
        fast = sim.Convolver(g2, BUMP, periodic_y=periodic)(F2)
        np.testing.assert_allclose(fast, sim.direct_convolution(g2, BUMP, F2, periodic_y=periodic), atol=1e-12)


def test_periodic_convolution_of_a_stripe_is_uniform_in_y():
    g = sim.Grid(2, 4.0, 32)
    F = np.zeros(g.shape)
    F[10:14, :] = 1.0
    out = sim.Convolver(g, BUMP, periodic_y=True)(F)
    assert np.max(np.ptp(out, axis=1)) < 1e-12


def _pulse_config(sol, **kw):
    g = sim.Grid(1, 32.0, 512)
    base = dict(grid=g, kernel=sol.kernel, theta=sol.theta, input=sol.input,
                initial=sim.pulse_initial_state(sol, g), frame_every=1.0)
    base.update(kw)
    return sim.SimulationConfig(**base)


def test_stationary_pulse_stays_put(model1_pulse):
    cfg = _pulse_config(model1_pulse, T=10.0, dt=0.01)
    rec = sim.run(cfg)
    assert np.max(np.abs(rec.final - cfg.initial)) < 5e-3
    assert rec.active_measure[-1] == pytest.approx(2 * model1_pulse.a, abs=2 * cfg.grid.dx)
    assert sim.classify_pattern(rec) == "stationary"
    assert len(rec.frames) == 11 and rec.T == pytest.approx(10.0)


def test_fast_propagation_approaches_constant_delay(model1_pulse):
    """The delayed gather with c -> inf reproduces the constant delay integrator."""
    sol = model1_pulse
    kw = dict(T=3.0, dt=0.01, perturbation=sim.pulse_mode_field(sol, sim.Grid(1, 32.0, 512)), frame_every=0)
    a = sim.run(_pulse_config(sol, delays=DelayModel(0.5), **kw))
    b = sim.run(_pulse_config(sol, delays=DelayModel(0.5, 1e9), **kw))
    np.testing.assert_allclose(b.final, a.final, atol=1e-6)
    np.testing.assert_allclose(b.mode_amplitude, a.mode_amplitude, atol=1e-6)


def test_fast_propagation_approaches_constant_delay_2d():
    g = sim.Grid(2, 4.0, 64)
    u0 = np.exp(-(g.radius() / 0.6) ** 2)
    kw = dict(grid=g, kernel=BUMP, theta=0.3, input=GaussianPulse(1.0, 0.5), initial=u0, T=1.0, dt=0.02,
              frame_every=0, strict_grid=False)
    a = sim.run(sim.SimulationConfig(delays=DelayModel(0.3), **kw))
    b = sim.run(sim.SimulationConfig(delays=DelayModel(0.3, 1e9), **kw))
    np.testing.assert_allclose(b.final, a.final, atol=1e-6)


def test_seeded_noise_is_reproducible(model1_pulse):
    kw = dict(T=0.5, dt=0.01, noise=1e-3, frame_every=0)
    a = sim.run(_pulse_config(model1_pulse, seed=3, **kw))
    b = sim.run(_pulse_config(model1_pulse, seed=3, **kw))
    c = sim.run(_pulse_config(model1_pulse, seed=4, **kw))
    np.testing.assert_array_equal(a.final, b.final)
    assert not np.array_equal(a.final, c.final)


def test_non_finite_state_aborts(model1_pulse):
    u0 = sim.pulse_initial_state(model1_pulse, sim.Grid(1, 32.0, 512))
    u0[5] = np.nan
    with pytest.raises(sim.SimulationAbort) as info:
        sim.run(_pulse_config(model1_pulse, initial=u0, T=0.1, dt=0.01))
    assert info.value.step == 0 and info.value.frame is not None


@pytest.mark.parametrize("change", [dict(dt=0.06), dict(T=0.0), dict(kind="wave"), dict(theta=0.0),
                                    dict(grid=sim.Grid(1, 4.0, 16))])
def test_config_validation(model1_pulse, change):
    with pytest.raises(ValueError):
        _pulse_config(model1_pulse, **change).validate()


def test_exports_round_trip(tmp_path, model1_pulse):
    rec = sim.run(_pulse_config(model1_pulse, T=2.0, dt=0.01, record_every=0.5))
    path = tmp_path / "frames.bin"
    sim.write_frame_stack(path, rec)
    back = sim.read_frame_stack(path)
    assert (back["d"], back["n"], back["L"], back["dt"], back["stride"]) == (1, 512, 32.0, 0.01, 100)
    np.testing.assert_array_equal(back["frames"], rec.frames)
    (tmp_path / "junk.bin").write_bytes(b"XXXX")
    with pytest.raises(ValueError):
        sim.read_frame_stack(tmp_path / "junk.bin")

    sim.write_center_csv(tmp_path / "c.csv", rec)
    lines = (tmp_path / "c.csv").read_text().splitlines()
    assert lines[0] == "t,center,mode_amplitude,active_measure" and len(lines) == 1 + len(rec.times)

    sim.write_contour_csv(tmp_path / "k.csv", rec)
    rows = (tmp_path / "k.csv").read_text().splitlines()[1:]
    xs = [float(r.split(",")[2]) for r in rows if r.startswith("0,")]
    # linear interpolation inside a curved cell: the error is a small fraction of dx
    np.testing.assert_allclose(sorted(xs), [-model1_pulse.a, model1_pulse.a], atol=0.1 * rec.grid.dx)


def test_two_dimensional_contour_is_a_circle():
    g = sim.Grid(2, 2.0, 64)
    frame = 1.0 - g.radius() ** 2
    polys = sim.threshold_contours(frame, g, 0.75)
    assert len(polys) == 1
    np.testing.assert_allclose(np.hypot(polys[0][:, 0], polys[0][:, 1]), 0.5, atol=5e-3)


def _synthetic_record(series, dt=0.05):
    t = np.arange(len(series)) * dt
    g = sim.Grid(1, 1.0, 8)
    z = np.zeros_like(t)
    return sim.SpaceTimeRecord(grid=g, theta=0.3, dt=dt, kind="pulse", times=t, center=np.asarray(series),
                               mode_amplitude=None, odd_sup=z, transverse_sup=z, active_measure=z + 1,
                               frame_times=np.zeros(0), frames=np.zeros((0, 8)), frame_stride=0,
                               stats={"odd_energy": 0.0, "even_energy": 1.0}, final=np.zeros(8))


def test_measure_period_on_a_sine():
    t = np.arange(4000) * 0.05
    rec = _synthetic_record(0.5 + 0.1 * np.sin(2 * math.pi * t / 2.7))
    assert sim.measure_period(rec) == pytest.approx(2.7, rel=2e-3)
    assert sim.classify_pattern(rec) == "breather"
    flat = _synthetic_record(np.full(4000, 0.5))
    assert sim.measure_period(flat) is None
    assert sim.classify_pattern(flat) == "stationary"
    decaying = _synthetic_record(0.5 + 0.1 * np.exp(-0.05 * t) * np.sin(t))
    assert sim.classify_pattern(decaying) == "stationary"


def test_stimulus_coordinate():
    g = sim.Grid(2, 1.0, 8)
    X, Y = g.mesh()
    np.testing.assert_allclose(sim.stimulus_coordinate(SigmoidFront(1.0, 1.0, e=(0.0, 1.0)), g), Y)
    np.testing.assert_allclose(sim.stimulus_coordinate(SigmoidFront(1.0, 1.0), g), X)
    np.testing.assert_allclose(sim.stimulus_coordinate(GaussianPulse(1.0, 1.0), g), g.radius())
    with pytest.raises(ValueError):
        sim.stimulus_coordinate(SigmoidFront(1.0, 1.0, e=(1.0, 0.0, 0.0)), g)
