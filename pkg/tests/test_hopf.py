import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nfdelay.hopf import (BifurcationCurve, HopfPoint, characteristic_G, continuity_ok, delay_for_phase,
                          golden_minimize, hopf_from_rhs, scan_roots, write_points_csv)


@settings(max_examples=100, deadline=None)
@given(mod=st.floats(1.001, 50.0), arg=st.floats(-math.pi, math.pi), branch=st.integers(0, 3))
def test_hopf_from_rhs_solves_the_relation(mod, arg, branch):
    R = cmath.rect(mod, arg)
    omega, tau = hopf_from_rhs(R, branch)
    assert omega > 0 and tau >= 0
    assert abs(characteristic_G(1j * omega, tau) - R) < 1e-9 * mod
    if branch == 0:
        # smallest non-negative delay: one period less would be negative
        assert tau < 2 * math.pi / omega + 1e-12


@pytest.mark.parametrize("R", [0.5, -1.0, 1.0, 0.3j, 0.0])
def test_no_hopf_point_inside_unit_disc(R):
    assert hopf_from_rhs(R) is None


def test_delay_for_phase_is_consistent():
    G = cmath.rect(2.0, 2.2)
    w = math.sqrt(3.0)
    tau = delay_for_phase(G, w)
    assert abs(characteristic_G(1j * w, tau) - G) < 1e-12


def test_scan_roots_finds_every_sign_change():
    roots = scan_roots(math.sin, np.linspace(0.5, 10, 200))
    np.testing.assert_allclose(roots, [math.pi, 2 * math.pi, 3 * math.pi], atol=1e-12)


def test_golden_minimize_finds_global_minimum():
    f = lambda x: np.cos(3 * x) + 0.1 * (x - 2) ** 2  # noqa: E731
    x, v = golden_minimize(f, 0.0, 4.0)
    xv, vv = golden_minimize(f, 0.0, 4.0, vectorized=True)
    grid = np.linspace(0, 4, 200001)
    assert v <= f(grid).min() + 1e-12
    assert x == pytest.approx(xv, abs=1e-8) and v == pytest.approx(vv, abs=1e-14)


def test_curve_helpers(tmp_path):
    c = BifurcationCurve("I_0", label="demo")
    c.append(0.3, HopfPoint(2.0, 1.0))
    c.append(0.1, None)
    c.append(0.2, HopfPoint(2.0, 0.9))
    c.sort()
    v, om, tau = c.arrays()
    np.testing.assert_array_equal(v, [0.1, 0.2, 0.3])
    assert math.isnan(tau[0]) and len(c.existing()) == 2 and len(c) == 3
    assert continuity_ok(c) == []
    path = tmp_path / "c.csv"
    c.write_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0].startswith("curve,sweep_parameter,sweep_value,omega,tau_D")
    assert lines[1].startswith("demo,I_0,0.1,,")
    assert lines[2].startswith("demo,I_0,0.2,2,0.9,inf,sym_plus,0")


def test_continuity_flags_jumps():
    c = BifurcationCurve("x")
    for k in range(20):
        c.append(k, HopfPoint(1.0, 0.01 * k + (5.0 if k >= 10 else 0.0)))
    assert continuity_ok(c) == [9]


def test_hopf_point_properties():
    p = HopfPoint(2.0, 0.5)
    assert p.period == pytest.approx(math.pi) and p.lam == 2j


def test_points_csv_is_deterministic(tmp_path):
    rows = [(0.1, HopfPoint(1.0 / 3.0, 2.0 / 7.0, 3.5, "asym_minus", 1, residual=1e-13)), (0.2, None)]
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    write_points_csv(a, "c", rows, "Y")
    write_points_csv(b, "c", rows, "Y")
    assert a.read_bytes() == b.read_bytes()
