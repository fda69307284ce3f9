import math

import numpy as np
import pytest

from nfdelay import front_analysis as fa
from nfdelay.hopf import DelayRelation, HopfPoint
from nfdelay.kernel import DelayModel, KernelParams, NoInput, SigmoidFront, J1

THREE = KernelParams(1.7, 3.0, 1.2, 2.0, 1)
MONO = KernelParams(1.7, 4.0, 1.2, 2.0, 1)


@pytest.fixture(scope="module")
def three():
    return fa.build_three_crossing_front(THREE)


@pytest.fixture(scope="module")
def mono():
    return fa.build_monotonous_front(MONO, SigmoidFront(0.7, 0.79))


def test_three_crossing_front_shape(three):
    assert three.a == pytest.approx(0.422167, abs=1e-6)
    assert three.theta == pytest.approx(0.25)
    for x in three.crossings:
        assert three.profile(x) == pytest.approx(three.theta, abs=1e-12)
    n, _, _ = fa.count_crossings(three)
    assert n == 3
    # closed-form derivative against finite differences
    x = np.linspace(-5, 5, 23)
    h = 1e-6
    np.testing.assert_allclose(three.derivative(x), (three.profile(x + h) - three.profile(x - h)) / (2 * h),
                               atol=1e-8)


def test_monotonous_front_shape(mono):
    assert mono.theta == pytest.approx(0.5 * (1.7 - 1.2 + 0.7))
    assert mono.profile(0.0) == pytest.approx(mono.theta, abs=1e-12)
    x = np.linspace(-40, 40, 2001)
    assert np.all(np.diff(mono.profile(x)) <= 1e-14)
    assert mono.profile(-200.0) == pytest.approx(mono.plateau, abs=1e-10)


def test_threshold_must_be_compatible():
    with pytest.raises(ValueError):
        fa.build_monotonous_front(MONO, SigmoidFront(0.7, 0.79), theta=0.3)
    with pytest.warns(UserWarning):
        assert fa.warn_theta_conflict(MONO, 0.7, 0.3) == pytest.approx(0.6)


def test_non_monotone_profile_is_rejected():
    # a weak input leaves the inverse Mexican hat profile non-monotone away from the crossing
    inp = SigmoidFront(0.01, 20.0)
    with pytest.raises(ValueError, match="monotonicity"):
        fa.build_monotonous_front(THREE, inp)
    front = fa.build_monotonous_front(THREE, inp, require_monotone=False)
    assert front.gradients[0.0] < 0
    with pytest.raises(ValueError, match="gradient"):
        fa.build_monotonous_front(THREE, require_monotone=False)


def test_monotonous_front_hopf(mono):
    p = fa.front_hopf_1d(mono)
    assert p.tau_D == pytest.approx(0.8659, abs=1e-4)
    assert p.period == pytest.approx(2.744, abs=1e-3)
    assert abs(fa.front_dispersion_residual_1d(mono, p.tau_D, p.lam)) < 1e-12


def test_front_hopf_interval_endpoints():
    k = MONO
    s = 0.79
    I_m, I_M = fa.front_hopf_input_interval(k, s)
    assert I_m == pytest.approx(-4 * J1(k, 0.0) / s) and I_M == pytest.approx(-8 * J1(k, 0.0) / s)
    curve = fa.monotonous_hopf_curve(k, s, np.linspace(0.1, 2.0, 40))
    for v, p in zip(curve.values, curve.points):
        if p is not None:
            assert I_m < v < I_M


def test_transverse_psi_at_zero_is_one():
    f = fa.transverse_front(KernelParams(15.0, 1.5, 12.5, 1.3, 2))
    assert fa.front_transverse_psi(f, 0.0) == 1.0
    with pytest.raises(ValueError):
        fa.transverse_front(KernelParams(15.0, 1.5, 12.5, 1.2, 2))


def test_transverse_curve_window():
    curve = fa.transverse_hopf_curve(15.0, 12.5, 1.5, [1.2, 1.2501, 1.3, 1.334, 1.34])
    _, _, tau = curve.arrays()
    assert math.isnan(tau[0]) and math.isnan(tau[-1])
    assert tau[1] < 0.002 and tau[3] > 50
    p = curve.points[2]
    assert p.mode == "transverse" and p.l0 > 0 and p.residual < 1e-12
    with pytest.raises(ValueError):
        fa.front_transverse_hopf(fa.build_monotonous_front(MONO, SigmoidFront(0.7, 0.79)))


def test_three_crossing_constant_delay_values(three):
    pts = fa.three_crossing_hopf_constant(three)
    by_mode = {}
    for p in pts:
        by_mode.setdefault(p.mode, p)
        assert p.residual < 1e-12
    assert by_mode["sym_plus"].tau_D == pytest.approx(0.12644, abs=1e-5)
    assert by_mode["asym_minus"].tau_D == pytest.approx(0.19931, abs=1e-5)


def test_three_crossing_oracle(three):
    ev = np.sort(fa.three_crossing_operator_oracle(three).real)
    k = fa.three_crossing_constants(three)
    np.testing.assert_allclose(ev[:2], [-14.067, -9.5295], atol=1e-3)
    assert abs(ev[2]) < 1e-6          # translation mode
    expected = np.sort(np.concatenate([[k.gamma1 * (k.J0 - k.J2a) - 1], k.theta_roots().real - 1]))
    np.testing.assert_allclose(ev, expected, atol=1e-6)


def test_three_crossing_matrix_is_singular_at_hopf_points(three):
    k = fa.three_crossing_constants(three)
    for p in fa.three_crossing_hopf_constant(three):
        G = complex((1 + p.lam) * np.exp(p.lam * p.tau_D))
        assert abs(np.linalg.det(k.matrix(G))) < 1e-9


def test_relations_with_propagation(three):
    rels = fa.three_crossing_relations(three)
    assert all(isinstance(r, DelayRelation) for r in rels.values())
    out = fa.three_crossing_hopf_propagation(three, speeds=np.logspace(-1, 3, 30), omegas=np.linspace(1, 20, 40))
    for name, (first, traced) in out.items():
        for _, p in first.existing() + traced.existing():
            r1, r2 = fa.three_crossing_dispersion(three, DelayModel(p.tau_D, p.c), p.lam)
            assert min(abs(r1), abs(r2)) < 1e-9


def test_constants_need_an_input_free_three_crossing_front(mono):
    with pytest.raises(ValueError):
        fa.three_crossing_constants(mono)


def test_eigenmodes_have_the_right_symmetry(three, mono):
    x = np.linspace(-4, 4, 81)
    sym = fa.front_eigenmode(three, HopfPoint(2.0, 0.5, mode="sym_plus"), x)
    asym = fa.front_eigenmode(three, HopfPoint(2.0, 0.5, mode="asym_minus"), x)
    np.testing.assert_allclose(sym[::-1], sym, atol=1e-12)
    np.testing.assert_allclose(asym[::-1], -asym, atol=1e-12)
    m = fa.front_eigenmode(mono, HopfPoint(2.0, 0.5, c=3.0), x)
    assert np.max(np.abs(m)) == pytest.approx(1.0)


def test_no_three_crossing_front_for_monotone_kernel():
    with pytest.raises(ValueError):
        fa.build_three_crossing_front(KernelParams(1.0, 1.0, 0.0, 1.0, 1), inp=NoInput())
