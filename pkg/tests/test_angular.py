"""Angular profile, its companions, and the graded sphere quadrature."""

import math

import numpy as np
import pytest

from boltzlab.angular import (
    AngularQuadrature,
    CollisionKernel,
    angular_quadrature,
    b_norms,
    b_profile,
    b_s_minus_1,
    b_tilde,
    subsphere_measure,
)

# reference values for (d=3, gamma=-2.5, s=0.6, b0=1, theta_min=1e-2),
# from adaptive quadrature of the defining integrals on [theta_min, pi/2]
REF_TILDE = 0.7334714763321715
REF_SIN2 = 2.610736192340214
REF_SM1 = 11.074322470851776


def kernel(**overrides) -> CollisionKernel:
    base = dict(d=3, gamma=-2.5, s=0.6, b0=1.0, theta_min=1e-2, n_theta=32)
    base.update(overrides)
    return CollisionKernel(**base)


def test_kernel_gates():
    assert kernel().very_soft
    assert not kernel(gamma=-0.5, s=0.4).very_soft
    with pytest.raises(ValueError):
        kernel(d=4)
    with pytest.raises(ValueError):
        kernel(gamma=-3.0)  # at the d=3 boundary max(-4,-d) = -3
    with pytest.raises(ValueError):
        kernel(d=2, gamma=-2.0)
    with pytest.raises(ValueError):
        kernel(s=1.0)
    with pytest.raises(ValueError):
        kernel(theta_min=0.0)
    with pytest.raises(ValueError):
        kernel(theta_min=math.pi / 2 + 0.01)
    with pytest.raises(ValueError):
        kernel(b0=0.0)


def test_with_gamma_keeps_profile():
    k = kernel()
    k2 = k.with_gamma(-1.5)
    assert k2.gamma == -1.5
    assert (k2.s, k2.b0, k2.theta_min) == (k.s, k.b0, k.theta_min)


def test_b_profile_support_and_value():
    k = kernel(s=0.5)
    assert b_profile(k, 0.5 * k.theta_min) == 0.0
    assert b_profile(k, math.pi / 2 + 0.1) == 0.0
    # invert the defining identity at theta = pi/4
    want = (math.pi / 4) ** (-2.0) / math.sin(math.pi / 4)
    assert b_profile(k, math.pi / 4) == pytest.approx(want, rel=1e-14)
    with pytest.raises(ValueError):
        b_profile(k, 0.0)
    with pytest.raises(ValueError):
        b_profile(k, math.pi + 0.1)


def test_b_profile_linear_in_b0():
    k1, k2 = kernel(), kernel(b0=2.0)
    th = np.linspace(0.02, 1.5, 40)
    np.testing.assert_allclose(b_profile(k2, th), 2.0 * b_profile(k1, th), rtol=1e-14)


def test_b_tilde_sign_and_small_angle_power():
    k = kernel(theta_min=1e-3)
    th = np.geomspace(1e-3, 0.05, 24)
    vals = b_tilde(k, th) * np.sin(th) ** (k.d - 2)
    assert (vals >= 0).all()
    # sin^(d-2)(theta) b_tilde ~ b0 (gamma+d) theta^(1-2s) / 8 near zero
    predicted = k.b0 * (k.gamma + k.d) / 8.0 * th ** (1.0 - 2.0 * k.s)
    np.testing.assert_allclose(vals, predicted, rtol=0.1)


def test_b_s_minus_1_is_the_weakened_power():
    k = kernel()
    th = np.geomspace(k.theta_min, math.pi / 2, 17)
    got = b_s_minus_1(k, th) * np.sin(th) ** (k.d - 2)
    np.testing.assert_allclose(got, k.b0 * th ** (1.0 - 2.0 * k.s), rtol=1e-13)
    assert b_s_minus_1(k, 0.5 * k.theta_min) == 0.0


@pytest.mark.parametrize("d", [2, 3])
def test_quadrature_measures_the_sphere(d):
    k = kernel() if d == 3 else kernel(d=2, gamma=-1.5, s=0.3)
    quad = angular_quadrature(k)
    assert (quad.w_theta > 0).all()
    assert quad.theta.min() >= k.theta_min
    assert quad.theta.max() <= math.pi
    full = 4.0 * math.pi if d == 3 else 2.0 * math.pi
    assert quad.sphere_measure_check() == pytest.approx(full, rel=1e-2)


def test_subsphere_measure():
    assert subsphere_measure(3) == pytest.approx(2.0 * math.pi)
    assert subsphere_measure(2) == 2.0
    with pytest.raises(ValueError):
        subsphere_measure(4)


def test_b_norms_match_reference_integrals():
    got = b_norms(kernel())
    for value, ref in zip(got, (REF_TILDE, REF_SIN2, REF_SM1)):
        assert value == pytest.approx(ref, rel=5e-3)


def test_b_norms_weakened_profile_closed_form():
    # the b_{s-1} norm has an elementary antiderivative; check it tightly
    k = kernel(n_theta=64)
    want = (
        subsphere_measure(3)
        * ((math.pi / 2) ** (2 - 2 * k.s) - k.theta_min ** (2 - 2 * k.s))
        / (2 - 2 * k.s)
    )
    assert b_norms(k)[2] == pytest.approx(want, rel=1e-3)


def test_b_norms_monotone_in_theta_min():
    lo = b_norms(kernel(theta_min=1e-3))
    hi = b_norms(kernel(theta_min=1e-1))
    assert all(a > b for a, b in zip(lo, hi))


def test_b_norms_zero_support():
    k = CollisionKernel(d=3, gamma=-2.0, s=0.4, theta_min=math.pi / 2)
    assert b_norms(k) == (0.0, 0.0, 0.0)


def test_b_norms_self_convergence_under_node_doubling():
    coarse = b_norms(kernel(s=0.3, gamma=-2.0, theta_min=1e-3, n_theta=16))
    fine = b_norms(kernel(s=0.3, gamma=-2.0, theta_min=1e-3, n_theta=32))
    for c, f in zip(coarse, fine):
        assert abs(c - f) / f < 1e-2


def test_b_norms_cauchy_as_cutoff_shrinks():
    # each integrand is integrable at 0, so values converge as theta_min -> 0
    vals = [
        b_norms(kernel(s=0.3, gamma=-2.0, theta_min=tm, n_theta=64))
        for tm in (1e-2, 1e-3, 1e-4)
    ]
    for j in range(3):
        d1 = abs(vals[1][j] - vals[0][j])
        d2 = abs(vals[2][j] - vals[1][j])
        assert d2 < d1


def test_quadrature_dataclass_fields():
    quad = angular_quadrature(kernel(), cover_full_range=False)
    assert isinstance(quad, AngularQuadrature)
    assert quad.theta.max() <= math.pi / 2
    assert len(quad.theta) == len(quad.w_theta) == 32
