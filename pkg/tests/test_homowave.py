import numpy as np
import pytest

from pulsefront.homowave import (decay_bounds, decay_rates, dpsi_dy, frozen_speed_bracket, harmonic_mean,
                                 harmonic_mean_of, interface_integral, limit_speed, solve_frozen_wave,
                                 speed_lipschitz, wave_values)
from pulsefront.medium import closed_form_speed_function, cubic_speed, make_cubic_medium


@pytest.fixture(scope="module")
def wave(homogeneous):
    return solve_frozen_wave(homogeneous, 0.0)


def test_bracket_contains_exact_speed():
    for a, b in [(1.0, 0.25), (1.0, 0.45), (4.0, 0.25)]:
        lo, hi = frozen_speed_bracket(make_cubic_medium(a, b), 0.0)
        assert lo < cubic_speed(a, b) < hi


def test_bracket_scales_with_sqrt_a():
    _, hi1 = frozen_speed_bracket(make_cubic_medium(1.0, 0.25), 0.0)
    _, hi4 = frozen_speed_bracket(make_cubic_medium(4.0, 0.25), 0.0)
    assert hi4 == pytest.approx(2 * hi1, rel=1e-9)


@pytest.mark.parametrize("a,expected", [(1.0, 0.353553), (2.0, 0.5)])
def test_speed_examples(a, expected):
    assert solve_frozen_wave(make_cubic_medium(a, 0.25), 0.0).c == pytest.approx(expected, abs=1e-4)


def test_profile_normalization_and_tails(wave):
    assert wave_values(wave, 0.0)[0] == pytest.approx(0.5, abs=1e-9)
    assert wave_values(wave, np.sqrt(2) * np.log(3))[0] == pytest.approx(0.25, abs=1e-3)
    assert wave.psi[0] > 1 - 1e-6 and wave.psi[-1] < 1e-6
    assert np.all(np.diff(wave.psi) <= 0)


def test_negative_speed_medium():
    w = solve_frozen_wave(make_cubic_medium(1.0, 0.75), 0.0)
    assert w.c == pytest.approx(-cubic_speed(1.0, 0.25), abs=1e-4)


def test_harmonic_mean_of_constant_and_sinusoid(sinusoidal):
    assert harmonic_mean([0.3] * 8)[0] == pytest.approx(0.3)
    res = harmonic_mean_of(closed_form_speed_function(sinusoidal), 64)
    assert res.c_star == pytest.approx(np.sqrt(2) * np.sqrt(0.25 ** 2 - 0.1 ** 2), abs=1e-10)
    assert res.c_star < np.sqrt(2) * 0.25


def test_limit_speed_homogeneous(homogeneous):
    res = limit_speed(homogeneous, n_y=4)
    assert res.c_star == pytest.approx(cubic_speed(1.0, 0.25), abs=1e-6)


def test_decay_rates_formula():
    c = cubic_speed(1.0, 0.25)
    mu1, mu2, mut = decay_rates(c, 1.0, 0.2)
    assert mu1 == pytest.approx((c + np.sqrt(c * c + 0.8)) / 2, rel=1e-14)
    assert mu1 == pytest.approx(0.6577, abs=1e-4)
    m0 = decay_rates(0.0, 2.0, 0.3)
    assert m0[0] == pytest.approx(np.sqrt(0.3 * 2.0) / 2.0) and m0[2] == pytest.approx(m0[0])


def test_tail_slopes_respect_bounds(homogeneous, wave):
    db = decay_bounds(homogeneous, wave)
    # the exact tails decay at rate 1/sqrt(2), faster than the comparison rates
    assert db.empirical_right_slope == pytest.approx(-1 / np.sqrt(2), abs=0.01)
    assert db.empirical_right_slope <= -db.mu1
    assert db.empirical_left_slope >= db.mu1_tilde


def test_dpsi_dy_vanishes_without_x_dependence(homogeneous):
    assert dpsi_dy(homogeneous, 0.3) <= 1e-6


def test_dpsi_dy_richardson_consistency(a4):
    for y in (0.0, 0.6):
        fine, coarse = dpsi_dy(a4, y, 1e-3), dpsi_dy(a4, y, 1e-2)
        assert abs(fine - coarse) <= 0.05 * fine


def test_speed_lipschitz_and_interface_integral(a4_waves):
    lip = speed_lipschitz(a4_waves)
    assert 0 < lip < 1.0
    total = interface_integral(a4_waves.c, 0.0, 1.0)
    assert total == pytest.approx(np.mean(1.0 / a4_waves.speeds), rel=1e-3)
