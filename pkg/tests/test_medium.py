import pickle

import numpy as np
import pytest

from pulsefront.medium import (FourierSeries, MediumError, bump, closed_form_speed_function, cubic_speed,
                               estimate_margins, extended_f, make_a4_medium, make_cubic_medium,
                               make_table_medium, medium_from_config, sinusoidal_b, validate)


def test_fourier_series_values_and_derivative():
    s = FourierSeries(0.25, cos=[0.0], sin=[0.1])
    x = np.linspace(0, 1, 9)
    assert np.allclose(s(x), 0.25 + 0.1 * np.sin(2 * np.pi * x))
    assert np.allclose(s.derivative(x), 0.2 * np.pi * np.cos(2 * np.pi * x))
    assert FourierSeries(1.0).is_constant


def test_cubic_zeros_and_signs(sinusoidal):
    x = np.linspace(0, 1, 17)
    assert np.allclose(sinusoidal.f(x, 0.0), 0)
    assert np.allclose(sinusoidal.f(x, 1.0), 0)
    assert np.allclose(sinusoidal.f(x, sinusoidal.b(x)), 0, atol=1e-14)
    assert np.all(sinusoidal.f(x, 0.5 * sinusoidal.b(x)) < 0)


def test_margin_example():
    # f_u(0) = -0.25 for b = 0.25; the margin estimate stays below that rate
    m = make_cubic_medium(1.0, 0.25)
    g0, d0 = estimate_margins(m, delta0=0.05)
    assert 0.15 < g0 < 0.25
    assert np.all(m.f(0.0, np.linspace(1e-4, 0.05, 50)) <= -g0 * np.linspace(1e-4, 0.05, 50))


def test_validate_cubic_and_a4(sinusoidal, a4):
    rep = validate(sinusoidal)
    assert rep.bistable and rep.positive_mean and not rep.flat_near_states
    rep4 = validate(a4)
    assert rep4.bistable and rep4.flat_near_states
    lo, hi = rep4.mean_reaction_range
    assert 0 < lo < hi


def test_negative_mean_is_still_bistable():
    rep = validate(make_cubic_medium(1.0, 0.75))
    assert rep.bistable and not rep.positive_mean
    assert rep.mean_reaction_range[1] < 0


def test_a4_is_x_independent_near_limits(a4):
    x = np.linspace(0, 1, 33)[:, None]
    u = np.concatenate([np.linspace(0, 0.1, 11), np.linspace(0.9, 1, 11)])[None, :]
    vals = a4.f(x, u)
    assert np.all(vals == vals[0])


def test_bump_is_smooth_cutoff():
    u = np.linspace(0, 1, 201)
    b = bump(u, 0.1)
    assert np.all(b[u <= 0.1] == 0) and np.all(b[u >= 0.9] == 0)
    assert b.max() == pytest.approx(1.0, abs=1e-12)


def test_extended_f_is_linear_outside():
    m = make_cubic_medium(1.0, 0.25)
    assert extended_f(m, 0.0, -0.1) == pytest.approx(m.f_u(0.0, 0.0) * -0.1)
    assert extended_f(m, 0.0, 1.1) == pytest.approx(m.f_u(0.0, 1.0) * 0.1)


def test_config_round_trip_and_pickle(sinusoidal, a4):
    for m in (sinusoidal, a4):
        back = medium_from_config(m.to_config())
        x = np.linspace(0, 1, 13)
        assert np.array_equal(back.f(x[:, None], np.linspace(0, 1, 7)[None, :]),
                              m.f(x[:, None], np.linspace(0, 1, 7)[None, :]))
        assert back.gamma0 == m.gamma0 and back.delta0 == m.delta0
        clone = pickle.loads(pickle.dumps(m))
        assert np.array_equal(clone.b(x), m.b(x))


def test_table_medium_interpolates():
    xs = np.arange(8) / 8
    us = np.linspace(0, 1, 41)
    bs = 0.25 + 0.05 * np.sin(2 * np.pi * xs)
    table = [us * (1 - us) * (us - b) for b in bs]
    m = make_table_medium(1.0, table)
    assert m.kind == "custom-table"
    assert np.max(np.abs(m.b(xs) - bs)) < 1e-3
    back = medium_from_config(m.to_config())
    assert back.f(0.3, 0.6) == pytest.approx(m.f(0.3, 0.6), abs=1e-14)


def test_invalid_a4_arguments_rejected():
    with pytest.raises(MediumError):
        make_a4_medium(0.35, 0.02, 0.6)
    with pytest.raises(MediumError):
        make_a4_medium(1.2, 0.02, 0.1)


def test_closed_form_speed(sinusoidal):
    cf = closed_form_speed_function(sinusoidal)
    assert cf(0.25) == pytest.approx(cubic_speed(1.0, 0.35))
    assert closed_form_speed_function(make_a4_medium()) is None
    assert sinusoidal_b()(0.25) == pytest.approx(0.35)
