import json
from dataclasses import replace

import numpy as np
import pytest

from pulsefront.pdesolver import Grid1D
from pulsefront.zeros import (SignWord, ZerosError, certified_rate, checkpoint_run, classify_stationary,
                              is_subword, probe_initial_data, sign_word, solve_stationary,
                              zero_monotonicity_report)


def test_sign_word_basics():
    assert str(sign_word([1, 2, -1, 0, -3, 4])) == "+-+"
    assert sign_word([0.0, 1e-9], band=1e-8).z == -1
    assert sign_word([0.5]).z == 0
    assert str(sign_word([0.1, -0.05, 0.2], band=0.06)) == "+"
    with pytest.raises(ZerosError):
        sign_word([1.0], band=-1.0)
    with pytest.raises(ZerosError):
        SignWord((1, 1))


def test_subword_embedding():
    a = SignWord.parse("+-+-")
    assert is_subword(SignWord.parse("+-"), a)
    assert is_subword(SignWord.parse("-"), a)
    assert is_subword(SignWord(()), a)
    assert not is_subword(SignWord.parse("-+-+"), a)
    assert not is_subword(SignWord.parse("+-+-+"), a)


def test_classify_stationary_types():
    x = np.linspace(0, 10, 101)
    assert classify_stationary(0.05 * np.exp(-x) + 0.01) == "b"
    assert classify_stationary(np.where(x < 5, -0.1, 0.1)) == "c"
    assert classify_stationary(np.where(x < 5, 0.1, -0.1)) == "d"
    assert classify_stationary(np.where((x > 3) & (x < 6), 0.1, -0.1)) == "e"
    assert classify_stationary(np.where(x < 5, 1.2, -0.2)) == "a"
    with pytest.raises(ZerosError):
        classify_stationary(np.where(x < 5, 1.2, 0.5))


def test_certified_rate_homogeneous(homogeneous):
    x = np.linspace(0, 10, 11)
    assert certified_rate(homogeneous, 12.0, x) == pytest.approx(np.sqrt(homogeneous.gamma0))


@pytest.fixture(scope="module")
def stationary(sinusoidal):
    return solve_stationary(sinusoidal, 12.0, 0.05, 60.0, h=0.1)


def test_stationary_solution_properties(stationary):
    s = stationary
    assert s.monotone_iterates
    assert s.decay_violation() <= 0.0
    assert s.residual_norm < 1e-10
    assert classify_stationary(s.w) == "b"
    assert s.w[0] == 0.05 and s.w[-1] == 0.0
    assert np.all(np.diff(s.w) <= 0)


def test_stationary_rejects_large_delta(sinusoidal):
    with pytest.raises(ZerosError):
        solve_stationary(sinusoidal, 12.0, 2 * sinusoidal.delta0, 20.0)


def test_zero_number_does_not_grow(sinusoidal, stationary):
    grid = Grid1D.from_spacing(0.0, 60.0, 0.1)
    u0 = probe_initial_data(grid)
    assert str(sign_word(u0 - stationary.w, 1e-3)) == "+-+-"
    cfg = replace(stationary.config, left_value=1.0, right_value=0.0)
    times, values = checkpoint_run(sinusoidal, 12.0, u0, grid, cfg, 30.0, 10)
    rep = zero_monotonicity_report(times, values, stationary, 1e-3)
    assert rep.z_nonincreasing and rep.subword_chain
    assert rep.words[0].z == 3 and rep.terminal.z < 3
    assert len(json.loads(rep.to_json())) == 10
