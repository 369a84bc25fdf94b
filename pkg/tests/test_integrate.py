import math

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from birod.integrate import IntegrationError, dopri5


def test_exponential_accuracy():
    res = dopri5(lambda t, y: -y, (0.0, 5.0), [1.0], rtol=1e-12, atol=1e-14)
    assert res.y_end[0] == pytest.approx(math.exp(-5.0), rel=1e-10)
    assert res.t[-1] == 5.0


def test_dense_output_matches_exact():
    t_eval = np.linspace(0, 10, 1001)
    res = dopri5(lambda t, y: np.array([y[1], -y[0]]), (0, 10), [0.0, 1.0], rtol=1e-11, atol=1e-13, t_eval=t_eval)
    assert np.max(np.abs(res.y[0] - np.sin(t_eval))) < 1e-9
    assert np.max(np.abs(res.y[1] - np.cos(t_eval))) < 1e-9


def test_agrees_with_scipy_rk45():
    f = lambda t, y: np.array([y[1], -2 * 0.04 * np.sin(2 * y[0])])  # noqa: E731
    ref = solve_ivp(f, (0, 30), [-1.0, 0.3], method="DOP853", rtol=1e-13, atol=1e-14)
    res = dopri5(f, (0, 30), [-1.0, 0.3])
    assert np.allclose(res.y_end, ref.y[:, -1], atol=1e-8)


def test_batched_equals_individual():
    f = lambda t, y: np.stack([y[1], -np.sin(y[0])])  # noqa: E731
    y0 = np.array([[0.1, 1.0, 2.5], [0.0, 0.2, -0.1]])
    batch = dopri5(f, (0, 7), y0, rtol=1e-11, atol=1e-13).y_end
    for j in range(3):
        one = dopri5(f, (0, 7), y0[:, j], rtol=1e-11, atol=1e-13).y_end
        assert np.allclose(batch[:, j], one, atol=1e-9)


def test_fixed_steps_replay_is_smooth():
    f = lambda t, y: np.stack([y[1], -np.sin(y[0])])  # noqa: E731
    steps = dopri5(f, (0, 5), [1.0, 0.0], rtol=1e-6, atol=1e-8).t_steps
    a = np.linspace(0.9, 1.1, 201)
    x = (a - 1.0) / 0.1
    replay = dopri5(f, (0, 5), np.vstack([a, np.zeros_like(a)]), steps=steps).y_end[0]
    adaptive = np.array([dopri5(f, (0, 5), [v, 0.0], rtol=1e-6, atol=1e-8).y_end[0] for v in a])

    def roughness(z):
        c = np.polynomial.chebyshev.chebfit(x, z, 10)
        return np.max(np.abs(np.polynomial.chebyshev.chebval(x, c) - z))

    # a frozen step sequence makes the end state a smooth function of y0
    assert roughness(replay) < 1e-13
    assert roughness(adaptive) > 1e3 * roughness(replay)


def test_post_step_hook_and_rejections():
    calls = []

    def hook(t, y):
        calls.append(t)
        return y / np.linalg.norm(y)

    res = dopri5(lambda t, y: np.array([-y[1], y[0]]), (0, 3), [1.0, 0.0], post_step=hook)
    assert len(calls) == len(res.t_steps) - 1
    assert np.linalg.norm(res.y_end) == pytest.approx(1.0, abs=1e-15)
    assert res.n_rejected >= 0


def test_errors():
    with pytest.raises(ValueError):
        dopri5(lambda t, y: y, (1.0, 0.0), [1.0])
    with pytest.raises(IntegrationError):
        dopri5(lambda t, y: y, (0.0, 1.0), [np.nan])
    with pytest.raises(IntegrationError, match="t="):
        dopri5(lambda t, y: y * y, (0.0, 2.0), [1.0])  # blows up at t = 1
