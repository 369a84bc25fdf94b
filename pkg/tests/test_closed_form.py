import math
import warnings

import numpy as np
import pytest

from birod import closed_form as cf
from birod.bvp import integrate_eom
from birod.elliptic import ellint_K
from birod.model import LadderParams, el_residual, energy_drift
from birod.stability import Verdict

PI = math.pi
SHORT = LadderParams.from_epsilon(1.27e-4, PI)


def test_regime():
    assert cf.regime(0.01) == "short"
    assert cf.regime(1.0) == "intermediate"
    assert cf.regime(LadderParams.from_epsilon(0.04, 30.0)) == "long"


def test_unsupported_u_hat():
    p = LadderParams(b=0.01, gamma=0.002, u_hat=0.5, U0_hat=0.1, L=10.0)
    with pytest.raises(cf.UnsupportedParameters):
        cf.solve_perversion(p)
    with pytest.raises(cf.UnsupportedParameters):
        cf.solve_helical(p)


def test_constant_equilibria():
    out = cf.constant_equilibria(LadderParams.from_epsilon(0.04, 5.0))
    assert [t for t, _ in out] == pytest.approx([-PI / 2, 0.0, PI / 2], abs=1e-15)
    assert [v.kind for _, v in out] == [Verdict.STABLE, Verdict.UNSTABLE, Verdict.STABLE]
    u0 = cf.constant_equilibria(LadderParams(b=0.01, gamma=0.002, u_hat=0.0, L=5.0))
    inside = [(t, v) for t, v in u0 if abs(t) < PI / 2]
    assert len(inside) == 1 and inside[0][0] == 0.0 and inside[0][1].kind is Verdict.STABLE
    star = cf.constant_equilibria(LadderParams(b=0.01, gamma=0.002, u_hat=0.2, L=5.0))
    assert dict(star)[0.0].kind is Verdict.INDETERMINATE
    with pytest.warns(UserWarning):
        assert cf.constant_equilibria(LadderParams.from_epsilon(0.04, 5.0, U0_hat=0.1)) == []


def test_min_perversion_length():
    assert cf.min_perversion_length(0.04) == pytest.approx(PI / 0.4)
    assert cf.min_perversion_length(1e8) < 1e-3
    with pytest.raises(ValueError):
        cf.min_perversion_length(0.0)


def test_half_swing_length():
    assert cf.half_swing_length(PI / 4, 1.0) == pytest.approx(1.8540746773013719, rel=1e-12)
    assert cf.half_swing_length(1e-4, 0.04) == pytest.approx(PI / 0.4, rel=1e-6)
    vals = [cf.half_swing_length(t, 0.04) for t in np.linspace(0.1, 1.5, 15)]
    assert np.all(np.diff(vals) > 0)
    # logarithmic growth: K ~ log(4 / cos(theta0))
    t = PI / 2 - 1e-6
    assert cf.half_swing_length(t, 1.0) == pytest.approx(math.log(4 / math.cos(t)), rel=1e-10)
    with pytest.raises(ValueError):
        cf.half_swing_length(PI / 2, 1.0)


def test_half_swing_length_matches_ode():
    eps, th0 = 0.04, 1.1
    Lp = cf.half_swing_length(th0, eps)
    p = LadderParams.from_epsilon(eps, Lp)
    prof = integrate_eom(-th0, 0.0, Lp, p, n_out=3)
    assert prof.theta[1] == pytest.approx(0.0, abs=1e-9)
    assert prof.theta[-1] == pytest.approx(th0, abs=1e-7)


def test_k_of_nu():
    assert cf.k_of_nu(100.0) == pytest.approx(PI / 20, rel=0.02)
    assert cf.k_of_nu(1e-4) == pytest.approx(math.log(400), rel=0.02)
    nus = np.logspace(-8, 6, 200)
    assert np.all(np.diff(cf.k_of_nu(nus)) < 0)
    for nu in (1e-9, 0.01, 1.0, 1e5):
        assert cf.nu_of_k(float(cf.k_of_nu(nu))) == pytest.approx(nu, rel=1e-9)
    assert cf.k_of_nu(0.3) == pytest.approx(ellint_K(1 / 1.3) / math.sqrt(1.3), rel=1e-14)


def test_fig7_perversion():
    p = LadderParams.from_epsilon(0.04, 30.0, U0_hat=0.05)
    sols = cf.solve_perversion(p)
    stable = [s for s in sols if s.stable]
    assert len(stable) == 1
    s = stable[0]
    assert s.nu == pytest.approx(0.0024, rel=0.15)
    assert abs(s.residual) < 1e-10
    assert s.contact_ok and s.verdict.index_J == -1
    prof = s.profile
    mid = len(prof) // 2
    assert prof.R[mid] == p.L / 2 and prof.theta[mid] == 0.0
    assert prof.theta[-1] == pytest.approx(s.theta0, abs=1e-10)
    assert prof.theta_prime[0] == pytest.approx(p.U0_hat, abs=1e-9)
    assert prof.theta_prime[-1] == pytest.approx(p.U0_hat, abs=1e-9)
    assert el_residual(prof, p) < 1e-6
    assert energy_drift(prof, p) < 1e-12


def test_perversions_at_zero_U0():
    sols = cf.solve_perversion(LadderParams.from_epsilon(0.04, 30.0))
    assert sols and all(abs(s.theta0) < PI / 2 and s.verdict.kind is Verdict.UNSTABLE for s in sols)
    assert cf.solve_perversion(LadderParams.from_epsilon(0.04, 5.0)) == []


def test_negative_U0_mirrors():
    p = LadderParams.from_epsilon(0.04, 30.0, U0_hat=0.05)
    a = [s for s in cf.solve_perversion(p) if s.stable][0]
    b = [s for s in cf.solve_perversion(p.replace(U0_hat=-0.05)) if s.stable][0]
    assert np.allclose(a.profile.theta, -b.profile.theta, atol=1e-12)


def test_helices():
    p = LadderParams.from_epsilon(0.04, 30.0, U0_hat=0.003)
    left = cf.solve_helical(p, "left")
    right = cf.solve_helical(p, "right")
    assert left and right
    for s in left:
        assert abs(s.residual) < 1e-12
        assert s.profile.theta_prime[0] == pytest.approx(0.003, abs=1e-9)
    # the right helix is the mirrored left helix read from the other end
    assert np.allclose(left[0].profile.theta, -right[0].profile.theta[::-1], atol=1e-12)
    assert left[0].stable and right[0].stable
    assert cf.solve_helical(p.replace(U0_hat=0.0)) == []
    with pytest.raises(ValueError):
        cf.solve_helical(p, "up")


def test_helix_converges_to_constant():
    p = LadderParams.from_epsilon(0.04, 30.0, U0_hat=1e-9)
    s = cf.solve_helical(p)[0]
    assert np.max(np.abs(s.profile.theta - PI / 2)) < 1e-6


def test_helix_stability_threshold():
    p = LadderParams.from_epsilon(0.04, 30.0)
    lim = cf.helical_stability_limit(p)
    below = cf.solve_helical(p.replace(U0_hat=0.99 * lim))
    assert below[0].theta_L < PI and below[0].stable and below[0].contact_ok
    # its partner past theta = pi is unstable; the two merge at the limit
    assert PI < below[1].theta_L < 1.5 * PI and below[1].verdict.kind is Verdict.UNSTABLE
    above = cf.solve_helical(p.replace(U0_hat=1.01 * lim))
    assert not any(s.contact_ok for s in above)


def test_helical_critical_U0():
    assert cf.helical_critical_U0(SHORT) == pytest.approx(1.0, rel=0.02)
    long = LadderParams.from_epsilon(0.04, 30.0)
    assert cf.helical_critical_U0(long) == pytest.approx(8 * 0.2 * math.exp(-6.0), rel=0.05)


def test_design_bounds():
    assert cf.short_ladder_perversion_bounds(PI) == pytest.approx((1.0, 2.0))
    lo, hi = cf.long_ladder_perversion_bounds(0.04, 30.0)
    assert lo == pytest.approx(0.040, abs=5e-4) and hi == pytest.approx(0.4)
    with pytest.warns(UserWarning):
        cf.long_ladder_perversion_bounds(0.04, 1.0)
    with pytest.warns(UserWarning):
        cf.short_ladder_perversion_bounds(30.0, 0.04)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        cf.short_ladder_perversion_bounds(PI, 1.27e-4)


def test_exact_windows_short_ladder():
    lo, hi = cf.exact_perversion_window(SHORT)
    assert lo == pytest.approx(1.0, rel=1e-3) and hi == pytest.approx(2.0, rel=1e-3)
    tlo, thi = cf.tri_stable_window(SHORT)
    assert tlo < 1.0 < thi and thi - tlo < 1e-3


def test_stable_perversion_window_matches_exact():
    p = LadderParams.from_epsilon(0.04, 12.0)
    (found,) = cf.stable_perversion_window(p, 0.7)
    exact = cf.exact_perversion_window(p)
    assert found == pytest.approx(exact, rel=1e-6)


def test_expected_counts():
    L0 = cf.min_perversion_length(0.04)
    assert cf.expected_multiperversion_counts(1.5 * L0, 0.04) == {1: 1}
    assert cf.expected_multiperversion_counts(2.5 * L0, 0.04) == {1: 1, 2: 2}
    assert cf.expected_multiperversion_counts(0.5 * L0, 0.04) == {}
