"""Acceptance criteria 1-11.

Each builder returns the equilibria its criterion generates, as
``(label, profile, params, verdict)``; criterion 10 re-checks all of them
against the second-variation oracle.  Builders are cached so the whole
module computes everything once.
"""

import functools
import math
import time

import numpy as np
import pytest

from birod import closed_form as cf
from birod.bvp import enumerate_equilibria, integrate_eom, shooting_scan
from birod.model import BRISTOL, LadderParams, SolutionProfile, physical_estimate
from birod.shape import circle_radius, reconstruct, reference_centerline
from birod.stability import Verdict, classify, oracle_agrees, oracle_check, second_variation_min_eig

PI = math.pi
FIG7 = LadderParams.from_epsilon(0.04, 30.0, U0_hat=0.05)
SHORT = LadderParams.from_epsilon(1.27e-4, PI)


def timed(fn, *args):
    t0 = time.perf_counter()
    out = fn(*args)
    return out, time.perf_counter() - t0


# --------------------------------------------------------------------------
# builders


@functools.lru_cache(maxsize=None)
def build_constants():
    rng = np.random.default_rng(20240101)
    out = []
    for eps in rng.uniform(1e-5, 0.1, 50):
        p = LadderParams.from_epsilon(float(eps), PI)
        for th in (-PI / 2, 0.0, PI / 2):
            prof = SolutionProfile.constant(th, p.L, 3)
            out.append((f"constant {th:+.4f} eps={eps:.3g}", prof, p, classify(prof, p)))
    return out


@functools.lru_cache(maxsize=None)
def build_fig7():
    closed = cf.solve_perversion(FIG7)
    helices = cf.solve_helical(FIG7, "left") + cf.solve_helical(FIG7, "right")
    shot = enumerate_equilibria(FIG7)
    return closed, helices, shot


def fig7_equilibria():
    closed, helices, shot = build_fig7()
    out = [(f"fig7 perversion nu={s.nu:.4g}", s.profile, FIG7, s.verdict) for s in closed]
    out += [(f"fig7 helix-{s.handedness} nu={s.nu:.4g}", s.profile, FIG7, s.verdict) for s in helices]
    out += [(f"fig7 shooting {q.theta[0]:+.4f}", q, FIG7, classify(q, FIG7)) for q in shot]
    return out


@functools.lru_cache(maxsize=None)
def build_long_ladder():
    return {u0: cf.solve_perversion(FIG7.replace(U0_hat=u0)) for u0 in (0.035, 0.05)}


def long_ladder_equilibria():
    return [(f"long U0={u0} nu={s.nu:.4g}", s.profile, FIG7.replace(U0_hat=u0), s.verdict)
            for u0, sols in build_long_ladder().items() for s in sols]


@functools.lru_cache(maxsize=None)
def build_short_window():
    (window,) = cf.stable_perversion_window(SHORT, 3.0)
    samples = {u0: cf.solve_perversion(SHORT.replace(U0_hat=u0)) for u0 in (0.5, 1.5, 2.5)}
    return window, samples


def short_window_equilibria():
    _, samples = build_short_window()
    return [(f"short U0={u0} nu={s.nu:.4g}", s.profile, SHORT.replace(U0_hat=u0), s.verdict)
            for u0, sols in samples.items() for s in sols]


def _ell_params(ell, eps=1e-4):
    return LadderParams.from_epsilon(eps, ell / math.sqrt(eps))


@functools.lru_cache(maxsize=None)
def build_helical_thresholds():
    out = {}
    for ell in (0.02, 6.0):
        p = _ell_params(ell)
        u = cf.helical_critical_U0(p)
        out[ell] = (p, u, cf.solve_helical(p.replace(U0_hat=0.5 * (u + cf.helical_stability_limit(p)))))
    return out


def helical_equilibria():
    return [(f"helix ell={ell} nu={s.nu:.4g}", s.profile, p.replace(U0_hat=s.profile.theta_prime[0]), s.verdict)
            for ell, (p, _, sols) in build_helical_thresholds().items() for s in sols]


@functools.lru_cache(maxsize=None)
def build_oracle_equivalence():
    rng = np.random.default_rng(7)
    pairs = []
    for _ in range(20):
        eps = 10 ** rng.uniform(-3, -1)
        L = rng.uniform(0.5, 4) / math.sqrt(eps)
        lo, hi = cf.exact_perversion_window(LadderParams.from_epsilon(eps, L))
        p = LadderParams.from_epsilon(eps, L, U0_hat=rng.uniform(lo, hi))
        closed = [("perversion", s) for s in cf.solve_perversion(p) if s.contact_ok]
        for hand in ("left", "right"):
            closed += [(f"helix-{hand}", s) for s in cf.solve_helical(p, hand) if s.contact_ok]
        roots = shooting_scan(p).roots
        for kind, s in closed:
            th0 = min(roots, key=lambda r: abs(r - s.profile.theta[0]))
            shot = integrate_eom(th0, p.U0_hat, p.L, p, len(s.profile))
            pairs.append((kind, p, s, shot))
    return pairs


def oracle_equivalence_equilibria():
    out = []
    for kind, p, s, shot in build_oracle_equivalence():
        out.append((f"{kind} closed eps={p.epsilon:.3g}", s.profile, p, s.verdict))
        out.append((f"{kind} shooting eps={p.epsilon:.3g}", shot, p, classify(shot, p)))
    return out


CENSUS_RATIOS = (1.5, 2.5, 3.5)


@functools.lru_cache(maxsize=None)
def build_census():
    eps = 0.04
    out = {}
    for ratio in CENSUS_RATIOS:
        p = LadderParams.from_epsilon(eps, ratio * cf.min_perversion_length(eps))
        out[ratio] = (p, enumerate_equilibria(p))
    return out


def census_equilibria():
    return [(f"census {r} theta0={q.theta[0]:+.4f}", q, p, classify(q, p))
            for r, (p, profs) in build_census().items() for q in profs]


def zero_crossings(q):
    s = np.sign(q.theta)
    s = s[s != 0]
    return int(np.count_nonzero(s[1:] != s[:-1]))


def census_counts(profs, fold):
    counts = {}
    kept = []
    for q in profs:
        if q.is_constant():
            continue
        if fold is not None and any(np.max(np.abs(fold(q) - r.theta)) < 1e-6 for r in kept):
            continue
        kept.append(q)
        k = zero_crossings(q)
        counts[k] = counts.get(k, 0) + 1
    return counts


# --------------------------------------------------------------------------
# criteria


@pytest.mark.criterion(1, "constant equilibria: +-pi/2 Stable, 0 Unstable (sign test and oracle)")
def test_criterion_01_constant_classification():
    eq, dt = timed(build_constants)
    for label, prof, p, v in eq:
        th = prof.theta[0]
        expected = Verdict.UNSTABLE if th == 0.0 else Verdict.STABLE
        assert v.kind is expected, label
        oc = oracle_check(prof, p)
        assert oc.sign == (1 if expected is Verdict.STABLE else -1), label
    assert len(eq) == 150
    assert dt < 1.0


@pytest.mark.criterion(2, "half-swing length: pi/(2 sqrt eps) limit and divergence at pi/2")
def test_criterion_02_small_amplitude_limit():
    eps = 0.04
    L0 = cf.min_perversion_length(eps)
    val, dt = timed(cf.half_swing_length, 1e-4, eps)
    assert abs(val - L0) / L0 < 1e-6
    assert dt < 1.0


@pytest.mark.criterion(2, "half-swing length: pi/(2 sqrt eps) limit and divergence at pi/2")
@pytest.mark.xfail(strict=True, reason="growth is logarithmic, ln(4/cos theta0): 6.7 L0 at pi/2 - 1e-4")
def test_criterion_02_divergence_near_half_pi():
    eps = 0.04
    L0 = cf.min_perversion_length(eps)
    val, dt = timed(cf.half_swing_length, PI / 2 - 1e-4, eps)
    assert dt < 1.0
    assert val > 10 * L0


@pytest.mark.criterion(3, "long-ladder example (eps 0.04, L 30, U0 0.05): one stable perversion, nu ~ 0.0024, J = -1, oracle > 0")
def test_criterion_03_fig7():
    (closed, _, shot), dt = timed(build_fig7)
    stable = [s for s in closed if s.stable]
    assert len(stable) == 1
    s = stable[0]
    assert 0.0020 <= s.nu <= 0.0028
    assert abs(cf.perversion_residual(s.nu, FIG7)) < 1e-10
    assert s.verdict.index_J == -1
    e512 = second_variation_min_eig(s.profile, FIG7, 512)
    e1024 = second_variation_min_eig(s.profile, FIG7, 1024)
    assert e512 > 0 and e1024 > 0
    # the shooting solver finds the same single stable perversion; the
    # other stable states are the two helices (the parameters are tri-stable)
    stable_shot = [q for q in shot if classify(q, FIG7).kind is Verdict.STABLE]
    perv = [q for q in stable_shot if zero_crossings(q) == 1]
    assert len(perv) == 1
    assert np.max(np.abs(perv[0].theta - s.profile.theta)) < 1e-7
    helices = [h.profile for h in build_fig7()[1] if h.stable and h.contact_ok]
    others = [q for q in stable_shot if zero_crossings(q) == 0]
    assert len(others) == len(helices) == 2
    for q in others:
        assert min(np.max(np.abs(q.theta - h.theta)) for h in helices) < 1e-7
    assert dt < 5.0


@pytest.mark.criterion(4, "long-ladder bound 0.0397 and perversion verdicts at U0 = 0.035, 0.05")
def test_criterion_04_bound_and_stable_side():
    t0 = time.perf_counter()
    lo, _ = cf.long_ladder_perversion_bounds(0.04, 30.0)
    assert abs(lo - 0.0397) <= 0.0005
    sols = [s for s in build_long_ladder()[0.05] if s.contact_ok]
    assert sols and all(s.verdict.kind is Verdict.STABLE for s in sols)
    assert time.perf_counter() - t0 < 5.0


@pytest.mark.criterion(4, "long-ladder bound 0.0397 and perversion verdicts at U0 = 0.035, 0.05")
@pytest.mark.xfail(strict=True, reason="exact stability threshold is 2 sqrt(eps nu_s) = 0.00397; "
                                       "the perversion at 0.035 has J = -1 and a positive oracle eigenvalue")
def test_criterion_04_unstable_below_bound():
    sols = [s for s in build_long_ladder()[0.035] if s.contact_ok]
    assert sols
    assert all(s.verdict.kind is Verdict.UNSTABLE for s in sols)


@pytest.mark.criterion(5, "short-ladder stable-perversion window within 5% of (1, 2)")
def test_criterion_05_short_window():
    (window, _), dt = timed(build_short_window)
    lo, hi = window
    assert abs(lo - 1.0) <= 0.05 and abs(hi - 2.0) <= 0.10
    assert (lo, hi) == pytest.approx(cf.exact_perversion_window(SHORT), rel=1e-6)
    assert dt < 10.0


@pytest.mark.criterion(6, "helical critical U0: pi/L short, 8 sqrt(eps) exp(-sqrt(eps) L) long")
def test_criterion_06_helical_threshold():
    res, dt = timed(build_helical_thresholds)
    p, u, _ = res[0.02]
    assert abs(u / (PI / p.L) - 1) < 0.02
    p, u, _ = res[6.0]
    target = 8 * math.sqrt(p.epsilon) * math.exp(-p.ell)
    assert abs(u / target - 1) < 0.05
    assert dt < 2.0


@pytest.mark.criterion(7, "Bristol prototype: eps 1.27e-4, L ~ pi, L0 a ~ 7.9 m, mu/E ~ 0.030")
def test_criterion_07_bristol():
    est, dt = timed(physical_estimate, BRISTOL)
    p = est.params
    assert abs(p.epsilon / 1.27e-4 - 1) < 0.05
    assert f"{est.epsilon_rounded:.3g}" == "0.000127"
    assert abs(p.L / PI - 1) < 0.01
    assert abs(cf.min_perversion_length(p.epsilon) * BRISTOL.a / 7.9 - 1) < 0.02
    assert abs(BRISTOL.mu_over_E / 0.030 - 1) < 0.03
    assert dt < 1.0


@pytest.mark.criterion(8, "closed-form perversions and helices equal shooting solutions to 1e-7")
def test_criterion_08_oracle_equivalence():
    pairs, dt = timed(build_oracle_equivalence)
    params = {id(p) for _, p, _, _ in pairs}
    assert len(params) == 20
    for kind, p, s, shot in pairs:
        assert np.max(np.abs(shot.theta - s.profile.theta)) < 1e-7, (kind, p)
    assert dt < 30.0


def _census_check(fold):
    res = build_census()
    for ratio, (p, profs) in res.items():
        expected = cf.expected_multiperversion_counts(p.L, p.epsilon)
        assert census_counts(profs, fold) == expected, ratio


@pytest.mark.criterion(9, "multi-perversion census at L/L0 = 1.5, 2.5, 3.5")
def test_criterion_09_census():
    res, dt = timed(build_census)
    for ratio, (p, profs) in res.items():
        n = int(ratio)
        raw = census_counts(profs, None)
        # every k <= n appears as a mirror pair before folding
        assert raw == {k: 2 for k in range(1, n + 1)}, ratio
        for q in profs:
            if q.is_constant():
                continue
            v = classify(q, p)
            assert v.kind is Verdict.UNSTABLE and v.index_J == zero_crossings(q)
    # folding by reading each profile from the other end gives one per odd k, two per even k
    _census_check(lambda q: q.theta[::-1])
    assert dt < 60.0


@pytest.mark.criterion(9, "multi-perversion census at L/L0 = 1.5, 2.5, 3.5")
@pytest.mark.xfail(strict=True, reason="the two even-k solutions are theta -> -theta images, so this fold "
                                       "leaves one per even k")
def test_criterion_09_census_theta_mirror_fold():
    _census_check(lambda q: -q.theta)


@pytest.mark.criterion(10, "index/oracle concordance over all equilibria of criteria 1-9")
def test_criterion_10_concordance():
    t0 = time.perf_counter()
    corpus = (build_constants() + fig7_equilibria() + long_ladder_equilibria() + short_window_equilibria()
              + helical_equilibria() + oracle_equivalence_equilibria() + census_equilibria())
    decided = agree = 0
    disagreements = []
    for label, prof, p, v in corpus:
        if not v.decided:
            assert v.reason, label
            continue
        ok = oracle_agrees(v, oracle_check(prof, p))
        if ok is None:
            continue
        decided += 1
        agree += ok
        if not ok:
            disagreements.append(label)
    assert not disagreements
    assert decided > 200
    assert time.perf_counter() - t0 < 120.0


@pytest.mark.criterion(11, "shape invariants: rigid spokes, frame angle = theta, circle radius 2/sqrt 5")
def test_criterion_11_shape():
    t0 = time.perf_counter()
    short = SHORT.replace(U0_hat=1.5)
    profiles = [
        (short, [s for s in cf.solve_perversion(short) if s.stable][0].profile),
        (short, cf.solve_helical(short, "left")[0].profile),
        (short, cf.solve_helical(short, "right")[0].profile),
        (SHORT, SolutionProfile.constant(PI / 2, PI, 401)),
        (SHORT, SolutionProfile.constant(-PI / 2, PI, 401)),
        (FIG7, [s for s in build_fig7()[0] if s.stable][0].profile),
        (LadderParams(b=0.01, gamma=0.002, u_hat=0.0, L=5.0), SolutionProfile.constant(0.0, 5.0, 201)),
    ]
    for p, prof in profiles:
        g = reconstruct(prof, p)
        assert g.rigidity_error() < 1e-8
        assert g.angle_error() < 1e-7
    pts = reference_centerline(0.5, 1.0)
    assert abs(circle_radius(pts) - 2 / math.sqrt(5)) < 1e-6
    assert time.perf_counter() - t0 < 5.0
