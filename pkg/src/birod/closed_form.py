"""Exact solutions of the u_hat = 1 ladder in Jacobi elliptic functions.

With ``ell = sqrt(eps) L`` and ``y = U0**2 / (4 eps)`` every equilibrium is
fixed by a single pseudo-energy parameter ``nu = (E/eps - 1)/2``:

* perversion (antisymmetric about R = L/2, through theta = 0)::

      theta(R) = am(ell sqrt(1+nu) (2R/L - 1) | 1/(1+nu))
      boundary condition:  nu + cn(ell sqrt(1+nu) | 1/(1+nu))**2 = y

* left-handed helical branch (centred on pi/2)::

      theta(R) = pi/2 + am(ell sqrt(nu) (2R/L - 1) | -1/nu)
      boundary condition:  nu dn(ell sqrt(nu) | -1/nu)**2 = y

Roots are located with the signed forms ``sqrt(1+nu) dn(..) - sqrt(y)`` and
``sqrt(nu) dn(..) - sqrt(y)``, which cross zero transversally where the
squared forms only touch.  Both families share the function
``k(nu) = K(1/(1+nu)) / sqrt(1+nu) = K(-1/nu) / sqrt(nu)``: the perversion
amplitude exceeds pi/2 iff ``ell > k(nu)``, exceeds pi iff ``ell > 2 k(nu)``,
and the helix end angle passes pi at ``ell = k(nu)``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq

from .elliptic import ellint_K, ellint_Kc, jacobi_ellipj
from .model import LadderParams, ProfileSource, SolutionProfile
from .stability import StabilityVerdict, Verdict, _classify_constant, classify, critical_lines

__all__ = [
    "UnsupportedParameters",
    "PerversionSolution",
    "HelicalSolution",
    "constant_equilibria",
    "min_perversion_length",
    "half_swing_length",
    "k_of_nu",
    "nu_of_k",
    "perversion_residual",
    "perversion_profile",
    "solve_perversion",
    "helical_residual",
    "helix_profile",
    "solve_helical",
    "helical_critical_nu",
    "helical_critical_U0",
    "helical_stability_limit",
    "short_ladder_perversion_bounds",
    "long_ladder_perversion_bounds",
    "exact_perversion_window",
    "tri_stable_window",
    "stable_perversion_window",
    "expected_multiperversion_counts",
    "regime",
]

NU_PER_DECADE = 400
LINEAR_POINTS = 2001
MERGE_TOL = 1e-9


class UnsupportedParameters(ValueError):
    """Closed forms exist only for u_hat = 1."""


def _require_unit_u(p: LadderParams):
    if p.u_hat != 1.0:
        raise UnsupportedParameters("closed forms need u_hat = 1; use bvp.enumerate_equilibria")


def regime(p_or_ell) -> str:
    """``short`` if sqrt(eps) L < 0.05, ``long`` if > 5, else ``intermediate``."""
    ell = p_or_ell.ell if isinstance(p_or_ell, LadderParams) else float(p_or_ell)
    if ell < 0.05:
        return "short"
    if ell > 5.0:
        return "long"
    return "intermediate"


# --------------------------------------------------------------------------
# constants and lengths


def constant_equilibria(p: LadderParams):
    """Constant solutions on (-pi, pi) as ``[(theta, verdict), ...]``.

    Constant profiles need ``theta' = 0 = U0``; otherwise an empty list is
    returned with a warning.  theta = +-pi (flanges in contact) is excluded.
    """
    if p.U0_hat != 0.0:
        warnings.warn("constant equilibria require U0_hat = 0", stacklevel=2)
        return []
    cl = critical_lines(p, (-math.pi, math.pi))
    thetas = sorted(t for t in cl.minima + cl.maxima + cl.degenerate if abs(t) < math.pi - 1e-12)
    return [(t, _classify_constant(t, p)) for t in thetas]


def min_perversion_length(epsilon: float) -> float:
    """L0 = pi / (2 sqrt(eps)), the shortest ladder admitting a perversion at U0 = 0."""
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    return math.pi / (2.0 * math.sqrt(epsilon))


def half_swing_length(theta0: float, epsilon: float) -> float:
    """Length over which a U0 = 0 solution swings from -theta0 to theta0.

    Quadrature of ``int dtheta / sqrt(2 (V(theta0) - V(theta)))`` after the
    substitution ``sin(theta) = sin(theta0) sin(psi)``, which removes the
    endpoint singularity.  The result is checked against the pendulum form
    ``K(sin(theta0)**2) / sqrt(eps)``.
    """
    if not 0.0 < theta0 < 0.5 * math.pi:
        raise ValueError("theta0 must lie in (0, pi/2)")
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    m = math.sin(theta0) ** 2
    m1 = math.cos(theta0) ** 2
    c1 = math.cos(theta0)

    # with phi = pi/2 - psi the integrand 1/sqrt(m1 + m sin^2 phi) peaks in a
    # layer of width cos(theta0); phi = cos(theta0) sinh(s) flattens it
    def integrand(s):
        phi = c1 * math.sinh(s)
        sp = math.sin(phi)
        return c1 * math.cosh(s) / math.sqrt(m1 + m * sp * sp)

    val = quad(integrand, 0.0, math.asinh(0.5 * math.pi / c1), epsabs=0.0, epsrel=1e-13, limit=400)[0]
    Lp = val / math.sqrt(epsilon)
    ref = ellint_Kc(m1) / math.sqrt(epsilon)
    if abs(Lp - ref) > 1e-9 * ref:
        raise ArithmeticError(f"quadrature {Lp!r} disagrees with K(m)/sqrt(eps) {ref!r}")
    return Lp


def k_of_nu(nu):
    """k(nu) = K(1/(1+nu)) / sqrt(1+nu) for nu > 0; strictly decreasing."""
    nu_arr = np.asarray(nu, dtype=float)
    if np.any(~(nu_arr > 0)):
        raise ValueError("k_of_nu requires nu > 0")
    return ellint_Kc(nu_arr / (1.0 + nu_arr)) / np.sqrt(1.0 + nu_arr)


def nu_of_k(k: float) -> float:
    """Inverse of :func:`k_of_nu`."""
    if not k > 0:
        raise ValueError("k must be positive")
    f = lambda lg: math.log(k_of_nu(math.exp(lg))) - math.log(k)  # noqa: E731
    lo, hi = -1.0, 1.0
    while f(lo) < 0:
        lo *= 2.0
        if lo < -1400:
            raise ArithmeticError(f"nu_of_k: no bracket below exp({lo})")
    while f(hi) > 0:
        hi *= 2.0
        if hi > 1400:
            raise ArithmeticError(f"nu_of_k: no bracket above exp({hi})")
    return math.exp(brentq(f, lo, hi, xtol=1e-14, rtol=1e-15))


# --------------------------------------------------------------------------
# perversions


@dataclass(frozen=True)
class PerversionSolution:
    nu: float
    theta0: float
    profile: SolutionProfile
    verdict: StabilityVerdict
    contact_ok: bool
    residual: float

    @property
    def stable(self) -> bool:
        return self.verdict.kind is Verdict.STABLE


def _pv_arg(nu, ell):
    s = np.sqrt(1.0 + nu)
    return ell * s, 1.0 / (1.0 + nu), s


def perversion_residual(nu, p: LadderParams):
    """nu + cn(ell sqrt(1+nu) | 1/(1+nu))**2 - y."""
    u, m, _ = _pv_arg(np.asarray(nu, dtype=float), p.ell)
    _, cn, _, _ = jacobi_ellipj(u, m)
    return nu + cn * cn - p.y


def _perversion_signed(nu, ell, sqrt_y):
    u, m, s = _pv_arg(nu, ell)
    _, _, dn, _ = jacobi_ellipj(u, m)
    return s * dn - sqrt_y


def _log_grid(lo, hi):
    if not hi > lo > 0:
        return np.empty(0)
    n = max(2, int(math.ceil(NU_PER_DECADE * math.log10(hi / lo))) + 1)
    return np.geomspace(lo, hi, n)


def _perversion_grid(lo, hi):
    parts = [np.linspace(lo, hi, LINEAR_POINTS)]
    tiny = 1e-14
    if hi > 0:
        parts.append(_log_grid(max(tiny, lo, tiny * hi), hi))
    if lo < 0:
        neg_hi = min(-lo, 1.0)
        neg_lo = max(tiny, -hi) if hi < 0 else tiny
        parts.append(-_log_grid(neg_lo, neg_hi))
        # 1 + nu towards 0 (nu -> -1)
        parts.append(-1.0 + _log_grid(max(tiny, 1.0 + lo), min(1.0, 1.0 + hi)))
    g = np.unique(np.concatenate(parts))
    return g[(g > -1.0) & (g >= lo) & (g <= hi)]


def _find_roots(f, grid):
    vals = f(grid)
    roots = []
    for i in np.nonzero(vals == 0.0)[0]:
        roots.append(float(grid[i]))
    for i in np.nonzero(vals[:-1] * vals[1:] < 0.0)[0]:
        a, b = float(grid[i]), float(grid[i + 1])
        roots.append(brentq(lambda x: float(f(np.array([x]))[0]), a, b, xtol=1e-16, rtol=4 * np.finfo(float).eps, maxiter=300))
    roots.sort()
    merged = []
    for r in roots:
        if merged and abs(r - merged[-1]) < MERGE_TOL:
            continue
        merged.append(r)
    return merged


def _uniform_R(L, n_samples):
    if n_samples < 3 or n_samples % 2 == 0:
        raise ValueError("n_samples must be odd and >= 3")
    R = np.linspace(0.0, L, n_samples)
    R[(n_samples - 1) // 2] = 0.5 * L
    return R


def perversion_profile(nu: float, p: LadderParams, n_samples: int = 2001, allow_contact: bool = False) -> SolutionProfile:
    """Sampled perversion with parameter ``nu``.

    ``theta(L/2) = 0`` and ``theta(L) = theta0 > 0`` for U0 >= 0; the mirror
    image is returned for U0 < 0 so that ``theta'(0) = U0``.
    """
    _require_unit_u(p)
    if not nu > -1.0:
        raise ValueError("nu must exceed -1")
    ell = p.ell
    if nu < 0 and ell > ellint_K(1.0 + nu) * (1.0 + 1e-12):
        raise ValueError("no monotone perversion: sqrt(eps) L > K(1 + nu)")
    R = _uniform_R(p.L, n_samples)
    u0, m, s = _pv_arg(nu, ell)
    _, _, dn, am = jacobi_ellipj(u0 * (2.0 * R / p.L - 1.0), np.full_like(R, m))
    theta = am
    theta_p = 2.0 * math.sqrt(p.epsilon) * s * dn
    theta[(n_samples - 1) // 2] = 0.0
    if not allow_contact and abs(theta[-1]) >= math.pi:
        raise ValueError("|theta0| >= pi: flanges would interpenetrate")
    sign = -1.0 if p.U0_hat < 0 else 1.0
    return SolutionProfile(R, sign * theta, sign * theta_p, ProfileSource("perversion", float(nu)))


def solve_perversion(p: LadderParams, n_samples: int = 2001):
    """All monotone antisymmetric perversions, ascending in nu.

    Roots of the boundary condition are scanned on ``[max(-1, y-1), y]``
    (400 log points per decade towards 0, -1 and y, plus 2001 uniform
    points) and refined by Brent's method.  Roots closer than 1e-9 merge.
    Unstable and contact-violating roots are kept and flagged.
    """
    _require_unit_u(p)
    ell, y = p.ell, p.y
    sy = math.sqrt(y)
    lo, hi = max(-1.0, y - 1.0), y
    grid = _perversion_grid(lo, hi)
    f = lambda nu: _perversion_signed(nu, ell, sy)  # noqa: E731
    out = []
    tol = max(1e-12, 4.0 * np.finfo(float).eps * max(1.0, y))
    for nu in _find_roots(f, grid):
        if nu <= -1.0:
            continue
        if nu < 0 and ell > ellint_K(1.0 + nu) * (1.0 + 1e-12):
            continue  # theta' changes sign: a multi-perversion, not this family
        res = float(perversion_residual(nu, p))
        if abs(res) > tol:
            continue
        prof = perversion_profile(nu, p, n_samples, allow_contact=True)
        theta0 = float(prof.theta[-1])
        out.append(PerversionSolution(nu, theta0, prof, classify(prof, p), abs(theta0) < math.pi, res))
    return out


# --------------------------------------------------------------------------
# helical branches


@dataclass(frozen=True)
class HelicalSolution:
    nu: float
    profile: SolutionProfile
    handedness: str
    verdict: StabilityVerdict
    residual: float
    contact_ok: bool = True

    @property
    def theta_L(self) -> float:
        return float(self.profile.theta[-1])

    @property
    def stable(self) -> bool:
        return self.verdict.kind is Verdict.STABLE


def helical_residual(nu, p: LadderParams):
    """nu dn(ell sqrt(nu) | -1/nu)**2 - y."""
    nu = np.asarray(nu, dtype=float)
    _, _, dn, _ = jacobi_ellipj(p.ell * np.sqrt(nu), -1.0 / nu)
    return nu * dn * dn - p.y


def _helix_signed(nu, ell, sqrt_y):
    s = np.sqrt(nu)
    _, _, dn, _ = jacobi_ellipj(ell * s, -1.0 / nu)
    return s * dn - sqrt_y


def helix_profile(nu: float, p: LadderParams, n_samples: int = 2001, handedness: str = "left") -> SolutionProfile:
    """Helical-branch profile; ``left`` is centred on pi/2, ``right`` on -pi/2."""
    _require_unit_u(p)
    if not nu > 0:
        raise ValueError("nu must be positive")
    if handedness not in ("left", "right"):
        raise ValueError("handedness must be 'left' or 'right'")
    R = _uniform_R(p.L, n_samples)
    s = math.sqrt(nu)
    _, _, dn, am = jacobi_ellipj(p.ell * s * (2.0 * R / p.L - 1.0), np.full_like(R, -1.0 / nu))
    am[(n_samples - 1) // 2] = 0.0
    sign = -1.0 if p.U0_hat < 0 else 1.0
    centre = 0.5 * math.pi if handedness == "left" else -0.5 * math.pi
    theta = centre + sign * am
    theta_p = sign * 2.0 * math.sqrt(p.epsilon) * s * dn
    return SolutionProfile(R, theta, theta_p, ProfileSource("helix", float(nu)))


def solve_helical(p: LadderParams, handedness: str = "left", n_samples: int = 2001):
    """Helical-branch equilibria for U0 != 0, ascending in nu.

    Since dn >= 1 for a negative parameter, roots lie in ``(0, y]``.  At
    U0 = 0 the branch is the constant helix and an empty list is returned.
    """
    _require_unit_u(p)
    if p.U0_hat == 0.0:
        return []
    ell, y = p.ell, p.y
    sy = math.sqrt(y)
    # smallest root is near y / cosh(ell)**2
    lo = y * math.exp(-min(2.0 * ell + 30.0, 600.0))
    lo = max(lo, 1e-300)
    grid = np.unique(np.concatenate([_log_grid(lo, y), np.linspace(0.0, y, LINEAR_POINTS)[1:]]))
    f = lambda nu: _helix_signed(nu, ell, sy)  # noqa: E731
    tol = max(1e-12, 4.0 * np.finfo(float).eps * max(1.0, y))
    out = []
    for nu in _find_roots(f, grid):
        if nu <= 0:
            continue
        res = float(helical_residual(nu, p))
        if abs(res) > tol:
            continue
        prof = helix_profile(nu, p, n_samples, handedness)
        ok = bool(np.max(np.abs(prof.theta)) < math.pi)
        out.append(HelicalSolution(nu, prof, handedness, classify(prof, p), res, ok))
    return out


def helical_critical_nu(p_or_ell) -> float:
    """nu_c with ell sqrt(nu_c) = K(-1/nu_c), i.e. k(nu_c) = ell."""
    ell = p_or_ell.ell if isinstance(p_or_ell, LadderParams) else float(p_or_ell)
    return nu_of_k(ell)


def helical_critical_U0(p: LadderParams) -> float:
    """2 sqrt(eps nu_c).

    Tends to pi/L for short ladders and 8 sqrt(eps) exp(-sqrt(eps) L) for
    long ones.  The left helix at this U0 is still stable; it loses
    stability at :func:`helical_stability_limit`.
    """
    _require_unit_u(p)
    return 2.0 * math.sqrt(p.epsilon * helical_critical_nu(p))


def helical_stability_limit(p: LadderParams) -> float:
    """U0 at which the helix end angle reaches pi: 2 sqrt(eps (1 + nu_c))."""
    _require_unit_u(p)
    return 2.0 * math.sqrt(p.epsilon * (1.0 + helical_critical_nu(p)))


# --------------------------------------------------------------------------
# design windows


def short_ladder_perversion_bounds(L: float, epsilon: float | None = None):
    """Leading-order stable-perversion window (pi/L, 2pi/L) for short ladders."""
    if not L > 0:
        raise ValueError("L must be positive")
    if epsilon is not None and regime(math.sqrt(epsilon) * L) != "short":
        warnings.warn("short-ladder bounds used outside the short regime", stacklevel=2)
    return (math.pi / L, 2.0 * math.pi / L)


def long_ladder_perversion_bounds(epsilon: float, L: float):
    """(2 sqrt(eps) / cosh(sqrt(eps) L / 2), 2 sqrt(eps))."""
    if not (epsilon > 0 and L > 0):
        raise ValueError("epsilon and L must be positive")
    ell = math.sqrt(epsilon) * L
    if regime(ell) != "long":
        warnings.warn("long-ladder bounds used outside the long regime", stacklevel=2)
    return (2.0 * math.sqrt(epsilon) / math.cosh(0.5 * ell), 2.0 * math.sqrt(epsilon))


def exact_perversion_window(p: LadderParams):
    """U0 interval where the perversion is stable and contact free.

    ``(2 sqrt(eps nu_s), 2 sqrt(eps (1 + nu_p)))`` with ``k(nu_s) = ell`` and
    ``k(nu_p) = ell / 2``.
    """
    nu_s = nu_of_k(p.ell)
    nu_p = nu_of_k(0.5 * p.ell)
    return (2.0 * math.sqrt(p.epsilon * nu_s), 2.0 * math.sqrt(p.epsilon * (1.0 + nu_p)))


def tri_stable_window(p: LadderParams):
    """U0 interval where both helices and the perversion are stable."""
    lo = helical_critical_U0(p)
    hi = min(helical_stability_limit(p), exact_perversion_window(p)[1])
    return (lo, hi)


def _has_stable_perversion(p: LadderParams, n_samples: int) -> bool:
    return any(s.stable and s.contact_ok for s in solve_perversion(p, n_samples))


def stable_perversion_window(p: LadderParams, u0_max: float, n_grid: int = 60, tol: float = 1e-9, n_samples: int = 201):
    """U0 intervals in (0, u0_max] where solve_perversion finds a stable,
    contact-free perversion.  Grid scan then bisection of each switch."""
    grid = np.linspace(0.0, u0_max, n_grid + 1)[1:]
    flags = [_has_stable_perversion(p.replace(U0_hat=float(u)), n_samples) for u in grid]

    def switch(a, b, fa):
        while b - a > tol * max(1.0, b):
            c = 0.5 * (a + b)
            if _has_stable_perversion(p.replace(U0_hat=c), n_samples) == fa:
                a = c
            else:
                b = c
        return float(0.5 * (a + b))

    intervals = []
    start = 0.0 if flags[0] else None
    for i in range(1, len(grid)):
        if flags[i] != flags[i - 1]:
            x = switch(grid[i - 1], grid[i], flags[i - 1])
            if flags[i]:
                start = x
            else:
                intervals.append((start, x))
                start = None
    if start is not None:
        intervals.append((start, float(grid[-1])))
    return intervals


def expected_multiperversion_counts(L: float, epsilon: float) -> dict:
    """{k: multiplicity} for U0 = 0: one for odd k <= n, two for even 2 <= k <= n,
    where n = floor(L / L0)."""
    n = int(math.floor(L / min_perversion_length(epsilon)))
    return {k: (1 if k % 2 else 2) for k in range(1, n + 1)}
