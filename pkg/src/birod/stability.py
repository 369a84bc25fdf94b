"""Phase-plane stability of ladder equilibria.

A non-constant equilibrium traces a curve in the (theta, theta') plane.
Its index J counts transversal crossings of the vertical lines through the
minima of V minus crossings of the lines through the maxima.  J > 0 means
the equilibrium is not a local minimum of the energy and J < 0 means it is.
Constant equilibria are minima iff V'' < 0 there.

:func:`second_variation_min_eig` is an independent finite-dimensional
witness: the lowest eigenvalue of ``-h'' - V''(theta) h`` with free ends.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh_tridiagonal
from scipy.optimize import brentq

from .model import LadderParams, SolutionProfile, potential_d1, potential_d2

__all__ = [
    "CriticalLines",
    "PhaseTrajectory",
    "Verdict",
    "StabilityVerdict",
    "HypothesisViolation",
    "OracleResult",
    "critical_lines",
    "stability_index",
    "classify",
    "second_variation_min_eig",
    "second_variation_mode",
    "oracle_check",
    "oracle_agrees",
]

SCAN_CELLS = 2048
DEGENERATE_TOL = 1e-12
TRANSVERSAL_TOL = 1e-9
LANDING_TOL = 1e-8


class HypothesisViolation(ValueError):
    """The trajectory meets a critical line with theta' = 0."""


@dataclass(frozen=True)
class CriticalLines:
    minima: tuple
    maxima: tuple
    window: tuple
    degenerate: tuple = ()


def _period_roots(p: LadderParams):
    """Roots of V' on [-pi, pi) by sign-change scan plus brentq."""
    # offset keeps the symmetric roots 0, +-pi/2, pi off the cell edges
    lo = -math.pi - 0.1234
    grid = np.linspace(lo, lo + 2 * math.pi, SCAN_CELLS + 1)
    vals = potential_d1(grid, p)
    roots = []
    f = lambda t: potential_d1(t, p)  # noqa: E731
    for i in range(SCAN_CELLS):
        a, b, fa, fb = grid[i], grid[i + 1], vals[i], vals[i + 1]
        if fa == 0.0:
            roots.append(a)
        elif fa * fb < 0.0:
            roots.append(brentq(f, a, b, xtol=1e-15))
    out = []
    for r in roots:
        r = (r + math.pi) % (2 * math.pi) - math.pi
        for exact in (-math.pi, -0.5 * math.pi, 0.0, 0.5 * math.pi, math.pi):
            if abs(r - exact) < 1e-6 and abs(potential_d1(exact, p)) <= abs(potential_d1(r, p)):
                r = exact
        if r >= math.pi - 1e-12:
            r = -math.pi
        if not any(abs(r - q) < 1e-10 for q in out):
            out.append(r)
    return sorted(out)


def critical_lines(p: LadderParams, window=(-math.pi, math.pi)) -> CriticalLines:
    """Critical points of V inside the closed ``window``, sorted.

    V is 2 pi periodic, so one period is scanned and the roots replicated.
    """
    lo, hi = map(float, window)
    if not hi > lo:
        raise ValueError("empty window")
    base = _period_roots(p)
    mins, maxs, degen = [], [], []
    kmin = math.floor((lo + math.pi) / (2 * math.pi)) - 1
    kmax = math.ceil((hi + math.pi) / (2 * math.pi)) + 1
    for k in range(kmin, kmax + 1):
        for r in base:
            t = r + 2 * math.pi * k
            if not (lo - 1e-12 <= t <= hi + 1e-12):
                continue
            v2 = potential_d2(t, p)
            if abs(v2) < DEGENERATE_TOL:
                degen.append(t)
            elif v2 > 0:
                mins.append(t)
            else:
                maxs.append(t)
    return CriticalLines(tuple(sorted(mins)), tuple(sorted(maxs)), (lo, hi), tuple(sorted(degen)))


@dataclass(frozen=True, eq=False)
class PhaseTrajectory:
    theta: np.ndarray
    theta_prime: np.ndarray

    def __post_init__(self):
        th = np.asarray(self.theta, dtype=float)
        tp = np.asarray(self.theta_prime, dtype=float)
        if th.shape != tp.shape or th.ndim != 1 or len(th) < 2:
            raise ValueError("trajectory needs >= 2 paired samples")
        if not (np.all(np.isfinite(th)) and np.all(np.isfinite(tp))):
            raise ValueError("trajectory has non-finite samples")
        object.__setattr__(self, "theta", th)
        object.__setattr__(self, "theta_prime", tp)

    @classmethod
    def from_profile(cls, profile: SolutionProfile):
        return cls(profile.theta, profile.theta_prime)

    @property
    def points(self):
        return np.column_stack([self.theta, self.theta_prime])


def _crossings(traj: PhaseTrajectory, c: float) -> int:
    s = traj.theta - c
    tp = traj.theta_prime
    n = len(s)
    s = s.copy()
    count = 0
    for end in (0, n - 1):
        if abs(s[end]) <= LANDING_TOL:
            if abs(tp[end]) < TRANSVERSAL_TOL:
                raise HypothesisViolation(f"trajectory ends on critical line {c:.12g} with theta' = 0")
            s[end] = 0.0
            count += 1
    prod = s[:-1] * s[1:]
    idx = np.nonzero(prod < 0.0)[0]
    if len(idx):
        w = s[idx] / (s[idx] - s[idx + 1])
        tpc = tp[idx] + w * (tp[idx + 1] - tp[idx])
        if np.any(np.abs(tpc) < TRANSVERSAL_TOL):
            raise HypothesisViolation(f"non-transversal crossing of line {c:.12g}")
        count += len(idx)
    # interior samples exactly on the line
    zeros = np.nonzero(s[1:-1] == 0.0)[0] + 1
    for i in zeros:
        if abs(tp[i]) < TRANSVERSAL_TOL:
            raise HypothesisViolation(f"trajectory touches critical line {c:.12g} with theta' = 0")
        if s[i - 1] * s[i + 1] < 0.0:
            count += 1
    return count


def stability_index(traj: PhaseTrajectory, lines: CriticalLines) -> int:
    """J = crossings of minima lines minus crossings of maxima lines.

    A trajectory ending on a line (within 1e-8) counts that landing once.
    Raises :class:`HypothesisViolation` on a crossing with |theta'| < 1e-9.
    """
    return sum(_crossings(traj, c) for c in lines.minima) - sum(_crossings(traj, c) for c in lines.maxima)


class Verdict(enum.Enum):
    STABLE = "Stable"
    UNSTABLE = "Unstable"
    INDETERMINATE = "Indeterminate"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class StabilityVerdict:
    kind: Verdict
    index_J: int | None = None
    reason: str = ""
    oracle_eigenvalue: float | None = None

    @property
    def decided(self) -> bool:
        return self.kind is not Verdict.INDETERMINATE

    def with_oracle(self, eig: float) -> "StabilityVerdict":
        return StabilityVerdict(self.kind, self.index_J, self.reason, float(eig))

    def __str__(self):
        return str(self.kind)


def _classify_constant(theta: float, p: LadderParams) -> StabilityVerdict:
    v2 = potential_d2(theta, p)
    if abs(v2) < DEGENERATE_TOL:
        return StabilityVerdict(Verdict.INDETERMINATE, None, "degenerate critical point: V'' = 0")
    if v2 < 0:
        return StabilityVerdict(Verdict.STABLE, None, "constant with V'' < 0")
    return StabilityVerdict(Verdict.UNSTABLE, None, "constant with V'' > 0")


def classify(profile: SolutionProfile, p: LadderParams) -> StabilityVerdict:
    """Verdict from the sign of V'' (constants) or the index J."""
    if profile.is_constant():
        return _classify_constant(float(profile.theta[0]), p)
    traj = PhaseTrajectory.from_profile(profile)
    th = traj.theta
    lines = critical_lines(p, (float(th.min()) - 0.5, float(th.max()) + 0.5))
    for c in lines.degenerate:
        if th.min() - LANDING_TOL <= c <= th.max() + LANDING_TOL:
            return StabilityVerdict(Verdict.INDETERMINATE, None, f"trajectory meets degenerate critical point {c:.12g}")
    try:
        J = stability_index(traj, lines)
    except HypothesisViolation as exc:
        return StabilityVerdict(Verdict.INDETERMINATE, None, f"hypothesis violated: {exc}")
    if J < 0:
        return StabilityVerdict(Verdict.STABLE, J, "J < 0")
    if J > 0:
        return StabilityVerdict(Verdict.UNSTABLE, J, "J > 0")
    return StabilityVerdict(Verdict.INDETERMINATE, 0, "index zero: theorem silent")


# --------------------------------------------------------------------------
# second-variation oracle


def _operator(profile: SolutionProfile, p: LadderParams, n: int):
    if n < 32:
        raise ValueError("n must be >= 32")
    L = profile.L
    R = np.linspace(0.0, L, n)
    if profile.is_constant():
        th = np.full(n, profile.theta[0])
    else:
        th = profile.interpolant(p)(R)
    h = L / (n - 1)
    mass = np.full(n, h)
    mass[0] = mass[-1] = 0.5 * h
    stiff = np.full(n, 2.0 / h)
    stiff[0] = stiff[-1] = 1.0 / h
    diag = stiff / mass - potential_d2(th, p)
    off = -(1.0 / h) / np.sqrt(mass[:-1] * mass[1:])
    return R, diag, off, mass


def second_variation_min_eig(profile: SolutionProfile, p: LadderParams, n: int = 512) -> float:
    """Smallest eigenvalue of the discretized second variation.

    P1 finite elements with lumped mass on ``n`` uniform nodes and free ends
    (the natural boundary conditions leave h unconstrained).
    """
    _, diag, off, _ = _operator(profile, p, n)
    w = eigh_tridiagonal(diag, off, eigvals_only=True, select="i", select_range=(0, 0))
    return float(w[0])


def second_variation_mode(profile: SolutionProfile, p: LadderParams, n: int = 512):
    """``(eigenvalue, R, h)`` of the lowest mode, ``h`` scaled to max|h| = 1."""
    R, diag, off, mass = _operator(profile, p, n)
    w, v = eigh_tridiagonal(diag, off, select="i", select_range=(0, 0))
    h = v[:, 0] / np.sqrt(mass)
    h /= np.max(np.abs(h))
    return float(w[0]), R, h


@dataclass(frozen=True)
class OracleResult:
    eig: float
    eig_fine: float
    refinement_error: float
    scale: float
    sign: int  # +1, -1 or 0 when not resolved

    @property
    def decided(self) -> bool:
        return self.sign != 0


def oracle_check(profile: SolutionProfile, p: LadderParams, n: int = 512) -> OracleResult:
    """Lowest eigenvalue at ``n`` and ``2n - 1`` nodes with a resolved sign.

    The sign counts as resolved when |eig| exceeds both 1e-6 times the
    potential scale max|V''| and four times the change under refinement.
    """
    e1 = second_variation_min_eig(profile, p, n)
    e2 = second_variation_min_eig(profile, p, 2 * n - 1)
    err = abs(e2 - e1)
    scale = float(np.max(np.abs(potential_d2(profile.theta, p))))
    scale = max(scale, 1e-300)
    resolved = abs(e2) > max(1e-6 * scale, 4.0 * err) and np.sign(e1) == np.sign(e2)
    return OracleResult(e1, e2, err, scale, int(np.sign(e2)) if resolved else 0)


def oracle_agrees(verdict: StabilityVerdict, oracle: OracleResult) -> bool | None:
    """True/False when both are decided, None otherwise."""
    if not verdict.decided or not oracle.decided:
        return None
    return (oracle.sign > 0) == (verdict.kind is Verdict.STABLE)
