"""Shooting solver for theta'' + V'(theta) = 0, theta'(0) = theta'(L) = U0.

The natural boundary condition fixes theta'(0), so equilibria are the
zeros of the one-variable residual

    r(theta0) = theta'(L; theta(0) = theta0, theta'(0) = U0) - U0.

All grid trajectories are integrated as one batch.  Brackets are refined by
a vectorized Illinois (modified regula falsi) iteration on a frozen step
sequence, so r is a smooth function during refinement.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from .integrate import dopri5
from .model import LadderParams, ProfileSource, SolutionProfile, potential_d1
from .stability import critical_lines

__all__ = [
    "ShootingConfig",
    "ScanResult",
    "integrate_eom",
    "shooting_scan",
    "enumerate_equilibria",
]


@dataclass(frozen=True)
class ShootingConfig:
    """Scan window for theta(0) and solver tolerances.

    ``contact_free`` drops solutions that reach |theta| >= pi.
    """

    theta0_window: tuple = (-math.pi, math.pi)
    grid_n: int = 256
    rk_tolerance: float = 1e-10
    max_bisection: int = 200
    residual_tol: float = 1e-10
    borderline_tol: float = 1e-8
    n_out: int = 2001
    contact_free: bool = True
    refine_levels: int = 10

    def __post_init__(self):
        lo, hi = self.theta0_window
        if not hi > lo:
            raise ValueError("theta0_window must be non-empty")
        if self.grid_n < 64:
            raise ValueError("grid_n must be >= 64")
        if not (self.rk_tolerance > 0 and self.residual_tol > 0 and self.borderline_tol > 0):
            raise ValueError("tolerances must be positive")
        if self.refine_levels < 0:
            raise ValueError("refine_levels must be >= 0")
        if self.max_bisection < 1 or self.n_out < 3:
            raise ValueError("max_bisection >= 1 and n_out >= 3 required")


def _rhs(p: LadderParams):
    def f(_t, y):
        out = np.empty_like(y)
        out[0] = y[1]
        out[1] = -potential_d1(y[0], p)
        return out

    return f


def _atol(p: LadderParams, rtol: float) -> float:
    return rtol * max(1e-3, math.sqrt(p.epsilon) + abs(p.U0_hat))


def integrate_eom(theta_init, thetap_init, length, p: LadderParams, n_out: int = 2001, rtol: float = 1e-10):
    """Integrate from R = 0 to ``length`` and resample on ``n_out`` uniform points."""
    if not length > 0:
        raise ValueError("length must be positive")
    if n_out < 2:
        raise ValueError("n_out must be >= 2")
    R = np.linspace(0.0, float(length), n_out)
    res = dopri5(_rhs(p), (0.0, float(length)), [float(theta_init), float(thetap_init)],
                 rtol=rtol, atol=_atol(p, rtol), t_eval=R)
    return SolutionProfile(R, res.y[0], res.y[1], ProfileSource("shooting"))


@dataclass
class ScanResult:
    theta0_grid: np.ndarray
    residual: np.ndarray
    roots: list  # refined theta(0) values with |r| < residual_tol
    borderline: list = field(default_factory=list)  # tangential near-roots
    unresolved: list = field(default_factory=list)  # brackets that did not converge


def _shoot_batch(theta0, p, L, rtol, steps=None):
    y0 = np.vstack([theta0, np.full_like(theta0, p.U0_hat)])
    res = dopri5(_rhs(p), (0.0, L), y0, rtol=rtol, atol=_atol(p, rtol), steps=steps)
    return res.y_end[1] - p.U0_hat, res.t_steps


def _refine_grid(grid, r, shoot, levels):
    """Bisect cells whose midpoint residual departs from the chord.

    Without a sign change a cell is split when the midpoint flips sign or
    departs from the chord by more than half the smaller end value, which is
    how a pair of close roots hides.  With a sign change it is split when
    the departure exceeds a quarter of the jump, which flags three roots
    in one cell but never a lone simple root once the cell is fine.
    """
    th, rr = list(grid), list(r)
    cells = [(grid[i], grid[i + 1], r[i], r[i + 1]) for i in range(len(grid) - 1)]
    for _ in range(levels):
        if not cells:
            break
        a, b, ra, rb = (np.array(c) for c in zip(*cells))
        m = 0.5 * (a + b)
        rm = shoot(m)
        th.extend(m.tolist())
        rr.extend(rm.tolist())
        dev = np.abs(rm - 0.5 * (ra + rb))
        same = ra * rb > 0
        split = np.where(same, (rm * ra <= 0) | (dev > 0.5 * np.minimum(np.abs(ra), np.abs(rb))),
                         dev > 0.25 * np.abs(rb - ra))
        cells = []
        for i in np.nonzero(split)[0]:
            cells.append((a[i], m[i], ra[i], rm[i]))
            cells.append((m[i], b[i], rm[i], rb[i]))
    order = np.argsort(th)
    return np.asarray(th)[order], np.asarray(rr)[order]


def shooting_scan(p: LadderParams, cfg: ShootingConfig = ShootingConfig()) -> ScanResult:
    """Residual on the scan grid, refined sign changes and tangential near-roots."""
    lo, hi = cfg.theta0_window
    # cell centres, so that window end points are never shot directly
    grid = lo + (np.arange(cfg.grid_n) + 0.5) * (hi - lo) / cfg.grid_n
    r, steps = _shoot_batch(grid, p, p.L, cfg.rk_tolerance)
    grid, r = _refine_grid(grid, r, lambda th: _shoot_batch(th, p, p.L, cfg.rk_tolerance)[0], cfg.refine_levels)

    def fixed(th):
        return _shoot_batch(np.asarray(th, dtype=float), p, p.L, cfg.rk_tolerance, steps)[0]

    roots = [float(grid[i]) for i in np.nonzero(np.abs(r) < cfg.residual_tol)[0]]
    sc = np.nonzero((r[:-1] * r[1:] < 0.0) & (np.abs(r[:-1]) >= cfg.residual_tol) & (np.abs(r[1:]) >= cfg.residual_tol))[0]
    unresolved = []
    if len(sc):
        a, b = grid[sc].copy(), grid[sc + 1].copy()
        fa, fb = r[sc].copy(), r[sc + 1].copy()
        done = np.zeros(len(sc), dtype=bool)
        best = np.where(np.abs(fa) < np.abs(fb), a, b)
        fbest = np.minimum(np.abs(fa), np.abs(fb))
        for it in range(cfg.max_bisection):
            act = ~done
            if not np.any(act):
                break
            # Illinois step, with plain bisection every fourth pass as a safeguard
            with np.errstate(divide="ignore", invalid="ignore"):
                c = b - fb * (b - a) / (fb - fa)
            bad = ~np.isfinite(c) | (c <= np.minimum(a, b)) | (c >= np.maximum(a, b)) | (it % 4 == 3)
            c = np.where(bad, 0.5 * (a + b), c)
            fc = fb.copy()
            fc[act] = fixed(c[act])
            upd = act & (np.abs(fc) < fbest)
            best[upd], fbest[upd] = c[upd], np.abs(fc[upd])
            flip = fc * fb < 0
            a = np.where(act, np.where(flip, b, a), a)
            fa = np.where(act, np.where(flip, fb, 0.5 * fa), fa)
            b = np.where(act, c, b)
            fb = np.where(act, fc, fb)
            done |= act & ((fbest < cfg.residual_tol) | (np.abs(b - a) <= 4e-16 * np.maximum(1.0, np.abs(b))))
        for i in range(len(sc)):
            if fbest[i] < cfg.residual_tol:
                roots.append(float(best[i]))
            else:
                unresolved.append((float(best[i]), float(fbest[i])))
    # tangential pass: interior local minima of |r| without a sign change
    borderline = []
    ar = np.abs(r)
    for i in range(1, len(grid) - 1):
        if ar[i] <= ar[i - 1] and ar[i] <= ar[i + 1] and r[i - 1] * r[i] > 0 and r[i] * r[i + 1] > 0:
            opt = minimize_scalar(lambda t: abs(float(fixed(np.array([t]))[0])), bounds=(grid[i - 1], grid[i + 1]),
                                  method="bounded", options={"xatol": 1e-12})
            if opt.fun < cfg.borderline_tol:
                borderline.append((float(opt.x), float(opt.fun)))
    return ScanResult(grid, r, sorted(roots), borderline, unresolved)


def _polish(th0, p: LadderParams, cfg: ShootingConfig, iters: int = 8):
    """Secant steps on the adaptive re-integration used for output.

    The scan refines roots on a frozen step sequence; on long ladders the
    adaptive output run can then miss theta'(L) = U0 by more than the
    residual tolerance.
    """
    def run(t):
        prof = integrate_eom(t, p.U0_hat, p.L, p, cfg.n_out, cfg.rk_tolerance)
        return prof, float(prof.theta_prime[-1] - p.U0_hat)

    best, fb = run(th0)
    if abs(fb) < cfg.residual_tol or (cfg.contact_free and np.max(np.abs(best.theta)) >= math.pi):
        return best
    x0, f0 = th0, fb
    x1 = th0 + max(1e-9, 1e-6 * abs(fb))
    _, f1 = run(x1)
    for _ in range(iters):
        if f1 == f0:
            break
        x2 = x1 - f1 * (x1 - x0) / (f1 - f0)
        prof, f2 = run(x2)
        if abs(f2) < abs(fb):
            best, fb = prof, f2
        if abs(f2) < cfg.residual_tol:
            break
        x0, f0, x1, f1 = x1, f1, x2, f2
    return best


def _dedupe(profiles, tol=1e-6):
    out = []
    for pr in profiles:
        if any(len(q) == len(pr) and np.max(np.abs(q.theta - pr.theta)) < tol for q in out):
            continue
        out.append(pr)
    return out


def enumerate_equilibria(p: LadderParams, cfg: ShootingConfig = ShootingConfig(), scan: ScanResult | None = None):
    """All equilibria whose theta(0) lies in the scan window, sorted by theta(0).

    Shooting roots are re-integrated on ``cfg.n_out`` uniform samples; at
    U0 = 0 the constant solutions are added from the critical points of V.
    """
    if scan is None:
        scan = shooting_scan(p, cfg)
    lo, hi = cfg.theta0_window
    profiles = []
    if p.U0_hat == 0.0:
        cl = critical_lines(p, (lo, hi))
        for t in cl.minima + cl.maxima + cl.degenerate:
            if lo < t < hi or (t == hi and hi < math.pi):
                profiles.append(SolutionProfile.constant(t, p.L, cfg.n_out))
    for th0 in scan.roots:
        profiles.append(_polish(th0, p, cfg))
    if cfg.contact_free:
        profiles = [q for q in profiles if np.max(np.abs(q.theta)) < math.pi]
    profiles = _dedupe(profiles)
    profiles.sort(key=lambda q: (q.theta[0], q.theta[-1]))
    return profiles
