"""Constitutive parameters, reduced potential and energies of the ladder.

Lengths are in units of the spoke length ``a``.  The reduced energy density
is

    L(theta, theta') = (theta' - U0)**2 / 2 - V(theta),
    V(theta) = 4 b (1 - u) cos(theta) - (b - Gamma) cos(2 theta),

whose Euler-Lagrange equation is ``theta'' + V'(theta) = 0`` with the
natural boundary conditions ``theta'(0) = theta'(L) = U0``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np
from scipy.integrate import simpson
from scipy.interpolate import CubicHermiteSpline

__all__ = [
    "LadderParams",
    "PhysicalFlange",
    "PhysicalEstimate",
    "ProfileSource",
    "SolutionProfile",
    "potential",
    "potential_d1",
    "potential_d2",
    "lagrangian",
    "total_energy",
    "pseudo_energy",
    "nu_from_pseudo_energy",
    "el_residual",
    "energy_drift",
    "params_from_physical",
    "physical_estimate",
    "lawton_weaver_energy",
    "read_params",
    "write_params",
]


@dataclass(frozen=True)
class LadderParams:
    """Non-dimensional ladder parameters.

    ``b`` bending-stiffness ratio, ``gamma`` torsional ratio, ``u_hat`` the
    reference-curvature ratio, ``U0_hat`` and ``U1_hat`` the warping
    curvatures, ``L`` the flange length in spoke lengths.
    """

    b: float
    gamma: float
    u_hat: float = 1.0
    U0_hat: float = 0.0
    U1_hat: float = 0.0
    L: float = math.pi

    def __post_init__(self):
        for f in fields(self):
            if not math.isfinite(getattr(self, f.name)):
                raise ValueError(f"{f.name} must be finite")
        if self.b <= 0:
            raise ValueError("b must be positive")
        if self.gamma < 0:
            raise ValueError("gamma must be non-negative")
        if self.b - self.gamma <= 0:
            raise ValueError("epsilon = b - gamma must be positive")
        if self.L <= 0:
            raise ValueError("L must be positive")

    @property
    def epsilon(self) -> float:
        return self.b - self.gamma

    @property
    def ell(self) -> float:
        """sqrt(epsilon) * L, the length in units of a/sqrt(epsilon)."""
        return math.sqrt(self.epsilon) * self.L

    @property
    def y(self) -> float:
        """U0**2 / (4 epsilon)."""
        return self.U0_hat ** 2 / (4.0 * self.epsilon)

    @classmethod
    def from_epsilon(cls, epsilon, L, U0_hat=0.0, U1_hat=0.0, u_hat=1.0):
        """Parameters with ``gamma = 0`` and ``b = epsilon``.

        At ``u_hat = 1`` only epsilon enters the equilibrium problem.
        """
        return cls(b=epsilon, gamma=0.0, u_hat=u_hat, U0_hat=U0_hat, U1_hat=U1_hat, L=L)

    def replace(self, **changes) -> "LadderParams":
        vals = {f.name: getattr(self, f.name) for f in fields(self)}
        vals.update(changes)
        return LadderParams(**vals)


_PARAM_KEYS = ("b", "gamma", "u_hat", "U0_hat", "U1_hat", "L")


def write_params(p: LadderParams, path) -> None:
    """Write ``key = value`` lines with 17 significant digits."""
    lines = [f"{k} = {getattr(p, k):.17g}" for k in _PARAM_KEYS]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def parse_params_text(text: str) -> dict:
    vals = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in _PARAM_KEYS:
            raise ValueError(f"line {lineno}: unknown key {key!r}")
        vals[key] = float(value)
    return vals


def read_params(path, **overrides) -> LadderParams:
    vals = parse_params_text(Path(path).read_text(encoding="utf-8"))
    vals.update({k: v for k, v in overrides.items() if v is not None})
    missing = {"b", "gamma"} - set(vals)
    if missing:
        raise ValueError(f"missing keys: {sorted(missing)}")
    return LadderParams(**vals)


# --------------------------------------------------------------------------
# potential and Lagrangian


def potential(theta, p: LadderParams):
    theta = np.asarray(theta, dtype=float)
    v = 4.0 * p.b * (1.0 - p.u_hat) * np.cos(theta) - p.epsilon * np.cos(2.0 * theta)
    return v if v.ndim else float(v)


def potential_d1(theta, p: LadderParams):
    theta = np.asarray(theta, dtype=float)
    v = -4.0 * p.b * (1.0 - p.u_hat) * np.sin(theta) + 2.0 * p.epsilon * np.sin(2.0 * theta)
    return v if v.ndim else float(v)


def potential_d2(theta, p: LadderParams):
    theta = np.asarray(theta, dtype=float)
    v = -4.0 * p.b * (1.0 - p.u_hat) * np.cos(theta) + 4.0 * p.epsilon * np.cos(2.0 * theta)
    return v if v.ndim else float(v)


def lagrangian(theta, theta_prime, p: LadderParams):
    tp = np.asarray(theta_prime, dtype=float)
    val = 0.5 * (tp - p.U0_hat) ** 2 - potential(theta, p)
    return val if np.ndim(val) else float(val)


def pseudo_energy(theta, theta_prime, p: LadderParams):
    tp = np.asarray(theta_prime, dtype=float)
    val = 0.5 * tp * tp + potential(theta, p)
    return val if np.ndim(val) else float(val)


def nu_from_pseudo_energy(E, p: LadderParams):
    return 0.5 * (np.asarray(E) / p.epsilon - 1.0) if np.ndim(E) else 0.5 * (E / p.epsilon - 1.0)


# --------------------------------------------------------------------------
# sampled equilibria


@dataclass(frozen=True)
class ProfileSource:
    """Where a profile came from: ``perversion``, ``helix``, ``constant``
    (``value`` is nu for closed forms, theta for constants) or ``shooting``."""

    kind: str
    value: float | None = None

    def __str__(self):
        return self.kind if self.value is None else f"{self.kind}({self.value:.12g})"


@dataclass(frozen=True, eq=False)
class SolutionProfile:
    R: np.ndarray
    theta: np.ndarray
    theta_prime: np.ndarray
    source: ProfileSource = field(default_factory=lambda: ProfileSource("shooting"))

    def __post_init__(self):
        R = np.asarray(self.R, dtype=float)
        th = np.asarray(self.theta, dtype=float)
        tp = np.asarray(self.theta_prime, dtype=float)
        if not (R.ndim == th.ndim == tp.ndim == 1) or not (len(R) == len(th) == len(tp)):
            raise ValueError("profile arrays must be 1-D and of equal length")
        if len(R) < 2:
            raise ValueError("profile needs at least 2 samples")
        if R[0] != 0.0 or np.any(np.diff(R) < 0):
            raise ValueError("R grid must start at 0 and be nondecreasing")
        object.__setattr__(self, "R", R)
        object.__setattr__(self, "theta", th)
        object.__setattr__(self, "theta_prime", tp)

    @property
    def L(self) -> float:
        return float(self.R[-1])

    def __len__(self):
        return len(self.R)

    def is_constant(self, tol=1e-12) -> bool:
        return bool(np.ptp(self.theta) <= tol and np.max(np.abs(self.theta_prime)) <= tol)

    @classmethod
    def constant(cls, theta, L, n=3):
        R = np.linspace(0.0, L, n)
        return cls(R, np.full(n, float(theta)), np.zeros(n), ProfileSource("constant", float(theta)))

    def interpolant(self, p: LadderParams) -> CubicHermiteSpline:
        """Piecewise-cubic theta(R) using theta' as the slope data."""
        return CubicHermiteSpline(self.R, self.theta, self.theta_prime)

    def slope_interpolant(self, p: LadderParams) -> CubicHermiteSpline:
        """Piecewise-cubic theta'(R) using theta'' = -V'(theta) as slope data."""
        return CubicHermiteSpline(self.R, self.theta_prime, -potential_d1(self.theta, p))

    def resample(self, n: int, p: LadderParams) -> "SolutionProfile":
        R = np.linspace(0.0, self.L, n)
        th = self.interpolant(p)(R)
        tp = self.slope_interpolant(p)(R)
        return SolutionProfile(R, th, tp, self.source)

    def mirrored(self) -> "SolutionProfile":
        """theta -> -theta."""
        return SolutionProfile(self.R, -self.theta, -self.theta_prime, self.source)

    def reversed(self) -> "SolutionProfile":
        """R -> L - R (the same ladder seen from the other end)."""
        return SolutionProfile(self.L - self.R[::-1], self.theta[::-1], -self.theta_prime[::-1], self.source)


def total_energy(profile: SolutionProfile, p: LadderParams) -> float:
    """Composite Simpson quadrature of the Lagrangian on the profile grid."""
    if len(profile) < 3:
        raise ValueError("grid too coarse: need at least 3 samples for Simpson quadrature")
    return float(simpson(lagrangian(profile.theta, profile.theta_prime, p), x=profile.R))


def _d1_fourth_order(f, R):
    """First derivative by fourth-order differences on a uniform grid."""
    h = R[1] - R[0]
    if len(R) < 5 or not np.allclose(np.diff(R), h, rtol=1e-9, atol=0.0):
        return np.gradient(f, R, edge_order=2)
    d = np.empty_like(f)
    d[2:-2] = (f[:-4] - 8 * f[1:-3] + 8 * f[3:-1] - f[4:]) / (12 * h)
    d[0] = (-25 * f[0] + 48 * f[1] - 36 * f[2] + 16 * f[3] - 3 * f[4]) / (12 * h)
    d[1] = (-3 * f[0] - 10 * f[1] + 18 * f[2] - 6 * f[3] + f[4]) / (12 * h)
    d[-1] = -(-25 * f[-1] + 48 * f[-2] - 36 * f[-3] + 16 * f[-4] - 3 * f[-5]) / (12 * h)
    d[-2] = -(-3 * f[-1] - 10 * f[-2] + 18 * f[-3] - 6 * f[-4] + f[-5]) / (12 * h)
    return d


def el_residual(profile: SolutionProfile, p: LadderParams) -> float:
    """max |theta'' + V'(theta)| with theta'' from finite differences of theta'."""
    thpp = _d1_fourth_order(profile.theta_prime, profile.R)
    return float(np.max(np.abs(thpp + potential_d1(profile.theta, p))))


def energy_drift(profile: SolutionProfile, p: LadderParams) -> float:
    """max_R |E(R) - E(0)| / max(1, |E(0)|)."""
    E = pseudo_energy(profile.theta, profile.theta_prime, p)
    return float(np.max(np.abs(E - E[0])) / max(1.0, abs(E[0])))


# --------------------------------------------------------------------------
# physical parameters


@dataclass(frozen=True)
class PhysicalFlange:
    """Flange geometry in metres; ``mu_over_E`` is shear over Young modulus."""

    w: float
    h: float
    mu_over_E: float
    a: float
    L_dim: float

    def __post_init__(self):
        for name in ("w", "h", "a", "L_dim"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not self.mu_over_E > 0:
            raise ValueError("mu_over_E must be positive")
        if self.h >= self.w:
            raise ValueError("invalid geometry: thickness must be smaller than width")
        if self.h / self.w > 0.2:
            warnings.warn("h/w > 0.2: narrow-section stiffness estimates are poor", stacklevel=2)


# D11*, D66* of the [0_5] prototype, N m
BRISTOL_D11 = 1.986
BRISTOL_D66 = 0.0603
BRISTOL = PhysicalFlange(w=9e-3, h=0.11e-3, mu_over_E=BRISTOL_D66 / BRISTOL_D11, a=57e-3, L_dim=179e-3)


def _round_sig(x: float, sig: int) -> float:
    return float(f"{x:.{sig}g}")


@dataclass(frozen=True)
class PhysicalEstimate:
    params: LadderParams
    epsilon: float
    epsilon_rounded: float
    sqrt_b_rounded: float
    mu_over_E_rounded: float


def params_from_physical(f: PhysicalFlange, u_hat: float = 1.0) -> LadderParams:
    b = (f.h / f.w) ** 2
    return LadderParams(b=b, gamma=4.0 * b * f.mu_over_E, u_hat=u_hat, L=f.L_dim / f.a)


def physical_estimate(f: PhysicalFlange, u_hat: float = 1.0) -> PhysicalEstimate:
    """Exact parameters plus the hand-rounded epsilon.

    The rounded value keeps two significant figures in sqrt(b) = h/w and in
    mu/E before forming epsilon = b (1 - 4 mu/E).
    """
    p = params_from_physical(f, u_hat)
    sb = _round_sig(f.h / f.w, 2)
    me = _round_sig(f.mu_over_E, 2)
    eps_r = sb * sb * (1.0 - 4.0 * me)
    return PhysicalEstimate(p, p.epsilon, eps_r, sb, me)


def lawton_weaver_energy(theta, D11, D66, u_hat_dim, f: PhysicalFlange, young=1.0):
    """Thin-shell energy U(theta) of the constrained ladder and our estimate.

    Returns ``(U, E_approx)``.  ``U`` includes its theta-independent
    constant.  ``E_approx`` is the rod-model energy with theta' = 0 and the
    axis curvature at rest, scaled by the Young modulus ``young``.
    """
    theta = np.asarray(theta, dtype=float)
    ratio = D66 / D11
    au = f.a * u_hat_dim
    U = 2.0 * D11 * f.L_dim * f.w / f.a ** 2 * (
        (0.25 - ratio) * np.cos(2 * theta) - np.cos(theta) * (1.0 - au) + ratio + 0.5 * (au - 1.0) ** 2
    )
    E_approx = young * f.w * f.h ** 3 * f.L_dim / (12.0 * f.a) * (
        (0.25 - f.mu_over_E) * np.cos(2 * theta) - np.cos(theta) * (1.0 - au)
    )
    if theta.ndim == 0:
        return float(U), float(E_approx)
    return U, E_approx
