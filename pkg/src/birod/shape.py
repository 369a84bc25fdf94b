"""3D geometry of the two flanges from an equilibrium profile.

Lengths are in units of the spoke length.  The frame {d_a, d3-, d3+}
(spoke direction and the two flange tangents) rotates with

    U = Ucal d_a + d_a x (d3+ - d3-),
    d3+-' = (U +- theta'/2 d_a) x d3+-,     d_a' = U x d_a,

with ``Ucal = U1_hat / 2``.  The first flange follows ``r-' = d3-`` and
the second is ``r+ = r- + d_a``.  theta is the angle that rotates d3- onto
d3+ about d_a.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .integrate import dopri5
from .model import LadderParams, SolutionProfile

__all__ = [
    "DirectorFrame",
    "ShapeGeometry",
    "default_frame",
    "reconstruct",
    "frame_angle",
    "sub_rod_curvatures",
    "frame_consistency_residual",
    "reference_centerline",
    "circle_radius",
    "centerline_torsion",
    "export_csv",
    "read_csv",
    "export_obj",
]

FRAME_TOL = 1e-9
ANGLE_TOL = 1e-7


def _unit(v):
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


@dataclass(frozen=True, eq=False)
class DirectorFrame:
    d_a: np.ndarray
    d3_minus: np.ndarray
    d3_plus: np.ndarray

    def __post_init__(self):
        for name in ("d_a", "d3_minus", "d3_plus"):
            v = np.asarray(getattr(self, name), dtype=float)
            if v.shape != (3,) or not np.all(np.isfinite(v)):
                raise ValueError(f"{name} must be a finite 3-vector")
            object.__setattr__(self, name, v)

    def validate(self, tol: float = FRAME_TOL):
        for name in ("d_a", "d3_minus", "d3_plus"):
            if abs(np.linalg.norm(getattr(self, name)) - 1.0) > tol:
                raise ValueError(f"frame violation: |{name}| != 1")
        if abs(self.d_a @ self.d3_minus) > tol or abs(self.d_a @ self.d3_plus) > tol:
            raise ValueError("frame violation: d_a not perpendicular to d3")

    @property
    def angle(self) -> float:
        return float(frame_angle(self.d_a, self.d3_minus, self.d3_plus))


def frame_angle(d_a, d3m, d3p):
    """Signed angle rotating d3- onto d3+ about d_a, in (-pi, pi]."""
    s = np.sum(d_a * np.cross(d3m, d3p), axis=-1)
    c = np.sum(d3m * d3p, axis=-1)
    return np.arctan2(s, c)


def _wrap(a):
    return (a + math.pi) % (2.0 * math.pi) - math.pi


def default_frame(theta0: float) -> DirectorFrame:
    """d_a = e_x and d3-+ = e_z rotated about e_x by -+theta0/2."""
    h = 0.5 * theta0
    return DirectorFrame(
        np.array([1.0, 0.0, 0.0]),
        np.array([0.0, math.sin(h), math.cos(h)]),
        np.array([0.0, -math.sin(h), math.cos(h)]),
    )


@dataclass(frozen=True, eq=False)
class ShapeGeometry:
    R: np.ndarray
    r_minus: np.ndarray  # (n, 3)
    r_plus: np.ndarray
    d_a: np.ndarray
    d3_minus: np.ndarray
    d3_plus: np.ndarray
    theta: np.ndarray
    spokes: np.ndarray  # sample indices carrying a rendered spoke
    max_frame_drift: float = 0.0

    def __len__(self):
        return len(self.R)

    def frame(self, i: int) -> DirectorFrame:
        return DirectorFrame(self.d_a[i], self.d3_minus[i], self.d3_plus[i])

    def spoke_lengths(self):
        return np.linalg.norm(self.r_plus - self.r_minus, axis=1)

    def measured_angle(self):
        return frame_angle(self.d_a, self.d3_minus, self.d3_plus)

    def angle_error(self) -> float:
        """max |angle(d3-, d3+) - theta| modulo 2 pi."""
        return float(np.max(np.abs(_wrap(self.measured_angle() - self.theta))))

    def rigidity_error(self) -> float:
        return float(np.max(np.abs(self.spoke_lengths() - 1.0)))


def default_spokes(n: int, every: int | None = None):
    if every is None:
        every = max(1, (n - 1) // 40)
    if every < 1:
        raise ValueError("spoke spacing must be >= 1")
    return np.arange(0, n, every)


def _cross(a, b):
    # np.cross carries too much overhead for single 3-vectors
    return np.array([a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]])


def _frame_rhs(Ucal, tp_of_R):
    def f(R, y):
        da, dm, dp = y[0:3], y[3:6], y[6:9]
        U = Ucal * da + _cross(da, dp - dm)
        half = 0.5 * tp_of_R(R) * da
        out = np.empty(12)
        out[0:3] = _cross(U, da)
        out[3:6] = _cross(U - half, dm)
        out[6:9] = _cross(U + half, dp)
        out[9:12] = dm
        return out

    return f


def reconstruct(profile: SolutionProfile, p: LadderParams, init: DirectorFrame | None = None,
                rtol: float = 1e-12, spoke_every: int | None = None, origin=None) -> ShapeGeometry:
    """Integrate the frame and centreline ODEs along the profile.

    ``init`` defaults to :func:`default_frame`; a custom frame must be
    orthonormal where required and carry the angle theta(0).  ``origin`` is
    r-(0), default 0.
    """
    if init is None:
        init = default_frame(float(profile.theta[0]))
    init.validate()
    if abs(_wrap(init.angle - profile.theta[0])) > ANGLE_TOL:
        raise ValueError("frame violation: initial angle differs from theta(0)")
    if profile.is_constant():
        tp0 = float(profile.theta_prime[0])
        rhs = _frame_rhs(0.5 * p.U1_hat, lambda R: tp0)
    else:
        tp = profile.slope_interpolant(p)
        rhs = _frame_rhs(0.5 * p.U1_hat, lambda R: float(tp(R)))
    drift = [0.0]

    def project(_R, y):
        y = y.copy()
        da = y[0:3]
        nda = np.linalg.norm(da)
        dd = abs(nda - 1.0)
        da = da / nda
        for sl in (slice(3, 6), slice(6, 9)):
            v = y[sl]
            dd = max(dd, abs(np.linalg.norm(v) - 1.0), abs(v @ da))
            v = v - (v @ da) * da
            y[sl] = v / np.linalg.norm(v)
        y[0:3] = da
        drift[0] = max(drift[0], dd)
        return y

    # rotation- and translation-invariant error measure
    def norm(err, _a, _b):
        e = np.linalg.norm(err.reshape(4, 3), axis=1)
        return float(np.max(e) / rtol)

    r0 = np.zeros(3) if origin is None else np.asarray(origin, dtype=float).reshape(3)
    y0 = np.concatenate([init.d_a, init.d3_minus, init.d3_plus, r0])
    if profile.L == 0:
        raise ValueError("zero-length profile")
    res = dopri5(rhs, (0.0, profile.L), y0, t_eval=profile.R, post_step=project, error_norm=norm)
    Y = res.y.T  # (n, 12)
    da = _unit(Y[:, 0:3])
    dm = Y[:, 3:6] - np.sum(Y[:, 3:6] * da, axis=1, keepdims=True) * da
    dp = Y[:, 6:9] - np.sum(Y[:, 6:9] * da, axis=1, keepdims=True) * da
    dm, dp = _unit(dm), _unit(dp)
    rm = Y[:, 9:12]
    return ShapeGeometry(profile.R.copy(), rm, rm + da, da, dm, dp, profile.theta.copy(),
                         default_spokes(len(profile), spoke_every), drift[0])


def sub_rod_curvatures(profile: SolutionProfile, p: LadderParams, geom: ShapeGeometry):
    """Darboux vectors ``(u-, u+)`` of the flanges, each of shape (n, 3)."""
    da, dm, dp = geom.d_a, geom.d3_minus, geom.d3_plus
    U = 0.5 * p.U1_hat * da + np.cross(da, dp - dm)
    half = 0.5 * profile.theta_prime[:, None] * da
    return U - half, U + half


def frame_consistency_residual(profile: SolutionProfile, p: LadderParams, geom: ShapeGeometry) -> float:
    """max |d3+-' - u+- x d3+-| with d3+-' from fourth-order central differences.

    Interior samples only; needs a uniform grid.
    """
    R = geom.R
    h = R[1] - R[0]
    if not np.allclose(np.diff(R), h, rtol=1e-9, atol=0.0) or len(R) < 5:
        raise ValueError("uniform grid with >= 5 samples required")
    um, up = sub_rod_curvatures(profile, p, geom)
    worst = 0.0
    for d, u in ((geom.d3_minus, um), (geom.d3_plus, up)):
        fd = (d[:-4] - 8 * d[1:-3] + 8 * d[3:-1] - d[4:]) / (12 * h)
        exact = np.cross(u, d)[2:-2]
        worst = max(worst, float(np.max(np.abs(fd - exact))))
    return worst


def reference_centerline(u1: float, u2: float, u3: float = 0.0, length: float = 2 * math.pi, n: int = 721):
    """Centreline of a free rod with constant body curvatures (u1, u2, u3)."""
    kap = np.array([u1, u2, u3], dtype=float)

    def f(_s, y):
        D = y[:9].reshape(3, 3)  # rows d1, d2, d3
        w = kap @ D  # Darboux vector in space
        return np.concatenate([np.cross(w, D).ravel(), D[2]])

    y0 = np.concatenate([np.eye(3).ravel(), np.zeros(3)])
    s = np.linspace(0.0, length, n)
    res = dopri5(f, (0.0, length), y0, rtol=1e-13, atol=1e-13, t_eval=s)
    return res.y[9:12].T


def circle_radius(points) -> float:
    """Least-squares circle radius of points lying in a plane."""
    P = np.asarray(points, dtype=float)
    c = P.mean(axis=0)
    _, _, vt = np.linalg.svd(P - c)
    xy = (P - c) @ vt[:2].T
    A = np.column_stack([2 * xy, np.ones(len(xy))])
    b = np.sum(xy * xy, axis=1)
    sol = np.linalg.lstsq(A, b, rcond=None)[0]
    return float(math.sqrt(sol[2] + sol[0] ** 2 + sol[1] ** 2))


def centerline_torsion(points, R):
    """Torsion of a sampled curve, (r' x r'') . r''' / |r' x r''|**2."""
    P = np.asarray(points, dtype=float)
    d1 = np.gradient(P, R, axis=0, edge_order=2)
    d2 = np.gradient(d1, R, axis=0, edge_order=2)
    d3 = np.gradient(d2, R, axis=0, edge_order=2)
    c = np.cross(d1, d2)
    return np.sum(c * d3, axis=1) / np.sum(c * c, axis=1)


# --------------------------------------------------------------------------
# export

CSV_HEADER = "R,rmx,rmy,rmz,rpx,rpy,rpz,theta"


def _check_nonempty(geom: ShapeGeometry):
    if len(geom) == 0:
        raise ValueError("empty geometry: nothing to export")


def export_csv(geom: ShapeGeometry, path) -> None:
    """One row per sample, 17 significant digits."""
    _check_nonempty(geom)
    data = np.column_stack([geom.R, geom.r_minus, geom.r_plus, geom.theta])
    path = Path(path)
    try:
        np.savetxt(path, data, fmt="%.17g", delimiter=",", header=CSV_HEADER, comments="")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc


def read_csv(path):
    """``(R, r_minus, r_plus, theta)`` from :func:`export_csv` output."""
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return data[:, 0], data[:, 1:4], data[:, 4:7], data[:, 7]


def export_obj(geom: ShapeGeometry, path, spoke_every: int | None = None) -> None:
    """Wavefront OBJ: 2n vertices, two flange polylines and spoke segments."""
    _check_nonempty(geom)
    n = len(geom)
    spokes = geom.spokes if spoke_every is None else default_spokes(n, spoke_every)
    lines = [f"# ladder geometry, {n} samples per flange"]
    lines += ["v %.17g %.17g %.17g" % tuple(v) for v in geom.r_minus]
    lines += ["v %.17g %.17g %.17g" % tuple(v) for v in geom.r_plus]
    lines.append("l " + " ".join(str(i) for i in range(1, n + 1)))
    lines.append("l " + " ".join(str(i) for i in range(n + 1, 2 * n + 1)))
    lines += [f"l {i + 1} {n + i + 1}" for i in spokes]
    path = Path(path)
    try:
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc
