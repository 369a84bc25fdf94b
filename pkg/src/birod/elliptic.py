"""Elliptic integrals of the first kind and Jacobi elliptic functions.

Everything here uses the *parameter* convention ``m = k**2`` and accepts
scalars or numpy arrays (broadcast together).  Scalars in give floats out.

Identities used to cover the full real range of ``m``:

* ``F(phi|m) = sin(phi) * R_F(cos(phi)**2, 1 - m sin(phi)**2, 1)`` for
  ``|phi| <= pi/2``.  R_F is finite for every real ``m`` with
  ``1 - m sin(phi)**2 >= 0``, so negative ``m`` and ``m > 1`` need no
  separate transformation for F.
* ``F(phi + n pi | m) = F(phi|m) + 2 n K(m)`` for ``m < 1``.
* ``K(m) = pi / (2 AGM(1, sqrt(1 - m)))`` for ``m < 1``.
* Jacobi functions for ``0 <= m < 1`` come from the descending Landen (AGM)
  recursion for the amplitude; ``dn = sqrt((1 - m) + m cn**2)``.
* Negative parameter, with ``mu = M/(1+M)``, ``mu1 = 1/(1+M)``,
  ``v = u sqrt(1+M)``::

      sn(u|-M) = sqrt(mu1) sd(v|mu),  cn(u|-M) = cd(v|mu),  dn(u|-M) = nd(v|mu)

* Reciprocal parameter, ``m > 1``, ``k = sqrt(m)``::

      sn(u|m) = sn(k u|1/m) / k,  cn(u|m) = dn(k u|1/m),  dn(u|m) = cn(k u|1/m)

* ``m = 1``: ``sn = tanh``, ``cn = dn = sech``, ``am = gd``.
"""

import math

import numpy as np

__all__ = [
    "EllipticDomainError",
    "carlson_rf",
    "ellint_F",
    "ellint_K",
    "ellint_Kc",
    "jacobi_ellipj",
    "jacobi_am",
    "jacobi_sn",
    "jacobi_cn",
    "jacobi_dn",
]

# R_F series truncation error is about _RF_ERRTOL**6 / 4
_RF_ERRTOL = 1.0e-3
_MAX_ITER = 64


class EllipticDomainError(ValueError):
    """Argument outside the domain of an elliptic function."""


def _prep(*args):
    arrs = np.broadcast_arrays(*[np.asarray(a, dtype=float) for a in args])
    scalar = arrs[0].ndim == 0
    arrs = [np.atleast_1d(a).astype(float, copy=True) for a in arrs]
    for a in arrs:
        if not np.all(np.isfinite(a)):
            raise EllipticDomainError("non-finite argument")
    return scalar, arrs


def _ret(scalar, *vals):
    if scalar:
        vals = tuple(float(v[0]) for v in vals)
    return vals[0] if len(vals) == 1 else vals


def carlson_rf(x, y, z):
    """Carlson's symmetric integral R_F(x, y, z) by the duplication method."""
    scalar, (x, y, z) = _prep(x, y, z)
    if np.any((x < 0) | (y < 0) | (z < 0)):
        raise EllipticDomainError("carlson_rf: negative argument")
    nzero = (x == 0).astype(int) + (y == 0) + (z == 0)
    if np.any(nzero >= 2):
        raise EllipticDomainError("carlson_rf: two or more zero arguments")
    for _ in range(_MAX_ITER):
        mu = (x + y + z) / 3.0
        dx = (mu - x) / mu
        dy = (mu - y) / mu
        dz = (mu - z) / mu
        if max(np.max(np.abs(dx)), np.max(np.abs(dy)), np.max(np.abs(dz))) < _RF_ERRTOL:
            break
        sx, sy, sz = np.sqrt(x), np.sqrt(y), np.sqrt(z)
        lam = sx * (sy + sz) + sy * sz
        x = 0.25 * (x + lam)
        y = 0.25 * (y + lam)
        z = 0.25 * (z + lam)
    e2 = dx * dy - dz * dz
    e3 = dx * dy * dz
    rf = (1.0 + (e2 / 24.0 - 0.1 - 3.0 * e3 / 44.0) * e2 + e3 / 14.0) / np.sqrt(mu)
    return _ret(scalar, rf)


def _agm_K(m, m1=None):
    a = np.ones_like(m)
    b = np.sqrt(1.0 - m if m1 is None else m1)
    for _ in range(_MAX_ITER):
        if np.all(np.abs(a - b) <= 1e-15 * a):
            break
        a, b = 0.5 * (a + b), np.sqrt(a * b)
    return math.pi / (a + b)


def ellint_K(m):
    """Complete elliptic integral of the first kind, K(m) for m < 1."""
    scalar, (m,) = _prep(m)
    if np.any(m >= 1.0):
        raise EllipticDomainError("ellint_K requires m < 1")
    return _ret(scalar, _agm_K(m))


def ellint_Kc(m1):
    """K(1 - m1) from the complementary parameter ``m1 > 0``.

    Avoids the cancellation in ``1 - m`` when m is close to 1.
    """
    scalar, (m1,) = _prep(m1)
    if np.any(m1 <= 0.0):
        raise EllipticDomainError("ellint_Kc requires m1 > 0")
    return _ret(scalar, _agm_K(1.0 - m1, m1))


def ellint_F(phi, m):
    """Incomplete elliptic integral of the first kind F(phi|m).

    For ``m < 1`` any real ``phi`` is accepted (quasi-periodic extension).
    For ``m = 1`` we need ``|phi| < pi/2``; for ``m > 1`` we need
    ``|phi| <= pi/2`` and ``|sin phi| <= 1/sqrt(m)``.
    """
    scalar, (phi, m) = _prep(phi, m)
    out = np.empty_like(phi)

    lo = m < 1.0
    if np.any(lo):
        p, mm = phi[lo], m[lo]
        n = np.round(p / math.pi)
        r = p - n * math.pi
        s, c = np.sin(r), np.cos(r)
        f = s * carlson_rf(c * c, 1.0 - mm * s * s, np.ones_like(s))
        shift = n != 0
        if np.any(shift):
            f[shift] += 2.0 * n[shift] * _agm_K(mm[shift])
        out[lo] = f

    hi = ~lo
    if np.any(hi):
        p, mm = phi[hi], m[hi]
        if np.any(np.abs(p) > 0.5 * math.pi):
            raise EllipticDomainError("ellint_F: |phi| > pi/2 with m >= 1")
        s, c = np.sin(p), np.cos(p)
        arg = 1.0 - mm * s * s
        if np.any(arg < -1e-14):
            raise EllipticDomainError("ellint_F: |sin phi| > 1/sqrt(m)")
        arg = np.maximum(arg, 0.0)
        if np.any((c * c == 0.0) | ((arg == 0.0) & (mm == 1.0))):
            raise EllipticDomainError("ellint_F: logarithmic singularity")
        out[hi] = s * carlson_rf(c * c, arg, np.ones_like(s))
    return _ret(scalar, out)


def _landen(u, m, m1):
    """sn, cn, dn, am for 0 <= m < 1 by the descending AGM recursion."""
    a = np.ones_like(m)
    b = np.sqrt(m1)
    c = np.sqrt(m)
    a_hist, c_hist = [a], [c]
    for _ in range(_MAX_ITER):
        if np.all(np.abs(c) <= 1e-17 * a):
            break
        a, b, c = 0.5 * (a + b), np.sqrt(a * b), 0.5 * (a - b)
        a_hist.append(a)
        c_hist.append(c)
    n = len(a_hist) - 1
    phi = (2.0 ** n) * a_hist[-1] * u
    for j in range(n, 0, -1):
        ratio = np.clip(c_hist[j] / a_hist[j] * np.sin(phi), -1.0, 1.0)
        phi = 0.5 * (phi + np.arcsin(ratio))
    sn = np.sin(phi)
    cn = np.cos(phi)
    dn = np.sqrt(m1 + m * cn * cn)
    return sn, cn, dn, phi


def _ellipj(u, m):
    sn = np.empty_like(u)
    cn = np.empty_like(u)
    dn = np.empty_like(u)
    am = np.empty_like(u)

    sel = (m >= 0.0) & (m < 1.0)
    if np.any(sel):
        mm = m[sel]
        sn[sel], cn[sel], dn[sel], am[sel] = _landen(u[sel], mm, 1.0 - mm)

    sel = m == 1.0
    if np.any(sel):
        uu = u[sel]
        sn[sel] = np.tanh(uu)
        cn[sel] = dn[sel] = 1.0 / np.cosh(uu)
        am[sel] = 2.0 * np.arctan(np.tanh(0.5 * uu))

    sel = m < 0.0
    if np.any(sel):
        uu, big = u[sel], -m[sel]
        kq = _agm_K(-big)
        # reduce to |r| <= K where cn >= 0 so the amplitude is an arctan2
        nper = np.round(uu / (2.0 * kq))
        r = uu - 2.0 * nper * kq
        mu1 = 1.0 / (1.0 + big)
        mu = big * mu1
        s, c, d, _ = _landen(r * np.sqrt(1.0 + big), mu, mu1)
        sgn = np.where(np.mod(nper, 2.0) == 0.0, 1.0, -1.0)
        s_r = np.sqrt(mu1) * s / d
        c_r = c / d
        sn[sel] = sgn * s_r
        cn[sel] = sgn * c_r
        dn[sel] = 1.0 / d
        am[sel] = nper * math.pi + np.arctan2(s_r, c_r)

    sel = m > 1.0
    if np.any(sel):
        mm = m[sel]
        k = np.sqrt(mm)
        inv = 1.0 / mm
        s, c, d, _ = _landen(u[sel] * k, inv, (mm - 1.0) * inv)
        sn[sel] = s / k
        cn[sel] = d
        dn[sel] = c
        am[sel] = np.arctan2(s / k, d)

    return sn, cn, dn, am


def jacobi_ellipj(u, m):
    """Return ``(sn, cn, dn, am)`` of ``u`` with parameter ``m`` (any real)."""
    scalar, (u, m) = _prep(u, m)
    return _ret(scalar, *_ellipj(u, m))


def jacobi_am(u, m):
    """Jacobi amplitude; inverse of ``F(.|m)`` (continuous in ``u`` for m <= 1)."""
    scalar, (u, m) = _prep(u, m)
    return _ret(scalar, _ellipj(u, m)[3])


def jacobi_sn(u, m):
    scalar, (u, m) = _prep(u, m)
    return _ret(scalar, _ellipj(u, m)[0])


def jacobi_cn(u, m):
    scalar, (u, m) = _prep(u, m)
    return _ret(scalar, _ellipj(u, m)[1])


def jacobi_dn(u, m):
    scalar, (u, m) = _prep(u, m)
    return _ret(scalar, _ellipj(u, m)[2])
