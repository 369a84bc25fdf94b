"""Dormand-Prince 5(4) integrator for batches of initial conditions.

The state has shape ``(d,)`` or ``(d, batch)``; all trajectories share the
step sequence, chosen by the worst member.  Dense output between accepted
steps uses the fourth-order continuous extension of the pair.

Two extras not found in :func:`scipy.integrate.solve_ivp`: a ``post_step``
hook (used to project director frames back onto the constraint manifold)
and a fixed-step mode that replays a given step sequence, which makes the
end state a smooth function of the initial data.  Shooting root finders
rely on the latter.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["IntegrationError", "ODEResult", "dopri5"]

# Dormand-Prince tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_A_FULL = np.zeros((7, 7))
for _i, _row in enumerate(_A):
    _A_FULL[_i, : len(_row)] = _row
_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_E = _B - np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
# continuous extension: y(t + s h) = y + h sum_i k_i (P[i] . [s, s^2, s^3, s^4])
_P = np.array([
    [1, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
    [0, 0, 0, 0],
    [0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
    [0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
    [0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
    [0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
    [0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
])


class IntegrationError(RuntimeError):
    """Step-size underflow or a non-finite state."""


@dataclass
class ODEResult:
    t: np.ndarray  # output times
    y: np.ndarray  # shape (d, len(t)) or (d, len(t), batch)
    t_steps: np.ndarray  # accepted step boundaries, t0 ... t1
    n_rejected: int

    @property
    def y_end(self):
        return self.y[:, -1]


def _max_norm(err, y_old, y_new, rtol, atol):
    scale = atol + rtol * np.maximum(np.abs(y_old), np.abs(y_new))
    return float(np.max(np.abs(err) / scale))


@np.errstate(over="ignore", invalid="ignore")
def _step(fun, t, y, f, h):
    K = np.empty((7,) + y.shape)
    K2 = K.reshape(7, -1)
    K[0] = f
    for i in range(1, 7):
        K[i] = fun(t + _C[i] * h, y + h * (_A_FULL[i, :i] @ K2[:i]).reshape(y.shape))
    # FSAL: the last stage is evaluated at y_new
    y_new = y + h * (_A_FULL[6, :6] @ K2[:6]).reshape(y.shape)
    err = h * (_E @ K2).reshape(y.shape)
    return y_new, K, err


def _dense(t, t0, h, y0, k):
    """Continuous extension at times ``t``; returns shape (d, len(t), ...)."""
    s = (t - t0) / h
    powers = np.stack([s, s * s, s ** 3, s ** 4])  # (4, n_t)
    w = _P @ powers  # (7, n_t)
    K = np.asarray(k)  # (7, d, ...)
    incr = (w.T @ K.reshape(7, -1)).reshape((len(s),) + K.shape[1:])  # (n_t, d, ...)
    return y0[:, None, ...] + h * np.moveaxis(incr, 0, 1)


def dopri5(
    fun,
    t_span,
    y0,
    *,
    rtol=1e-10,
    atol=1e-12,
    t_eval=None,
    steps=None,
    post_step=None,
    error_norm=None,
    h0=None,
    max_steps=1_000_000,
):
    """Integrate ``y' = fun(t, y)`` over ``t_span = (t0, t1)`` with ``t1 > t0``.

    Parameters
    ----------
    fun : callable ``fun(t, y) -> array`` of the same shape as ``y``.
    y0 : array of shape ``(d,)`` or ``(d, batch)``.
    t_eval : optional increasing output times within ``t_span``; defaults to
        the accepted step boundaries.
    steps : optional array of step boundaries ``t0 < ... < t1``.  When given
        the integration is fixed-step along it (no error control).
    post_step : optional ``g(t, y) -> y`` applied after each accepted step.
    error_norm : optional ``norm(err, y_old, y_new) -> float`` replacing the
        mixed absolute/relative max norm; must return ~1 at the target.

    Returns
    -------
    ODEResult
    """
    t0, t1 = map(float, t_span)
    if not t1 > t0:
        raise ValueError("t_span must be increasing")
    y = np.array(y0, dtype=float)
    if not np.all(np.isfinite(y)):
        raise IntegrationError(f"non-finite initial state at t={t0}")
    if error_norm is None:
        error_norm = lambda e, a, b: _max_norm(e, a, b, rtol, atol)  # noqa: E731
    if t_eval is not None:
        t_eval = np.asarray(t_eval, dtype=float)
        if np.any(np.diff(t_eval) < 0) or t_eval[0] < t0 - 1e-12 * abs(t0 - t1) or t_eval[-1] > t1 + 1e-12 * abs(t1 - t0):
            raise ValueError("t_eval must be increasing and inside t_span")

    out_t, out_y = [], []
    ei = 0  # next t_eval index

    def emit(ta, tb, ya, k, yb, last):
        nonlocal ei
        if t_eval is None:
            out_t.append(tb)
            out_y.append(yb.copy())
            return
        j = ei
        n = len(t_eval)
        while j < n and (t_eval[j] <= tb or last):
            j += 1
        if j > ei:
            tt = np.clip(t_eval[ei:j], ta, tb)
            yy = _dense(tt, ta, tb - ta, ya, k)
            # exact values at step boundaries
            yy[:, tt == tb] = yb[:, None, ...]
            out_t.extend(tt)
            out_y.extend(np.moveaxis(yy, 1, 0))
            ei = j

    f = fun(t0, y)
    if t_eval is None:
        out_t.append(t0)
        out_y.append(y.copy())
    else:
        while ei < len(t_eval) and t_eval[ei] <= t0:
            out_t.append(t0)
            out_y.append(y.copy())
            ei += 1

    t = t0
    accepted = [t0]
    n_rej = 0

    if steps is not None:
        steps = np.asarray(steps, dtype=float)
        for tb in steps[1:]:
            h = tb - t
            y_new, k, _ = _step(fun, t, y, f, h)
            f_new = k[6]
            if post_step is not None:
                y_new = post_step(tb, y_new)
                f_new = fun(tb, y_new)
            emit(t, tb, y, k, y_new, tb == steps[-1])
            t, y, f = tb, y_new, f_new
            accepted.append(t)
    else:
        span = t1 - t0
        if h0 is None:
            d0 = np.sqrt(np.mean(y * y)) + atol
            d1 = np.sqrt(np.mean(f * f)) + atol
            h = min(span, 0.01 * d0 / d1 if d1 > 1e-300 else 1e-3 * span)
            h = max(h, 1e-6 * span)
        else:
            h = min(float(h0), span)
        h_min = 1e-14 * max(1.0, abs(t0), abs(t1))
        nsteps = 0
        while t < t1:
            nsteps += 1
            if nsteps > max_steps:
                raise IntegrationError(f"too many steps at t={t:.17g}")
            last = t + h >= t1 - 1e-14 * span
            if last:
                h = t1 - t
            y_new, k, err = _step(fun, t, y, f, h)
            f_new = k[6]
            en = error_norm(err, y, y_new)
            if not np.isfinite(en):
                en = np.inf
            if en <= 1.0:
                tb = t1 if last else t + h
                if post_step is not None:
                    y_new = post_step(tb, y_new)
                    f_new = fun(tb, y_new)
                emit(t, tb, y, k, y_new, last)
                t, y, f = tb, y_new, f_new
                accepted.append(t)
                fac = 5.0 if en == 0.0 else min(5.0, max(0.2, 0.9 * en ** -0.2))
                h *= fac
            else:
                n_rej += 1
                h *= max(0.1, 0.9 * en ** -0.2) if np.isfinite(en) else 0.1
                if h < h_min:
                    raise IntegrationError(f"step size underflow at t={t:.17g}")
    if not np.all(np.isfinite(y)):
        raise IntegrationError(f"non-finite state at t={t:.17g}")
    return ODEResult(
        t=np.asarray(out_t),
        y=np.stack(out_y, axis=1),
        t_steps=np.asarray(accepted),
        n_rejected=n_rej,
    )
