"""Vectorised numpy kernels, used when numba is unavailable or disabled."""
import numpy as np


def _terms(p, q, dq):
    l1, l2, m1, m2, r1, r2, I1, I2, ml, g = p
    q1, q2 = q[..., 0], q[..., 1]
    dq1, dq2 = dq[..., 0], dq[..., 1]
    c2, s2 = np.cos(q2), np.sin(q2)
    s1, c1 = np.sin(q1), np.cos(q1)
    s12, c12 = np.sin(q1 + q2), np.cos(q1 + q2)
    a = I1 + m1 * r1**2 + I2 + m2 * (l1**2 + r2**2) + ml * (l1**2 + l2**2)
    b = m2 * l1 * r2 + ml * l1 * l2
    d = I2 + m2 * r2**2 + ml * l2**2
    M11 = a + 2.0 * b * c2
    M12 = d + b * c2
    M22 = np.full_like(q1, d)
    h = -b * s2
    cv1 = h * dq2 * dq1 + h * (dq1 + dq2) * dq2
    cv2 = -h * dq1 * dq1
    G2 = -g * (m2 * r2 + ml * l2) * s12
    G1 = -g * (m1 * r1 + (m2 + ml) * l1) * s1 + G2
    J = (l1 * c1 + l2 * c12, l2 * c12, -l1 * s1 - l2 * s12, -l2 * s12)
    return M11, M12, M22, cv1, cv2, G1, G2, J


def inverse_dynamics_batch(p, theta, dtheta, ddtheta, load_force, tau_ext):
    M11, M12, M22, cv1, cv2, G1, G2, (J11, J12, J21, J22) = _terms(p, theta, dtheta)
    fx, fy = load_force[:, 0], load_force[:, 1]
    out = np.empty_like(theta, dtype=float)
    out[:, 0] = (M11 * ddtheta[:, 0] + M12 * ddtheta[:, 1] + cv1 + G1
                 - (J11 * fx + J21 * fy))
    out[:, 1] = (M12 * ddtheta[:, 0] + M22 * ddtheta[:, 1] + cv2 + G2
                 - (J12 * fx + J22 * fy) + tau_ext)
    return out


def _accel(p, q, dq, tau, f, te):
    M11, M12, M22, cv1, cv2, G1, G2, (J11, J12, J21, J22) = _terms(p, q, dq)
    b1 = tau[0] + J11 * f[0] + J21 * f[1] - cv1 - G1
    b2 = tau[1] + J12 * f[0] + J22 * f[1] - te - cv2 - G2
    det = M11 * M22 - M12 * M12
    return np.array([(M22 * b1 - M12 * b2) / det, (M11 * b2 - M12 * b1) / det])


def rk4_integrate(p, theta0, dtheta0, tau, load_force, tau_ext, dt):
    # divergence is reported through the returned step index, not warnings
    with np.errstate(all="ignore"):
        return _rk4(p, theta0, dtheta0, tau, load_force, tau_ext, dt)


def _rk4(p, theta0, dtheta0, tau, load_force, tau_ext, dt):
    n = tau.shape[0]
    th = np.empty((n + 1, 2))
    om = np.empty((n + 1, 2))
    th[0], om[0] = theta0, dtheta0
    h = dt
    for k in range(n):
        q, w = th[k], om[k]
        args = (tau[k], load_force[k], tau_ext[k])
        a = _accel(p, q, w, *args)
        v = w + 0.5 * h * a
        b = _accel(p, q + 0.5 * h * w, v, *args)
        u = w + 0.5 * h * b
        c = _accel(p, q + 0.5 * h * v, u, *args)
        e = w + h * c
        d = _accel(p, q + h * u, e, *args)
        th[k + 1] = q + h / 6.0 * (w + 2.0 * v + 2.0 * u + e)
        om[k + 1] = w + h / 6.0 * (a + 2.0 * b + 2.0 * c + d)
        if not (np.all(np.isfinite(th[k + 1])) and np.all(np.isfinite(om[k + 1]))):
            return th, om, k
    return th, om, -1


def _path_length(sp, s):
    d1, d2, gi, pc = sp[0], sp[1], sp[2], sp[3]
    s = np.asarray(s, dtype=float)
    D0 = 0.25 * (d1 * d1 + d2 * d2)
    dd = s * (2.0 * gi * np.cos(pc) + d2)
    gp2 = 0.25 * dd * dd + gi * gi - ((1.0 + s) ** 2 - 1.0) * (D0 - gi * gi)
    d2p = d2 + dd
    Dp = 0.25 * (d1 * d1 + d2p * d2p)
    tan2 = Dp - gp2
    with np.errstate(invalid="ignore", divide="ignore"):
        gp = np.sqrt(gp2)
        arc = np.pi - np.arctan2(d1, d2p) - pc - np.arcsin(np.sqrt(gp2 / Dp))
        L = gp * arc + np.sqrt(tan2) + 2.0 * gi * pc
    bad = (gp2 <= 0.0) | (tan2 < 0.0) | ~(arc > 0.0)
    return np.where(bad, np.nan, L)


def sensor_pressure_batch(sp, strain):
    return sp[4] * _path_length(sp, 0.0) / _path_length(sp, strain)


def sensor_strain_batch(sp, pressure, s_hi):
    target = np.asarray(pressure, dtype=float)
    lo = np.zeros_like(target)
    hi = np.full_like(target, s_hi)
    L0 = _path_length(sp, 0.0)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        above = sp[4] * L0 / _path_length(sp, mid) > target
        lo = np.where(above, mid, lo)
        hi = np.where(above, hi, mid)
        if np.all(hi - lo < 1e-13):
            break
    return np.where(target >= sp[4], 0.0, 0.5 * (lo + hi))


def rate_limit(cmd, x0, max_step):
    out = np.empty(len(cmd))
    x = x0
    for k, c in enumerate(cmd):
        x += min(max(c - x, -max_step), max_step)
        out[k] = x
    return out
