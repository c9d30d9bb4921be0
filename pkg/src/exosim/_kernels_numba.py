"""numba kernels. Signatures mirror ``_kernels_numpy`` one to one.

Packed parameter layouts:
  dynamics: [l1, l2, m1, m2, r1, r2, I1, I2, m_load, g]
  sensor:   [d1, d2, g_i, phi_c, P_init]
"""
import math

import numpy as np
from numba import njit


@njit(cache=True)
def _terms(p, q1, q2, dq1, dq2):
    l1, l2, m1, m2, r1, r2, I1, I2, ml, g = (
        p[0], p[1], p[2], p[3], p[4], p[5], p[6], p[7], p[8], p[9])
    c2 = math.cos(q2)
    s2 = math.sin(q2)
    s1 = math.sin(q1)
    s12 = math.sin(q1 + q2)
    c1 = math.cos(q1)
    c12 = math.cos(q1 + q2)
    a = I1 + m1 * r1 * r1 + I2 + m2 * (l1 * l1 + r2 * r2) + ml * (l1 * l1 + l2 * l2)
    b = m2 * l1 * r2 + ml * l1 * l2
    d = I2 + m2 * r2 * r2 + ml * l2 * l2
    M11 = a + 2.0 * b * c2
    M12 = d + b * c2
    M22 = d
    h = -b * s2
    cv1 = h * dq2 * dq1 + h * (dq1 + dq2) * dq2
    cv2 = -h * dq1 * dq1
    k2 = m2 * r2 + ml * l2
    G2 = -g * k2 * s12
    G1 = -g * (m1 * r1 + (m2 + ml) * l1) * s1 + G2
    J11 = l1 * c1 + l2 * c12
    J12 = l2 * c12
    J21 = -l1 * s1 - l2 * s12
    J22 = -l2 * s12
    return M11, M12, M22, cv1, cv2, G1, G2, J11, J12, J21, J22


@njit(cache=True)
def inverse_dynamics_batch(p, theta, dtheta, ddtheta, load_force, tau_ext):
    n = theta.shape[0]
    out = np.empty((n, 2))
    for k in range(n):
        M11, M12, M22, cv1, cv2, G1, G2, J11, J12, J21, J22 = _terms(
            p, theta[k, 0], theta[k, 1], dtheta[k, 0], dtheta[k, 1])
        fx = load_force[k, 0]
        fy = load_force[k, 1]
        out[k, 0] = (M11 * ddtheta[k, 0] + M12 * ddtheta[k, 1] + cv1 + G1
                     - (J11 * fx + J21 * fy))
        out[k, 1] = (M12 * ddtheta[k, 0] + M22 * ddtheta[k, 1] + cv2 + G2
                     - (J12 * fx + J22 * fy) + tau_ext[k])
    return out


@njit(cache=True)
def _accel(p, q1, q2, dq1, dq2, t1, t2, fx, fy, te):
    M11, M12, M22, cv1, cv2, G1, G2, J11, J12, J21, J22 = _terms(p, q1, q2, dq1, dq2)
    b1 = t1 + J11 * fx + J21 * fy - cv1 - G1
    b2 = t2 + J12 * fx + J22 * fy - te - cv2 - G2
    det = M11 * M22 - M12 * M12
    return (M22 * b1 - M12 * b2) / det, (M11 * b2 - M12 * b1) / det


@njit(cache=True)
def rk4_integrate(p, theta0, dtheta0, tau, load_force, tau_ext, dt):
    """Fixed-step RK4 with torques held constant across each step.

    Returns (theta, dtheta, bad) where bad is the first step index whose
    result is non-finite, or -1.
    """
    n = tau.shape[0]
    th = np.empty((n + 1, 2))
    om = np.empty((n + 1, 2))
    th[0, 0] = theta0[0]
    th[0, 1] = theta0[1]
    om[0, 0] = dtheta0[0]
    om[0, 1] = dtheta0[1]
    h = dt
    for k in range(n):
        q1, q2 = th[k, 0], th[k, 1]
        w1, w2 = om[k, 0], om[k, 1]
        t1, t2 = tau[k, 0], tau[k, 1]
        fx, fy, te = load_force[k, 0], load_force[k, 1], tau_ext[k]
        a1, a2 = _accel(p, q1, q2, w1, w2, t1, t2, fx, fy, te)
        b1, b2 = _accel(p, q1 + 0.5 * h * w1, q2 + 0.5 * h * w2,
                        w1 + 0.5 * h * a1, w2 + 0.5 * h * a2, t1, t2, fx, fy, te)
        v1, v2 = w1 + 0.5 * h * a1, w2 + 0.5 * h * a2
        c1, c2 = _accel(p, q1 + 0.5 * h * v1, q2 + 0.5 * h * v2,
                        w1 + 0.5 * h * b1, w2 + 0.5 * h * b2, t1, t2, fx, fy, te)
        u1, u2 = w1 + 0.5 * h * b1, w2 + 0.5 * h * b2
        e1, e2 = w1 + h * c1, w2 + h * c2
        d1, d2 = _accel(p, q1 + h * u1, q2 + h * u2, e1, e2, t1, t2, fx, fy, te)
        th[k + 1, 0] = q1 + h / 6.0 * (w1 + 2.0 * v1 + 2.0 * u1 + e1)
        th[k + 1, 1] = q2 + h / 6.0 * (w2 + 2.0 * v2 + 2.0 * u2 + e2)
        om[k + 1, 0] = w1 + h / 6.0 * (a1 + 2.0 * b1 + 2.0 * c1 + d1)
        om[k + 1, 1] = w2 + h / 6.0 * (a2 + 2.0 * b2 + 2.0 * c2 + d2)
        if not (np.isfinite(th[k + 1, 0]) and np.isfinite(th[k + 1, 1])
                and np.isfinite(om[k + 1, 0]) and np.isfinite(om[k + 1, 1])):
            return th, om, k
    return th, om, -1


@njit(cache=True)
def _path_length(sp, s):
    d1, d2, gi, pc = sp[0], sp[1], sp[2], sp[3]
    D0 = 0.25 * (d1 * d1 + d2 * d2)
    dd = s * (2.0 * gi * math.cos(pc) + d2)
    gp2 = 0.25 * dd * dd + gi * gi - ((1.0 + s) ** 2 - 1.0) * (D0 - gi * gi)
    if gp2 <= 0.0:
        return np.nan
    d2p = d2 + dd
    Dp = 0.25 * (d1 * d1 + d2p * d2p)
    tan2 = Dp - gp2
    if tan2 < 0.0:
        return np.nan
    gp = math.sqrt(gp2)
    arc = math.pi - math.atan2(d1, d2p) - pc - math.asin(math.sqrt(gp2 / Dp))
    if arc <= 0.0:
        return np.nan
    return gp * arc + math.sqrt(tan2) + 2.0 * gi * pc


@njit(cache=True)
def sensor_pressure_batch(sp, strain):
    n = strain.shape[0]
    out = np.empty(n)
    L0 = _path_length(sp, 0.0)
    for k in range(n):
        out[k] = sp[4] * L0 / _path_length(sp, strain[k])
    return out


@njit(cache=True)
def sensor_strain_batch(sp, pressure, s_hi):
    """Bisection on the monotone forward model; caller checks the range."""
    n = pressure.shape[0]
    out = np.empty(n)
    L0 = _path_length(sp, 0.0)
    for k in range(n):
        target = pressure[k]
        if target >= sp[4]:
            out[k] = 0.0
            continue
        lo = 0.0
        hi = s_hi
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if sp[4] * L0 / _path_length(sp, mid) > target:
                lo = mid
            else:
                hi = mid
            if hi - lo < 1e-13:
                break
        out[k] = 0.5 * (lo + hi)
    return out


@njit(cache=True)
def rate_limit(cmd, x0, max_step):
    n = cmd.shape[0]
    out = np.empty(n)
    x = x0
    for k in range(n):
        dx = cmd[k] - x
        if dx > max_step:
            dx = max_step
        elif dx < -max_step:
            dx = -max_step
        x = x + dx
        out[k] = x
    return out
