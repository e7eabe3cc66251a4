"""Per-step kernels of the closed loop: path matching, pure pursuit, bicycle RK4, and the run loop.

Everything here is scalar code over flat arrays so it compiles under numba
and still runs unchanged as plain Python when numba is disabled.
"""
import math

import numpy as np

from .._jit import njit

RUNNING, SUCCESS, OFF_ROAD, TIMEOUT, STALLED = 0, 1, 2, 3, 4

STALL_WINDOW = 10.0
STALL_PROGRESS = 0.1


@njit
def wrap_angle(a):
    # loops rather than fmod keep wrap(-a) == -wrap(a) away from the branch cut
    while a > math.pi:
        a -= 2.0 * math.pi
    while a <= -math.pi:
        a += 2.0 * math.pi
    return a


@njit
def project(px, py, x, y, s, hint, back, ahead):
    """Project (x, y) onto the polyline near index ``hint``.

    Returns (segment index, station, signed lateral offset, fraction);
    the offset is positive to the left of the path direction.
    """
    n = px.shape[0]
    lo = max(hint - back, 0)
    hi = min(hint + ahead, n - 1)
    best = lo
    best_d = 1e300
    for j in range(lo, hi + 1):
        d = (px[j] - x) ** 2 + (py[j] - y) ** 2
        if d < best_d:
            best_d = d
            best = j
    # candidate segments on either side of the nearest vertex
    best_i = -1
    best_off = 0.0
    best_t = 0.0
    best_e = 1e300
    for i in (best - 1, best):
        if i < 0 or i >= n - 1:
            continue
        dx = px[i + 1] - px[i]
        dy = py[i + 1] - py[i]
        seg2 = dx * dx + dy * dy
        t = ((x - px[i]) * dx + (y - py[i]) * dy) / seg2
        tc = min(max(t, 0.0), 1.0)
        ex = x - (px[i] + tc * dx)
        ey = y - (py[i] + tc * dy)
        e = ex * ex + ey * ey
        if e < best_e:
            best_e = e
            best_i = i
            best_t = t
            best_off = (dx * (y - py[i]) - dy * (x - px[i])) / math.sqrt(seg2)
    if best_i < 0:
        best_i = 0
    tc = min(max(best_t, 0.0), 1.0)
    return best_i, s[best_i] + best_t * (s[best_i + 1] - s[best_i]), best_off, tc


@njit
def locate(s, station, hint):
    """Index i with s[i] <= station < s[i+1], walking from ``hint``; clamped to the last segment."""
    n = s.shape[0]
    i = min(max(hint, 0), n - 2)
    while i < n - 2 and s[i + 1] <= station:
        i += 1
    while i > 0 and s[i] > station:
        i -= 1
    return i


@njit
def interp_at(s, values, station, hint):
    i = locate(s, station, hint)
    t = (station - s[i]) / (s[i + 1] - s[i])
    t = min(max(t, 0.0), 1.0)
    return values[i] + t * (values[i + 1] - values[i])


@njit
def pursuit_steer(x, y, heading, v, px, py, s, s_proj, hint, gain, l_min, l_max, wheelbase, max_steer):
    """Pure-pursuit steering toward the path point at arc distance L_d ahead of the projection."""
    ld = min(max(gain * v, l_min), l_max)
    station = min(s_proj + ld, s[-1])
    gx = interp_at(s, px, station, hint)
    gy = interp_at(s, py, station, hint)
    alpha = wrap_angle(math.atan2(gy - y, gx - x) - heading)
    delta = math.atan(2.0 * wheelbase * math.sin(alpha) / ld)
    return min(max(delta, -max_steer), max_steer)


@njit
def _deriv(h, v, tan_d, a, wheelbase):
    vv = max(v, 0.0)
    return vv * math.cos(h), vv * math.sin(h), vv * tan_d / wheelbase, a


@njit
def bicycle_rk4(x, y, h, v, delta, a, dt, wheelbase):
    """One RK4 step of the kinematic bicycle (rear-axle reference) with constant inputs."""
    tan_d = math.tan(delta)
    k1x, k1y, k1h, k1v = _deriv(h, v, tan_d, a, wheelbase)
    k2x, k2y, k2h, k2v = _deriv(h + 0.5 * dt * k1h, v + 0.5 * dt * k1v, tan_d, a, wheelbase)
    k3x, k3y, k3h, k3v = _deriv(h + 0.5 * dt * k2h, v + 0.5 * dt * k2v, tan_d, a, wheelbase)
    k4x, k4y, k4h, k4v = _deriv(h + dt * k3h, v + dt * k3v, tan_d, a, wheelbase)
    c = dt / 6.0
    x = x + c * (k1x + 2.0 * k2x + 2.0 * k3x + k4x)
    y = y + c * (k1y + 2.0 * k2y + 2.0 * k3y + k4y)
    h = wrap_angle(h + c * (k1h + 2.0 * k2h + 2.0 * k3h + k4h))
    v = max(v + c * (k1v + 2.0 * k2v + 2.0 * k3v + k4v), 0.0)
    return x, y, h, v


@njit
def actuate(steer, a, steer_cmd, accel_cmd, dt, max_steer, max_steer_rate, a_min, a_max, jerk_bound):
    """Apply steering slew, acceleration bounds and jerk bound to the commands."""
    steer_cmd = min(max(steer_cmd, -max_steer), max_steer)
    ds = min(max(steer_cmd - steer, -max_steer_rate * dt), max_steer_rate * dt)
    steer = min(max(steer + ds, -max_steer), max_steer)
    accel_cmd = min(max(accel_cmd, a_min), a_max)
    da = min(max(accel_cmd - a, -jerk_bound * dt), jerk_bound * dt)
    return steer, a + da


@njit
def footprint_excess(px, py, ps, phw, x, y, h, hint, veh_width, front_reach, rear_reach):
    """Largest distance (m) by which a footprint corner lies outside the lane; negative when inside.

    ``front_reach`` / ``rear_reach`` are measured from the reference point
    (rear axle) to the front and rear bumpers.
    """
    c = math.cos(h)
    sn = math.sin(h)
    hw = 0.5 * veh_width
    worst = -1e300
    for lon in (front_reach, -rear_reach):
        for lat in (hw, -hw):
            cx = x + lon * c - lat * sn
            cy = y + lon * sn + lat * c
            i, s_c, off, _ = project(px, py, cx, cy, ps, hint, 12, 24)
            t = min(max((s_c - ps[i]) / (ps[i + 1] - ps[i]), 0.0), 1.0)
            half = phw[i] + t * (phw[i + 1] - phw[i])
            worst = max(worst, abs(off) - half)
    return worst


@njit
def run_loop(px, py, ps, pvd, paff, phw, target_x, target_y,
             x0, y0, h0, v0, s_hint0, dt, n_max,
             wheelbase, veh_width, front_reach, rear_reach, max_steer, max_steer_rate, a_min, a_max, jerk_bound,
             lookahead_gain, lookahead_min, lookahead_max, speed_gain, speed_preview, comfort_accel, comfort_jerk,
             stop_eps, arrival_tol, offroad_margin,
             out_t, out_x, out_y, out_h, out_v, out_a, out_alat, out_steer, out_s, out_dev):
    """Closed-loop run; fills the ``out_*`` arrays and returns (samples, status)."""
    x, y, h, v = x0, y0, h0, v0
    a = 0.0
    steer = 0.0
    hint = s_hint0
    stall_steps = int(round(STALL_WINDOW / dt))
    timeout_steps = n_max - 1
    for n in range(n_max):
        i, s_proj, dev, _ = project(px, py, x, y, ps, hint, 4, 60)
        hint = i
        out_t[n] = n * dt
        out_x[n] = x
        out_y[n] = y
        out_h[n] = h
        out_v[n] = v
        out_a[n] = a
        out_alat[n] = v * v * math.tan(steer) / wheelbase
        out_steer[n] = steer
        out_s[n] = s_proj
        out_dev[n] = dev

        dist = math.hypot(x - target_x, y - target_y)
        if dist <= arrival_tol and v <= stop_eps:
            return n + 1, SUCCESS
        if footprint_excess(px, py, ps, phw, x, y, h, i, veh_width, front_reach, rear_reach) > offroad_margin:
            return n + 1, OFF_ROAD
        if n >= timeout_steps:
            return n + 1, TIMEOUT
        if n >= stall_steps and s_proj - out_s[n - stall_steps] < STALL_PROGRESS:
            return n + 1, STALLED

        # longitudinal: proportional speed error plus profile feed-forward; the
        # feed-forward is read ahead to absorb the jerk-limited acceleration build-up
        v_des = interp_at(ps, pvd, s_proj, i)
        a_ff = paff[locate(ps, s_proj + speed_preview * v, i)]
        a_req = a_ff + speed_gain * (v_des - v)
        # ease off the brake near standstill so deceleration fades at the comfort jerk
        a_req = max(a_req, -math.sqrt(2.0 * comfort_jerk * v))
        a_req = min(max(a_req, a_min), comfort_accel)
        a_cmd = a + min(max(a_req - a, -comfort_jerk * dt), comfort_jerk * dt)

        steer_cmd = pursuit_steer(x, y, h, v, px, py, ps, s_proj, i, lookahead_gain, lookahead_min,
                                  lookahead_max, wheelbase, max_steer)
        steer, a = actuate(steer, a, steer_cmd, a_cmd, dt, max_steer, max_steer_rate, a_min, a_max, jerk_bound)
        x, y, h, v = bicycle_rk4(x, y, h, v, steer, a, dt, wheelbase)
    return n_max, TIMEOUT


@njit
def profile_passes(s, v_lim, i_start, v_start, i_stop, s_stop, decel, accel):
    """Backward (deceleration) and forward (acceleration) passes over a speed-limit array.

    Points at or beyond ``i_stop`` get zero; point ``i_stop - 1`` is limited by the
    remaining distance to ``s_stop``.
    """
    n = s.shape[0]
    v = v_lim.copy()
    for i in range(i_stop, n):
        v[i] = 0.0
    if i_stop >= 1:
        v[i_stop - 1] = min(v[i_stop - 1], math.sqrt(2.0 * decel * max(s_stop - s[i_stop - 1], 0.0)))
    for i in range(i_stop - 2, -1, -1):
        v[i] = min(v[i], math.sqrt(v[i + 1] * v[i + 1] + 2.0 * decel * (s[i + 1] - s[i])))
    v[i_start] = min(v[i_start], v_start)
    for i in range(i_start + 1, n):
        v[i] = min(v[i], math.sqrt(v[i - 1] * v[i - 1] + 2.0 * accel * (s[i] - s[i - 1])))
    return v


def feed_forward(s, v_des, i_stop, decel):
    """Per-segment acceleration implied by the profile, d(v^2/2)/ds; held at -decel from the stop on."""
    aff = np.diff(v_des * v_des) / (2.0 * np.diff(s))
    aff[max(i_stop - 1, 0):] = -decel
    return aff


def empty_outputs(n_max: int) -> list:
    return [np.zeros(n_max) for _ in range(10)]
