"""Hot inner loops: FOC current loop, dq motor model, penalty contact and body integration.

Everything here works on flat float64 arrays so the same source runs under
numba or as plain Python (see ``_jit``). Column layouts are fixed by the
constants below; ``plant.World`` and ``sim.HandSim`` are the only writers.
"""
import math

import numpy as np

from ._jit import njit

# finger parameter columns
F_BX, F_BY, F_MX, F_L1, F_L2, F_R, F_M1, F_M2 = 0, 1, 2, 3, 4, 5, 6, 7
F_J1, F_J2, F_B1, F_B2, F_LO1, F_HI1, F_LO2, F_HI2 = 8, 9, 10, 11, 12, 13, 14, 15
N_FPARAM = 16

# world parameter columns
W_GX, W_GY, W_KC, W_CC, W_KT, W_CT, W_KLIM, W_CLIM, W_TIP = 0, 1, 2, 3, 4, 5, 6, 7, 8
N_WPARAM = 9

# hand pose: position, velocity, acceleration, orientation
H_PX, H_PY, H_VX, H_VY, H_AX, H_AY, H_ANG = 0, 1, 2, 3, 4, 5, 6

# shape table columns; owner types
S_KIND, S_OWNER, S_IDX, S_AX, S_AY, S_BX, S_BY, S_RAD = 0, 1, 2, 3, 4, 5, 6, 7
N_SHAPE_COLS = 8
CAPSULE, BOX = 0, 1
OWN_STATIC, OWN_HAND, OWN_LINK, OWN_OBJECT = 0, 1, 2, 3

SLOTS_PER_PAIR = 6

# contact output columns
C_ACTIVE, C_PX, C_PY, C_NX, C_NY, C_DEPTH, C_FN, C_FT, C_VT, C_STICK = range(10)
N_CONTACT_COLS = 10

# motor state columns
M_ID, M_IQ, M_INTD, M_INTQ, M_VD, M_VQ, M_ENC, M_VEL, M_TAU, M_VDT, M_VQT, M_VFF = range(12)
N_MSTATE = 12

# motor parameter entries
MP_R, MP_L, MP_LAM, MP_PP, MP_KP, MP_KI, MP_VMAX, MP_RES, MP_ALPHA, MP_DT, MP_ALPHA_FF = range(11)
N_MPARAM = 11

STATUS_OK = 0
STATUS_DIVERGED = 1

SQRT3 = math.sqrt(3.0)


# --------------------------------------------------------------------------
# FOC building blocks


@njit
def clarke_park(ia, ib, ic, theta_e):
    alpha = (2.0 * ia - ib - ic) / 3.0
    beta = (ib - ic) / SQRT3
    c = math.cos(theta_e)
    s = math.sin(theta_e)
    return c * alpha + s * beta, -s * alpha + c * beta


@njit
def inverse_park_clarke(i_d, i_q, theta_e):
    c = math.cos(theta_e)
    s = math.sin(theta_e)
    alpha = c * i_d - s * i_q
    beta = s * i_d + c * i_q
    return alpha, -0.5 * alpha + 0.5 * SQRT3 * beta, -0.5 * alpha - 0.5 * SQRT3 * beta


@njit
def pi_step(ref, measured, integ, kp, ki, dt, vmax):
    err = ref - measured
    integ = integ + ki * err * dt
    if integ > vmax:
        integ = vmax
    elif integ < -vmax:
        integ = -vmax
    v = kp * err + integ
    if v > vmax:
        v = vmax
    elif v < -vmax:
        v = -vmax
    return v, integ


@njit
def motor_substep(i_d, i_q, v_d, v_q, omega_m, R, L, lam, pp, dt):
    """dq electrical update, resistive term implicit."""
    we = pp * omega_m
    a = dt / L
    nd = (i_d + a * (v_d + we * L * i_q)) / (1.0 + a * R)
    nq = (i_q + a * (v_q - we * L * i_d - we * lam)) / (1.0 + a * R)
    return nd, nq


@njit
def quantize(angle, res):
    return math.floor(angle / res) * res


# --------------------------------------------------------------------------
# geometry helpers


@njit
def _closest_on_segment(px, py, ax, ay, bx, by):
    dx = bx - ax
    dy = by - ay
    l2 = dx * dx + dy * dy
    if l2 <= 1e-24:
        return 0.0, ax, ay
    t = ((px - ax) * dx + (py - ay) * dy) / l2
    if t < 0.0:
        t = 0.0
    elif t > 1.0:
        t = 1.0
    return t, ax + t * dx, ay + t * dy


@njit
def _segment_pair(ax, ay, bx, by, cx, cy, dx, dy):
    """Closest points between segments AB and CD (non-crossing case)."""
    best = 1e300
    pax = ax
    pay = ay
    pbx = cx
    pby = cy
    # endpoints of AB against CD
    t, qx, qy = _closest_on_segment(ax, ay, cx, cy, dx, dy)
    d = (ax - qx) ** 2 + (ay - qy) ** 2
    if d < best:
        best, pax, pay, pbx, pby = d, ax, ay, qx, qy
    t, qx, qy = _closest_on_segment(bx, by, cx, cy, dx, dy)
    d = (bx - qx) ** 2 + (by - qy) ** 2
    if d < best:
        best, pax, pay, pbx, pby = d, bx, by, qx, qy
    # endpoints of CD against AB
    t, qx, qy = _closest_on_segment(cx, cy, ax, ay, bx, by)
    d = (cx - qx) ** 2 + (cy - qy) ** 2
    if d < best:
        best, pax, pay, pbx, pby = d, qx, qy, cx, cy
    t, qx, qy = _closest_on_segment(dx, dy, ax, ay, bx, by)
    d = (dx - qx) ** 2 + (dy - qy) ** 2
    if d < best:
        best, pax, pay, pbx, pby = d, qx, qy, dx, dy
    return pax, pay, pbx, pby


@njit
def finger_frames(th, fparam, hand, frames):
    """frames[f] = (o1x, o1y, o2x, o2y, tipx, tipy) in world coordinates."""
    ch = math.cos(hand[H_ANG])
    sh = math.sin(hand[H_ANG])
    for f in range(2):
        mx = fparam[f, F_MX]
        bx = fparam[f, F_BX]
        by = fparam[f, F_BY]
        o1x = hand[H_PX] + ch * bx - sh * by
        o1y = hand[H_PY] + sh * bx + ch * by
        t1 = th[f, 0]
        t12 = t1 + th[f, 1]
        lx = fparam[f, F_L1] * mx * math.sin(t1)
        ly = fparam[f, F_L1] * math.cos(t1)
        o2x = o1x + ch * lx - sh * ly
        o2y = o1y + sh * lx + ch * ly
        lx = fparam[f, F_L2] * mx * math.sin(t12)
        ly = fparam[f, F_L2] * math.cos(t12)
        frames[f, 0] = o1x
        frames[f, 1] = o1y
        frames[f, 2] = o2x
        frames[f, 3] = o2y
        frames[f, 4] = o2x + ch * lx - sh * ly
        frames[f, 5] = o2y + sh * lx + ch * ly


@njit
def shapes_world(shapes, frames, hand, opos, sw):
    ch = math.cos(hand[H_ANG])
    sh = math.sin(hand[H_ANG])
    for i in range(shapes.shape[0]):
        owner = int(shapes[i, S_OWNER])
        if owner == OWN_STATIC:
            sw[i, 0] = shapes[i, S_AX]
            sw[i, 1] = shapes[i, S_AY]
            sw[i, 2] = shapes[i, S_BX]
            sw[i, 3] = shapes[i, S_BY]
        elif owner == OWN_HAND:
            ax = shapes[i, S_AX]
            ay = shapes[i, S_AY]
            bx = shapes[i, S_BX]
            by = shapes[i, S_BY]
            sw[i, 0] = hand[H_PX] + ch * ax - sh * ay
            sw[i, 1] = hand[H_PY] + sh * ax + ch * ay
            sw[i, 2] = hand[H_PX] + ch * bx - sh * by
            sw[i, 3] = hand[H_PY] + sh * bx + ch * by
        elif owner == OWN_LINK:
            idx = int(shapes[i, S_IDX])
            f = idx // 2
            k = idx % 2
            sw[i, 0] = frames[f, 2 * k]
            sw[i, 1] = frames[f, 2 * k + 1]
            sw[i, 2] = frames[f, 2 * k + 2]
            sw[i, 3] = frames[f, 2 * k + 3]
        else:
            o = int(shapes[i, S_IDX])
            c = math.cos(opos[o, 2])
            s = math.sin(opos[o, 2])
            ax = shapes[i, S_AX]
            ay = shapes[i, S_AY]
            bx = shapes[i, S_BX]
            by = shapes[i, S_BY]
            sw[i, 0] = opos[o, 0] + c * ax - s * ay
            sw[i, 1] = opos[o, 1] + s * ax + c * ay
            sw[i, 2] = opos[o, 0] + c * bx - s * by
            sw[i, 3] = opos[o, 1] + s * bx + c * by


@njit
def _point_velocity(shapes, i, px, py, frames, fparam, thd, hand, opos, ovel):
    owner = int(shapes[i, S_OWNER])
    if owner == OWN_STATIC:
        return 0.0, 0.0
    if owner == OWN_HAND:
        return hand[H_VX], hand[H_VY]
    if owner == OWN_LINK:
        idx = int(shapes[i, S_IDX])
        f = idx // 2
        k = idx % 2
        mx = fparam[f, F_MX]
        vx = hand[H_VX]
        vy = hand[H_VY]
        for j in range(k + 1):
            rx = px - frames[f, 2 * j]
            ry = py - frames[f, 2 * j + 1]
            vx += mx * ry * thd[f, j]
            vy += -mx * rx * thd[f, j]
        return vx, vy
    o = int(shapes[i, S_IDX])
    om = ovel[o, 2]
    return ovel[o, 0] - om * (py - opos[o, 1]), ovel[o, 1] + om * (px - opos[o, 0])


@njit
def _apply_force(shapes, i, px, py, fx, fy, frames, fparam, opos, tau_c, ofrc, probe, wparam, reaction):
    owner = int(shapes[i, S_OWNER])
    if owner == OWN_LINK:
        idx = int(shapes[i, S_IDX])
        f = idx // 2
        k = idx % 2
        mx = fparam[f, F_MX]
        for j in range(k + 1):
            rx = px - frames[f, 2 * j]
            ry = py - frames[f, 2 * j + 1]
            tau_c[f, j] += mx * (ry * fx - rx * fy)
        if k == 1:
            dx = px - frames[f, 4]
            dy = py - frames[f, 5]
            if dx * dx + dy * dy <= wparam[W_TIP] * wparam[W_TIP]:
                probe[f, 0] += fx
                probe[f, 1] += fy
    elif owner == OWN_OBJECT:
        o = int(shapes[i, S_IDX])
        ofrc[o, 0] += fx
        ofrc[o, 1] += fy
        ofrc[o, 2] += (px - opos[o, 0]) * fy - (py - opos[o, 1]) * fx
    else:
        reaction[0] += fx
        reaction[1] += fy


@njit
def _contact(
    slot, a, b, px, py, nx, ny, depth, mu, dt,
    shapes, frames, fparam, thd, hand, opos, ovel, wparam,
    ts, co, tau_c, ofrc, probe, reaction,
):
    """Penalty normal force plus regularised Coulomb friction for one contact.

    The normal points from shape b to shape a.
    """
    vax, vay = _point_velocity(shapes, a, px, py, frames, fparam, thd, hand, opos, ovel)
    vbx, vby = _point_velocity(shapes, b, px, py, frames, fparam, thd, hand, opos, ovel)
    rvx = vax - vbx
    rvy = vay - vby
    vn = rvx * nx + rvy * ny
    fn = wparam[W_KC] * depth - wparam[W_CC] * vn
    if fn < 0.0:
        fn = 0.0
    tx = -ny
    ty = nx
    vt = rvx * tx + rvy * ty
    ts[slot] += vt * dt
    ft = -wparam[W_KT] * ts[slot] - wparam[W_CT] * vt
    limit = mu * fn
    stick = 1.0
    if abs(ft) > limit:
        stick = 0.0
        ft = limit if ft > 0.0 else -limit
        ts[slot] = -ft / wparam[W_KT]
    fx = fn * nx + ft * tx
    fy = fn * ny + ft * ty
    _apply_force(shapes, a, px, py, fx, fy, frames, fparam, opos, tau_c, ofrc, probe, wparam, reaction)
    _apply_force(shapes, b, px, py, -fx, -fy, frames, fparam, opos, tau_c, ofrc, probe, wparam, reaction)
    co[slot, C_ACTIVE] = 1.0
    co[slot, C_PX] = px
    co[slot, C_PY] = py
    co[slot, C_NX] = nx
    co[slot, C_NY] = ny
    co[slot, C_DEPTH] = depth
    co[slot, C_FN] = fn
    co[slot, C_FT] = ft
    co[slot, C_VT] = vt
    co[slot, C_STICK] = stick


@njit
def _clear_slot(slot, ts, co):
    ts[slot] = 0.0
    for c in range(N_CONTACT_COLS):
        co[slot, c] = 0.0


@njit
def _capsule_pair_contact(
    slot, a, b, ax, ay, bx, by, ra, cx, cy, dx, dy, rb, mu, dt,
    shapes, frames, fparam, thd, hand, opos, ovel, wparam, ts, co, tau_c, ofrc, probe, reaction,
):
    pax, pay, pbx, pby = _segment_pair(ax, ay, bx, by, cx, cy, dx, dy)
    ex = pax - pbx
    ey = pay - pby
    dist = math.sqrt(ex * ex + ey * ey)
    if dist >= ra + rb:
        _clear_slot(slot, ts, co)
        return
    if dist > 1e-12:
        nx = ex / dist
        ny = ey / dist
    else:
        sx = dx - cx
        sy = dy - cy
        sl = math.sqrt(sx * sx + sy * sy)
        if sl > 1e-12:
            nx = -sy / sl
            ny = sx / sl
        else:
            nx = 0.0
            ny = 1.0
    depth = ra + rb - dist
    px = pbx + nx * (rb - 0.5 * depth)
    py = pby + ny * (rb - 0.5 * depth)
    _contact(slot, a, b, px, py, nx, ny, depth, mu, dt, shapes, frames, fparam, thd, hand,
             opos, ovel, wparam, ts, co, tau_c, ofrc, probe, reaction)


@njit
def _circle_box(cx, cy, r, xmin, ymin, xmax, ymax):
    """Returns (hit, px, py, nx, ny, depth); normal points out of the box."""
    inside = xmin < cx < xmax and ymin < cy < ymax
    if not inside:
        qx = min(max(cx, xmin), xmax)
        qy = min(max(cy, ymin), ymax)
        ex = cx - qx
        ey = cy - qy
        d = math.sqrt(ex * ex + ey * ey)
        if d >= r or d <= 1e-15:
            return False, 0.0, 0.0, 0.0, 0.0, 0.0
        return True, qx, qy, ex / d, ey / d, r - d
    dl = cx - xmin
    dr = xmax - cx
    db = cy - ymin
    dtp = ymax - cy
    m = min(min(dl, dr), min(db, dtp))
    if m == dtp:
        return True, cx, ymax, 0.0, 1.0, r + m
    if m == dl:
        return True, xmin, cy, -1.0, 0.0, r + m
    if m == dr:
        return True, xmax, cy, 1.0, 0.0, r + m
    return True, cx, ymin, 0.0, -1.0, r + m


@njit
def _capsule_box_contacts(
    slot0, a, b, ax, ay, bx, by, ra, xmin, ymin, xmax, ymax, mu, dt,
    shapes, frames, fparam, thd, hand, opos, ovel, wparam, ts, co, tau_c, ofrc, probe, reaction,
):
    is_disc = (bx - ax) ** 2 + (by - ay) ** 2 <= 1e-24
    # end caps
    for e in range(2):
        slot = slot0 + e
        if e == 1 and is_disc:
            _clear_slot(slot, ts, co)
            continue
        cx = ax if e == 0 else bx
        cy = ay if e == 0 else by
        hit, px, py, nx, ny, depth = _circle_box(cx, cy, ra, xmin, ymin, xmax, ymax)
        if hit:
            _contact(slot, a, b, px, py, nx, ny, depth, mu, dt, shapes, frames, fparam, thd,
                     hand, opos, ovel, wparam, ts, co, tau_c, ofrc, probe, reaction)
        else:
            _clear_slot(slot, ts, co)
    # box corners against the capsule side
    for k in range(4):
        slot = slot0 + 2 + k
        kx = xmin if (k == 0 or k == 3) else xmax
        ky = ymin if k < 2 else ymax
        if is_disc:
            _clear_slot(slot, ts, co)
            continue
        t, qx, qy = _closest_on_segment(kx, ky, ax, ay, bx, by)
        ex = qx - kx
        ey = qy - ky
        d = math.sqrt(ex * ex + ey * ey)
        if t <= 1e-9 or t >= 1.0 - 1e-9 or d >= ra or d <= 1e-15:
            _clear_slot(slot, ts, co)
            continue
        _contact(slot, a, b, kx, ky, ex / d, ey / d, ra - d, mu, dt, shapes, frames, fparam,
                 thd, hand, opos, ovel, wparam, ts, co, tau_c, ofrc, probe, reaction)


@njit
def detect_and_apply(
    shapes, sw, pairs, pair_mu, frames, fparam, thd, hand, opos, ovel, wparam,
    ts, co, tau_c, ofrc, probe, reaction, dt,
):
    for p in range(pairs.shape[0]):
        a = pairs[p, 0]
        b = pairs[p, 1]
        slot0 = pairs[p, 2]
        mu = pair_mu[p]
        ax = sw[a, 0]
        ay = sw[a, 1]
        bx = sw[a, 2]
        by = sw[a, 3]
        ra = shapes[a, S_RAD]
        if int(shapes[b, S_KIND]) == BOX:
            # cheap reject on the inflated bounding box
            xmin = sw[b, 0]
            ymin = sw[b, 1]
            xmax = sw[b, 2]
            ymax = sw[b, 3]
            if (min(ax, bx) - ra > xmax or max(ax, bx) + ra < xmin
                    or min(ay, by) - ra > ymax or max(ay, by) + ra < ymin):
                for s in range(SLOTS_PER_PAIR):
                    if co[slot0 + s, C_ACTIVE] != 0.0 or ts[slot0 + s] != 0.0:
                        _clear_slot(slot0 + s, ts, co)
                continue
            _capsule_box_contacts(slot0, a, b, ax, ay, bx, by, ra, xmin, ymin, xmax, ymax, mu,
                                  dt, shapes, frames, fparam, thd, hand, opos, ovel, wparam,
                                  ts, co, tau_c, ofrc, probe, reaction)
            continue
        cx = sw[b, 0]
        cy = sw[b, 1]
        dx = sw[b, 2]
        dy = sw[b, 3]
        rb = shapes[b, S_RAD]
        reach = ra + rb
        if (min(ax, bx) - reach > max(cx, dx) or max(ax, bx) + reach < min(cx, dx)
                or min(ay, by) - reach > max(cy, dy) or max(ay, by) + reach < min(cy, dy)):
            for s in range(2):
                if co[slot0 + s, C_ACTIVE] != 0.0 or ts[slot0 + s] != 0.0:
                    _clear_slot(slot0 + s, ts, co)
            continue
        ux = bx - ax
        uy = by - ay
        vx = dx - cx
        vy = dy - cy
        lu = math.sqrt(ux * ux + uy * uy)
        lv = math.sqrt(vx * vx + vy * vy)
        parallel = False
        t0 = 0.0
        t1 = 0.0
        if lu > 1e-12 and lv > 1e-12 and abs(ux * vy - uy * vx) < 0.0872 * lu * lv:
            s0 = ((cx - ax) * ux + (cy - ay) * uy) / (lu * lu)
            s1 = ((dx - ax) * ux + (dy - ay) * uy) / (lu * lu)
            t0 = max(0.0, min(s0, s1))
            t1 = min(1.0, max(s0, s1))
            parallel = t1 - t0 > 1e-9
        if not parallel:
            _capsule_pair_contact(slot0, a, b, ax, ay, bx, by, ra, cx, cy, dx, dy, rb, mu, dt,
                                  shapes, frames, fparam, thd, hand, opos, ovel, wparam, ts, co,
                                  tau_c, ofrc, probe, reaction)
            _clear_slot(slot0 + 1, ts, co)
            continue
        # overlapping near-parallel capsules: one contact at each end of the overlap
        for e in range(2):
            tt = t0 if e == 0 else t1
            qx = ax + tt * ux
            qy = ay + tt * uy
            _capsule_pair_contact(slot0 + e, a, b, qx, qy, qx, qy, ra, cx, cy, dx, dy, rb, mu,
                                  dt, shapes, frames, fparam, thd, hand, opos, ovel, wparam, ts,
                                  co, tau_c, ofrc, probe, reaction)


# --------------------------------------------------------------------------
# rigid-body update


@njit
def _finger_dynamics(f, th, thd, fparam, frames, geff, tau):
    """Joint accelerations of one finger; tau already holds all applied torques."""
    mx = fparam[f, F_MX]
    l1 = fparam[f, F_L1]
    l2 = fparam[f, F_L2]
    m1 = fparam[f, F_M1]
    m2 = fparam[f, F_M2]
    o1x = frames[f, 0]
    o1y = frames[f, 1]
    o2x = frames[f, 2]
    o2y = frames[f, 3]
    c1x = 0.5 * (o1x + o2x)
    c1y = 0.5 * (o1y + o2y)
    c2x = 0.5 * (o2x + frames[f, 4])
    c2y = 0.5 * (o2y + frames[f, 5])
    # COM Jacobian columns (perp of lever arm, mirrored)
    j1x = mx * (c1y - o1y)
    j1y = -mx * (c1x - o1x)
    j21x = mx * (c2y - o1y)
    j21y = -mx * (c2x - o1x)
    j22x = mx * (c2y - o2y)
    j22y = -mx * (c2x - o2x)
    i1 = m1 * l1 * l1 / 12.0
    i2 = m2 * l2 * l2 / 12.0
    m11 = m1 * (j1x * j1x + j1y * j1y) + m2 * (j21x * j21x + j21y * j21y) + i1 + i2 + fparam[f, F_J1]
    m12 = m2 * (j21x * j22x + j21y * j22y) + i2
    m22 = m2 * (j22x * j22x + j22y * j22y) + i2 + fparam[f, F_J2]
    g1 = m1 * (j1x * geff[0] + j1y * geff[1]) + m2 * (j21x * geff[0] + j21y * geff[1])
    g2 = m2 * (j22x * geff[0] + j22y * geff[1])
    h = m2 * l1 * (0.5 * l2) * math.sin(th[f, 1])
    w1 = thd[f, 0]
    w2 = thd[f, 1]
    r1 = tau[f, 0] + g1 + h * (2.0 * w1 * w2 + w2 * w2) - fparam[f, F_B1] * w1
    r2 = tau[f, 1] + g2 - h * w1 * w1 - fparam[f, F_B2] * w2
    det = m11 * m22 - m12 * m12
    return (m22 * r1 - m12 * r2) / det, (m11 * r2 - m12 * r1) / det


@njit
def _joint_limit_torque(theta, omega, lo, hi, k, c):
    if theta < lo:
        t = k * (lo - theta) - c * omega
        return t if t > 0.0 else 0.0
    if theta > hi:
        t = -k * (theta - hi) - c * omega
        return t if t < 0.0 else 0.0
    return 0.0


@njit
def phys_substep(
    th, thd, opos, ovel, omass, oext, hand, fparam, wparam, shapes, pairs, pair_mu,
    ts, co, tau_act, dt, frames, sw, tau_c, ofrc, probe, reaction,
):
    """One semi-implicit Euler step of fingers and free objects.

    tau_act holds the actuator joint torques (2, 2). Returns a status code.
    """
    # prescribed hand motion, piecewise-constant acceleration
    hand[H_PX] += dt * hand[H_VX] + 0.5 * dt * dt * hand[H_AX]
    hand[H_PY] += dt * hand[H_VY] + 0.5 * dt * dt * hand[H_AY]
    hand[H_VX] += dt * hand[H_AX]
    hand[H_VY] += dt * hand[H_AY]

    finger_frames(th, fparam, hand, frames)
    shapes_world(shapes, frames, hand, opos, sw)
    tau_c[:, :] = 0.0
    ofrc[:, :] = 0.0
    probe[:, :] = 0.0
    reaction[:] = 0.0
    detect_and_apply(shapes, sw, pairs, pair_mu, frames, fparam, thd, hand, opos, ovel, wparam,
                     ts, co, tau_c, ofrc, probe, reaction, dt)

    geff = np.empty(2)
    geff[0] = wparam[W_GX] - hand[H_AX]
    geff[1] = wparam[W_GY] - hand[H_AY]
    for f in range(2):
        for j in range(2):
            tau_c[f, j] += tau_act[f, j] + _joint_limit_torque(
                th[f, j], thd[f, j], fparam[f, F_LO1 + 2 * j], fparam[f, F_HI1 + 2 * j],
                wparam[W_KLIM], wparam[W_CLIM])
        a1, a2 = _finger_dynamics(f, th, thd, fparam, frames, geff, tau_c)
        thd[f, 0] += dt * a1
        thd[f, 1] += dt * a2
        th[f, 0] += dt * thd[f, 0]
        th[f, 1] += dt * thd[f, 1]

    status = STATUS_OK
    for o in range(opos.shape[0]):
        m = omass[o, 0]
        ovel[o, 0] += dt * ((ofrc[o, 0] + oext[o, 0]) / m + wparam[W_GX])
        ovel[o, 1] += dt * ((ofrc[o, 1] + oext[o, 1]) / m + wparam[W_GY])
        ovel[o, 2] += dt * (ofrc[o, 2] + oext[o, 2]) / omass[o, 1]
        opos[o, 0] += dt * ovel[o, 0]
        opos[o, 1] += dt * ovel[o, 1]
        opos[o, 2] += dt * ovel[o, 2]
        if not (abs(ovel[o, 0]) < 1e3 and abs(ovel[o, 1]) < 1e3 and abs(ovel[o, 2]) < 1e5):
            status = STATUS_DIVERGED
    for f in range(2):
        for j in range(2):
            if not abs(thd[f, j]) < 1e4:
                status = STATUS_DIVERGED
    return status


# --------------------------------------------------------------------------
# inner (current) loop with physics substeps


@njit
def inner_tick(
    th, thd, opos, ovel, omass, oext, hand, fparam, wparam, shapes, pairs, pair_mu, ts, co,
    ms, mpar, iq_ref, noise, trans, counters, nsub, dt_phys,
    frames, sw, tau_c, ofrc, probe, reaction, tau_act,
):
    """Encoder read, current sensing and PI update for all four motors, then
    ``nsub`` physics substeps with the resulting voltages held constant."""
    n1 = trans[0]
    n12 = trans[0] * trans[1]
    res = mpar[MP_RES]
    pp = mpar[MP_PP]
    dti = mpar[MP_DT]
    vmax = mpar[MP_VMAX]
    for f in range(2):
        q1 = n1 * th[f, 0] + n12 * th[f, 1]
        q2 = -n1 * th[f, 0] + n12 * th[f, 1]
        for j in range(2):
            m = 2 * f + j
            q = q1 if j == 0 else q2
            q_enc = quantize(q, res)
            raw = (q_enc - ms[m, M_ENC]) / dti
            ms[m, M_VEL] += mpar[MP_ALPHA] * (raw - ms[m, M_VEL])
            ms[m, M_VFF] += mpar[MP_ALPHA_FF] * (raw - ms[m, M_VFF])
            ms[m, M_ENC] = q_enc
            th_e = pp * q
            th_enc = pp * q_enc
            ia, ib, ic = inverse_park_clarke(ms[m, M_ID], ms[m, M_IQ], th_e)
            ia += noise[m, 0]
            ib += noise[m, 1]
            ic = -ia - ib
            idm, iqm = clarke_park(ia, ib, ic, th_enc)
            vd, integ_d = pi_step(0.0, idm, ms[m, M_INTD], mpar[MP_KP], mpar[MP_KI], dti, vmax)
            vq, integ_q = pi_step(iq_ref[m], iqm, ms[m, M_INTQ], mpar[MP_KP], mpar[MP_KI], dti, vmax)
            ms[m, M_INTD] = integ_d
            ms[m, M_INTQ] = integ_q
            # speed-voltage decoupling from a lightly filtered encoder rate
            we_ff = pp * ms[m, M_VFF]
            vd -= we_ff * mpar[MP_L] * iqm
            vq += we_ff * (mpar[MP_L] * idm + mpar[MP_LAM])
            mag = math.sqrt(vd * vd + vq * vq)
            if mag > vmax:
                vd *= vmax / mag
                vq *= vmax / mag
            ms[m, M_VD] = vd
            ms[m, M_VQ] = vq
            # controller frame -> true rotor frame
            delta = th_enc - th_e
            c = math.cos(delta)
            s = math.sin(delta)
            ms[m, M_VDT] = c * vd - s * vq
            ms[m, M_VQT] = s * vd + c * vq
    counters[0] += 1

    status = STATUS_OK
    kt = 1.5 * pp * mpar[MP_LAM]
    for _ in range(nsub):
        for f in range(2):
            w1 = n1 * thd[f, 0] + n12 * thd[f, 1]
            w2 = -n1 * thd[f, 0] + n12 * thd[f, 1]
            for j in range(2):
                m = 2 * f + j
                w = w1 if j == 0 else w2
                i_d, i_q = motor_substep(
                    ms[m, M_ID], ms[m, M_IQ], ms[m, M_VDT], ms[m, M_VQT], w,
                    mpar[MP_R], mpar[MP_L], mpar[MP_LAM], pp, dt_phys)
                ms[m, M_ID] = i_d
                ms[m, M_IQ] = i_q
                ms[m, M_TAU] = kt * ms[m, M_IQ]
            tau_act[f, 0] = n1 * (ms[2 * f, M_TAU] - ms[2 * f + 1, M_TAU])
            tau_act[f, 1] = n12 * (ms[2 * f, M_TAU] + ms[2 * f + 1, M_TAU])
        status = phys_substep(th, thd, opos, ovel, omass, oext, hand, fparam, wparam, shapes,
                              pairs, pair_mu, ts, co, tau_act, dt_phys, frames, sw, tau_c, ofrc,
                              probe, reaction)
        counters[1] += 1
        if status != STATUS_OK:
            break
    return status
