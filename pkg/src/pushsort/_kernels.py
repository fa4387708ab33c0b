"""Compiled inner loops for the transition model and the reward.

Everything here works on flat float arrays so that numba can compile it in
nopython mode. Body 0 is the robot, bodies 1..M are the movables; obstacles
are stored separately in world coordinates.
"""

import math

import numpy as np
from numba import njit

ROT_CAP = 0.2  # rad per substep


@njit(cache=True, nogil=True)
def xform(src, nv, x, y, th, out):
    c = math.cos(th)
    s = math.sin(th)
    for i in range(nv):
        px = src[i, 0]
        py = src[i, 1]
        out[i, 0] = c * px - s * py + x
        out[i, 1] = s * px + c * py + y


@njit(cache=True, nogil=True)
def sat(av, an, bv, bn):
    """Return (overlapping, depth, nx, ny); the normal moves ``b`` out of ``a``."""
    best = np.inf
    bx = 0.0
    by = 0.0
    for poly in range(2):
        if poly == 0:
            pv = av
            pn = an
        else:
            pv = bv
            pn = bn
        for e in range(pn):
            x0 = pv[e, 0]
            y0 = pv[e, 1]
            x1 = pv[(e + 1) % pn, 0]
            y1 = pv[(e + 1) % pn, 1]
            ex = x1 - x0
            ey = y1 - y0
            L = math.sqrt(ex * ex + ey * ey)
            nx = ey / L
            ny = -ex / L
            amin = np.inf
            amax = -np.inf
            for i in range(an):
                d = av[i, 0] * nx + av[i, 1] * ny
                if d < amin:
                    amin = d
                if d > amax:
                    amax = d
            bmin = np.inf
            bmax = -np.inf
            for i in range(bn):
                d = bv[i, 0] * nx + bv[i, 1] * ny
                if d < bmin:
                    bmin = d
                if d > bmax:
                    bmax = d
            fwd = amax - bmin
            back = bmax - amin
            if fwd < 0.0 or back < 0.0:
                return False, 0.0, 0.0, 0.0
            if fwd <= back:
                if fwd < best:
                    best = fwd
                    bx = nx
                    by = ny
            else:
                if back < best:
                    best = back
                    bx = -nx
                    by = -ny
    return True, best, bx, by


@njit(cache=True, nogil=True)
def overlap_centroid(av, an, bv, bn, buf_a, buf_b):
    """Centroid of the intersection of two convex CCW polygons (Sutherland-Hodgman)."""
    n = bn
    for i in range(bn):
        buf_a[i, 0] = bv[i, 0]
        buf_a[i, 1] = bv[i, 1]
    for e in range(an):
        if n == 0:
            break
        x0 = av[e, 0]
        y0 = av[e, 1]
        x1 = av[(e + 1) % an, 0]
        y1 = av[(e + 1) % an, 1]
        m = 0
        for i in range(n):
            px = buf_a[i, 0]
            py = buf_a[i, 1]
            qx = buf_a[(i + 1) % n, 0]
            qy = buf_a[(i + 1) % n, 1]
            sp = (x1 - x0) * (py - y0) - (y1 - y0) * (px - x0)
            sq = (x1 - x0) * (qy - y0) - (y1 - y0) * (qx - x0)
            if sp >= 0.0:
                buf_b[m, 0] = px
                buf_b[m, 1] = py
                m += 1
            if (sp >= 0.0) != (sq >= 0.0):
                t = sp / (sp - sq)
                buf_b[m, 0] = px + t * (qx - px)
                buf_b[m, 1] = py + t * (qy - py)
                m += 1
        n = m
        for i in range(n):
            buf_a[i, 0] = buf_b[i, 0]
            buf_a[i, 1] = buf_b[i, 1]
    if n == 0:
        # Numerically empty clip: fall back to the midpoint of both vertex means.
        sx = 0.0
        sy = 0.0
        for i in range(an):
            sx += av[i, 0] / an
            sy += av[i, 1] / an
        tx = 0.0
        ty = 0.0
        for i in range(bn):
            tx += bv[i, 0] / bn
            ty += bv[i, 1] / bn
        return 0.5 * (sx + tx), 0.5 * (sy + ty)
    area = 0.0
    cx = 0.0
    cy = 0.0
    mx = 0.0
    my = 0.0
    for i in range(n):
        px = buf_a[i, 0]
        py = buf_a[i, 1]
        qx = buf_a[(i + 1) % n, 0]
        qy = buf_a[(i + 1) % n, 1]
        cr = px * qy - qx * py
        area += cr
        cx += (px + qx) * cr
        cy += (py + qy) * cr
        mx += px / n
        my += py / n
    if abs(area) < 1e-14:
        return mx, my
    return cx / (3.0 * area), cy / (3.0 * area)


@njit(cache=True, nogil=True)
def apply_push(poses, b, depth, nx, ny, cx, cy, vx, vy, cf, kappa, com_off, rot_used):
    """Move body ``b`` out along (nx, ny) with Coulomb-capped drag and contact-induced spin."""
    tx = -ny
    ty = nx
    vt = vx * tx + vy * ty
    drag = min(abs(vt), cf * depth)
    if vt < 0.0:
        drag = -drag
    dx = depth * nx + drag * tx
    dy = depth * ny + drag * ty
    poses[b, 0] += dx
    poses[b, 1] += dy
    if kappa <= 0.0:
        return
    cx += dx
    cy += dy
    th = poses[b, 2]
    c = math.cos(th)
    s = math.sin(th)
    ox = com_off[b, 0]
    oy = com_off[b, 1]
    gx = poses[b, 0] + c * ox - s * oy
    gy = poses[b, 1] + s * ox + c * oy
    arm = (cx - gx) * ny - (cy - gy) * nx
    dth = kappa * arm * depth
    lo = -ROT_CAP - rot_used[b]
    hi = ROT_CAP - rot_used[b]
    if dth < lo:
        dth = lo
    if dth > hi:
        dth = hi
    if dth == 0.0:
        return
    rc = math.cos(dth)
    rs = math.sin(dth)
    rx = poses[b, 0] - cx
    ry = poses[b, 1] - cy
    poses[b, 0] = cx + rc * rx - rs * ry
    poses[b, 1] = cy + rs * rx + rc * ry
    poses[b, 2] = th + dth
    rot_used[b] += dth


@njit(cache=True, nogil=True)
def _wrap(t):
    while t > math.pi:
        t -= 2.0 * math.pi
    while t <= -math.pi:
        t += 2.0 * math.pi
    return t


@njit(cache=True, nogil=True)
def _outside(v, nv, ws, tol):
    for i in range(nv):
        if v[i, 0] < ws[0] - tol or v[i, 0] > ws[2] + tol or v[i, 1] < ws[1] - tol or v[i, 1] > ws[3] + tol:
            return True
    return False


@njit(cache=True, nogil=True)
def _near(poses, i, j, rad):
    dx = poses[i, 0] - poses[j, 0]
    dy = poses[i, 1] - poses[j, 1]
    r = rad[i] + rad[j]
    return dx * dx + dy * dy <= r * r


@njit(cache=True, nogil=True)
def _near_static(poses, i, rad, st_c, st_r, s):
    dx = poses[i, 0] - st_c[s, 0]
    dy = poses[i, 1] - st_c[s, 1]
    r = rad[i] + st_r[s]
    return dx * dx + dy * dy <= r * r


@njit(cache=True, nogil=True)
def _max_residual(poses, active, part_verts, part_nv, pstart, rad, st_verts, st_nv, st_c, st_r, va, vb):
    """Deepest remaining penetration among pairs the substep may have changed."""
    nb = poses.shape[0]
    worst = 0.0
    for i in range(nb):
        for j in range(i + 1, nb):
            if not (i == 0 or active[i] or active[j]):
                continue
            if not _near(poses, i, j, rad):
                continue
            for p in range(pstart[i], pstart[i + 1]):
                xform(part_verts[p], part_nv[p], poses[i, 0], poses[i, 1], poses[i, 2], va)
                for q in range(pstart[j], pstart[j + 1]):
                    xform(part_verts[q], part_nv[q], poses[j, 0], poses[j, 1], poses[j, 2], vb)
                    hit, depth, nx, ny = sat(va, part_nv[p], vb, part_nv[q])
                    if hit and depth > worst:
                        worst = depth
        if i == 0 or active[i]:
            for s in range(st_nv.shape[0]):
                if not _near_static(poses, i, rad, st_c, st_r, s):
                    continue
                for p in range(pstart[i], pstart[i + 1]):
                    xform(part_verts[p], part_nv[p], poses[i, 0], poses[i, 1], poses[i, 2], va)
                    hit, depth, nx, ny = sat(st_verts[s], st_nv[s], va, part_nv[p])
                    if hit and depth > worst:
                        worst = depth
    return worst


@njit(cache=True, nogil=True)
def step_kernel(poses_in, action, trans_step, rot_step, substeps, iters, cf, kappa, tol, slop,
                part_verts, part_nv, pstart, rad, com_off, st_verts, st_nv, st_c, st_r, ws,
                contacts):
    """Execute one discrete robot action under position-based quasistatic projection.

    Returns (poses, contacted, out_of_bounds, stalled, pushed, n_contacts). ``contacts``
    receives (pusher, pushed) body pairs from committed substeps, up to its capacity.
    """
    nb = poses_in.shape[0]
    vmax = part_verts.shape[1]
    poses = poses_in.copy()
    saved = poses_in.copy()
    active = np.zeros(nb, dtype=np.bool_)
    active_saved = np.zeros(nb, dtype=np.bool_)
    rot_used = np.zeros(nb)
    va = np.empty((vmax, 2))
    vb = np.empty((vmax, 2))
    buf_a = np.empty((4 * vmax, 2))
    buf_b = np.empty((4 * vmax, 2))
    cap = contacts.shape[0]
    n_contacts = 0
    sub_start = 0
    contacted = False
    oob = False
    stalled = False

    x0 = poses_in[0, 0]
    y0 = poses_in[0, 1]
    th0 = poses_in[0, 2]
    if action < 8:
        ang = th0 + action * (math.pi / 4.0)
        dx = trans_step * math.cos(ang)
        dy = trans_step * math.sin(ang)
        dth = 0.0
    else:
        dx = 0.0
        dy = 0.0
        dth = rot_step if action == 8 else -rot_step

    for k in range(1, substeps + 1):
        for b in range(nb):
            saved[b, 0] = poses[b, 0]
            saved[b, 1] = poses[b, 1]
            saved[b, 2] = poses[b, 2]
            active_saved[b] = active[b]
            rot_used[b] = 0.0
        sub_start = n_contacts
        frac = k / substeps
        poses[0, 0] = x0 + dx * frac
        poses[0, 1] = y0 + dy * frac
        poses[0, 2] = th0 + dth * frac
        rdx = poses[0, 0] - saved[0, 0]
        rdy = poses[0, 1] - saved[0, 1]
        rdth = poses[0, 2] - saved[0, 2]

        blocked = False
        for p in range(pstart[0], pstart[1]):
            xform(part_verts[p], part_nv[p], poses[0, 0], poses[0, 1], poses[0, 2], va)
            if _outside(va, part_nv[p], ws, tol):
                blocked = True
                break
            for s in range(st_nv.shape[0]):
                if not _near_static(poses, 0, rad, st_c, st_r, s):
                    continue
                hit, depth, nx, ny = sat(st_verts[s], st_nv[s], va, part_nv[p])
                if hit and depth > tol:
                    blocked = True
                    break
            if blocked:
                break
        if blocked:
            for b in range(nb):
                poses[b, 0] = saved[b, 0]
                poses[b, 1] = saved[b, 1]
                poses[b, 2] = saved[b, 2]
            stalled = True
            break

        sub_contact = False
        for it in range(iters):
            moved = False
            # robot against movables
            for j in range(1, nb):
                if not _near(poses, 0, j, rad):
                    continue
                for p in range(pstart[0], pstart[1]):
                    xform(part_verts[p], part_nv[p], poses[0, 0], poses[0, 1], poses[0, 2], va)
                    for q in range(pstart[j], pstart[j + 1]):
                        xform(part_verts[q], part_nv[q], poses[j, 0], poses[j, 1], poses[j, 2], vb)
                        hit, depth, nx, ny = sat(va, part_nv[p], vb, part_nv[q])
                        if not hit or depth <= slop:
                            continue
                        cx, cy = overlap_centroid(va, part_nv[p], vb, part_nv[q], buf_a, buf_b)
                        # robot point velocity over this substep
                        rx = cx - poses[0, 0]
                        ry = cy - poses[0, 1]
                        c = math.cos(-rdth)
                        s = math.sin(-rdth)
                        px = c * rx - s * ry + saved[0, 0]
                        py = s * rx + c * ry + saved[0, 1]
                        apply_push(poses, j, depth, nx, ny, cx, cy, cx - px, cy - py, cf, kappa, com_off, rot_used)
                        if not active[j] and n_contacts < cap:
                            contacts[n_contacts, 0] = 0
                            contacts[n_contacts, 1] = j
                            n_contacts += 1
                        active[j] = True
                        sub_contact = True
                        moved = True
            # movable against movable
            for i in range(1, nb):
                for j in range(i + 1, nb):
                    if not (active[i] or active[j]):
                        continue
                    if not _near(poses, i, j, rad):
                        continue
                    for p in range(pstart[i], pstart[i + 1]):
                        for q in range(pstart[j], pstart[j + 1]):
                            xform(part_verts[p], part_nv[p], poses[i, 0], poses[i, 1], poses[i, 2], va)
                            xform(part_verts[q], part_nv[q], poses[j, 0], poses[j, 1], poses[j, 2], vb)
                            hit, depth, nx, ny = sat(va, part_nv[p], vb, part_nv[q])
                            if not hit or depth <= slop:
                                continue
                            if active[i] and active[j]:
                                h = 0.5 * depth
                                poses[i, 0] -= h * nx
                                poses[i, 1] -= h * ny
                                poses[j, 0] += h * nx
                                poses[j, 1] += h * ny
                            elif active[i]:
                                cx, cy = overlap_centroid(va, part_nv[p], vb, part_nv[q], buf_a, buf_b)
                                apply_push(poses, j, depth, nx, ny, cx, cy,
                                           poses[i, 0] - saved[i, 0], poses[i, 1] - saved[i, 1],
                                           cf, kappa, com_off, rot_used)
                                if not active[j] and n_contacts < cap:
                                    contacts[n_contacts, 0] = i
                                    contacts[n_contacts, 1] = j
                                    n_contacts += 1
                                active[j] = True
                            else:
                                cx, cy = overlap_centroid(vb, part_nv[q], va, part_nv[p], buf_a, buf_b)
                                apply_push(poses, i, depth, -nx, -ny, cx, cy,
                                           poses[j, 0] - saved[j, 0], poses[j, 1] - saved[j, 1],
                                           cf, kappa, com_off, rot_used)
                                if not active[i] and n_contacts < cap:
                                    contacts[n_contacts, 0] = j
                                    contacts[n_contacts, 1] = i
                                    n_contacts += 1
                                active[i] = True
                            moved = True
            # movables against obstacles
            for i in range(1, nb):
                if not active[i]:
                    continue
                for s in range(st_nv.shape[0]):
                    if not _near_static(poses, i, rad, st_c, st_r, s):
                        continue
                    for p in range(pstart[i], pstart[i + 1]):
                        xform(part_verts[p], part_nv[p], poses[i, 0], poses[i, 1], poses[i, 2], va)
                        hit, depth, nx, ny = sat(st_verts[s], st_nv[s], va, part_nv[p])
                        if hit and depth > slop:
                            poses[i, 0] += depth * nx
                            poses[i, 1] += depth * ny
                            moved = True
            if not moved:
                break

        worst = _max_residual(poses, active, part_verts, part_nv, pstart, rad, st_verts, st_nv, st_c, st_r, va, vb)
        out = False
        if worst <= tol:
            for i in range(1, nb):
                if not active[i]:
                    continue
                for p in range(pstart[i], pstart[i + 1]):
                    xform(part_verts[p], part_nv[p], poses[i, 0], poses[i, 1], poses[i, 2], va)
                    if _outside(va, part_nv[p], ws, tol):
                        out = True
                        break
                if out:
                    break
        if worst > tol or out:
            for b in range(nb):
                poses[b, 0] = saved[b, 0]
                poses[b, 1] = saved[b, 1]
                poses[b, 2] = saved[b, 2]
                active[b] = active_saved[b]
            n_contacts = sub_start
            if out:
                oob = True
            else:
                stalled = True
            break
        if sub_contact:
            contacted = True

    for b in range(nb):
        poses[b, 2] = _wrap(poses[b, 2])
    return poses, contacted, oob, stalled, active, n_contacts


@njit(cache=True, nogil=True)
def reward_kernel(poses, com_off, class_ids, n_classes, obst_c, lam, delta, d_floor, diag, out_parts):
    """Scalar reward; ``out_parts`` gets (sum_self, sum_other, sum_obst, d_cent)."""
    m = class_ids.shape[0]
    mu = np.zeros((n_classes, 2))
    cnt = np.zeros(n_classes)
    cent = np.empty((m, 2))
    for k in range(m):
        b = k + 1
        th = poses[b, 2]
        c = math.cos(th)
        s = math.sin(th)
        ox = com_off[b, 0]
        oy = com_off[b, 1]
        cent[k, 0] = poses[b, 0] + c * ox - s * oy
        cent[k, 1] = poses[b, 1] + s * ox + c * oy
        ci = class_ids[k]
        mu[ci, 0] += cent[k, 0]
        mu[ci, 1] += cent[k, 1]
        cnt[ci] += 1.0
    for i in range(n_classes):
        mu[i, 0] /= cnt[i]
        mu[i, 1] /= cnt[i]
    log_delta = math.log(delta)
    e_self = 0.0
    self_acc = np.zeros(n_classes)
    for k in range(m):
        ci = class_ids[k]
        dx = cent[k, 0] - mu[ci, 0]
        dy = cent[k, 1] - mu[ci, 1]
        v = -lam * (dx * dx + dy * dy)
        if v < log_delta:
            v = log_delta
        self_acc[ci] += v
    for i in range(n_classes):
        e_self += self_acc[i] / cnt[i]
    e_other = 0.0
    d_cent = np.inf
    for i in range(n_classes):
        for j in range(i):
            dx = mu[i, 0] - mu[j, 0]
            dy = mu[i, 1] - mu[j, 1]
            d2 = dx * dx + dy * dy
            arg = 1.0 - math.exp(-lam * d2)
            if arg < delta:
                arg = delta
            e_other += math.log(arg)
            d = math.sqrt(d2)
            if d < d_cent:
                d_cent = d
    e_obst = 0.0
    for i in range(n_classes):
        for o in range(obst_c.shape[0]):
            dx = obst_c[o, 0] - mu[i, 0]
            dy = obst_c[o, 1] - mu[i, 1]
            arg = 1.0 - math.exp(-lam * (dx * dx + dy * dy))
            if arg < delta:
                arg = delta
            e_obst += math.log(arg)
    if n_classes < 2:
        d_cent = diag
    elif d_cent < d_floor:
        d_cent = d_floor
    out_parts[0] = e_self
    out_parts[1] = e_other
    out_parts[2] = e_obst
    out_parts[3] = d_cent
    return (e_self + e_other + e_obst) / d_cent
