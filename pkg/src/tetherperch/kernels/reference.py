"""Pure-Python physics kernel (fallback backend).

Implements exactly the same algorithm as the compiled kernel in ``_core.pyx``:
semi-implicit Euler integration of the chain, PD-controlled vehicle point mass
with a one-way tether spring, then an interleave of direct constraint
projection and cylinder collision, and finally the position-based velocity
update with a friction response at contacts.

The distance constraints are solved by fast projection: each pass linearizes
the constraint system and solves the resulting tridiagonal normal equations
(Thomas algorithm) in the inverse-mass metric.  Gauss-Seidel relaxation is
hopeless here: the end weight outweighs a chain link a hundredfold, so
pairwise sweeps move it ~1% per pass and taut yanks never converge.

Every operation is ordered identically to the compiled version and runs on
IEEE doubles, so the two backends agree bit for bit.  This module trades speed
for having no build step; it is selected automatically when the extension is
unavailable (or when ``TETHERPERCH_PURE=1``).
"""

from __future__ import annotations

import math

from .layout import (
    O_AXIS_FALLBACK,
    O_CONTACT,
    O_DIVERGED,
    O_MAX_VIOLATION,
    O_MIN_RADIAL,
    P_AX,
    P_AY,
    P_AZ,
    P_CONTACT_EPS,
    P_CX,
    P_CY,
    P_CZ,
    P_DT,
    P_EXIT_TOL,
    P_FRICTION,
    P_GRAVITY,
    P_KD,
    P_KP,
    P_MAX_ACCEL,
    P_MAX_ITERS,
    P_MAX_SPEED,
    P_MIN_ITERS,
    P_QUAD_MASS,
    P_RADIUS,
    P_SEG_LEN,
    P_TETHER_K,
)

_HUGE = 1.0e9


def _radial(px, py, pz, cx, cy, cz, ax, ay, az):
    """Radial offset of a point from the cylinder axis: (rx, ry, rz, dist)."""
    dx = px - cx
    dy = py - cy
    dz = pz - cz
    along = dx * ax + dy * ay + dz * az
    rx = dx - along * ax
    ry = dy - along * ay
    rz = dz - along * az
    return rx, ry, rz, math.sqrt(rx * rx + ry * ry + rz * rz)


def _project_pass(p, im, n_seg, seg_len):
    """One fast-projection pass: returns the largest correction magnitude.

    Solves (J M^-1 J^T) lam = -C for the segment-length constraints, where the
    system matrix is tridiagonal because each constraint shares a point only
    with its neighbors, then applies the mass-weighted correction M^-1 J^T lam.
    """
    ux = [0.0] * n_seg
    uy = [0.0] * n_seg
    uz = [0.0] * n_seg
    diag = [0.0] * n_seg
    sub = [0.0] * n_seg
    sup = [0.0] * n_seg
    rhs = [0.0] * n_seg

    for s in range(n_seg):
        dx = p[s + 1][0] - p[s][0]
        dy = p[s + 1][1] - p[s][1]
        dz = p[s + 1][2] - p[s][2]
        dist = math.sqrt(dx * dx + dy * dy + dz * dz)
        if dist < 1e-12:
            ux[s] = 0.0
            uy[s] = 0.0
            uz[s] = 1.0
            rhs[s] = -(dist - seg_len)
        else:
            ux[s] = dx / dist
            uy[s] = dy / dist
            uz[s] = dz / dist
            rhs[s] = -(dist - seg_len)
        diag[s] = im[s] + im[s + 1]
    for s in range(1, n_seg):
        dot = ux[s - 1] * ux[s] + uy[s - 1] * uy[s] + uz[s - 1] * uz[s]
        sub[s] = -im[s] * dot
        sup[s - 1] = sub[s]

    # Thomas forward elimination and back substitution.
    cp = [0.0] * n_seg
    dp = [0.0] * n_seg
    denom = diag[0]
    if abs(denom) < 1e-30:
        denom = 1e-30
    cp[0] = sup[0] / denom if n_seg > 1 else 0.0
    dp[0] = rhs[0] / denom
    for s in range(1, n_seg):
        denom = diag[s] - sub[s] * cp[s - 1]
        if abs(denom) < 1e-30:
            denom = 1e-30
        if s < n_seg - 1:
            cp[s] = sup[s] / denom
        dp[s] = (rhs[s] - sub[s] * dp[s - 1]) / denom
    lam = [0.0] * n_seg
    lam[n_seg - 1] = dp[n_seg - 1]
    for s in range(n_seg - 2, -1, -1):
        lam[s] = dp[s] - cp[s] * lam[s + 1]

    # Correction per point: lam[i-1] pulls via the left segment, lam[i] via
    # the right one.  A global clamp guards the linearization against wild
    # starts; the next pass finishes the job.
    max_corr = 0.0
    n_pts = n_seg + 1
    gx = [0.0] * n_pts
    gy = [0.0] * n_pts
    gz = [0.0] * n_pts
    for i in range(1, n_pts):
        cxx = 0.0
        cyy = 0.0
        czz = 0.0
        if i - 1 < n_seg:
            cxx -= lam[i - 1] * ux[i - 1]
            cyy -= lam[i - 1] * uy[i - 1]
            czz -= lam[i - 1] * uz[i - 1]
        if i < n_seg:
            cxx += lam[i] * ux[i]
            cyy += lam[i] * uy[i]
            czz += lam[i] * uz[i]
        gx[i] = -im[i] * cxx
        gy[i] = -im[i] * cyy
        gz[i] = -im[i] * czz
        mag = math.sqrt(gx[i] * gx[i] + gy[i] * gy[i] + gz[i] * gz[i])
        if mag > max_corr:
            max_corr = mag
    scale = 1.0
    if max_corr > seg_len:
        scale = seg_len / max_corr
    for i in range(1, n_pts):
        p[i][0] += gx[i] * scale
        p[i][1] += gy[i] * scale
        p[i][2] += gz[i] * scale
    return max_corr


def step_world(quad_pos, quad_vel, link_pos, link_vel, inv_mass, waypoint, params, out):
    """Advance the full world by one physics substep of ``dt``.

    Arrays are mutated in place: ``quad_pos``/``quad_vel`` are shape (3,),
    ``link_pos``/``link_vel`` are shape (n_points, 3), ``inv_mass`` is
    (n_points,) with ``inv_mass[0] == 0`` pinning the attachment point.
    ``params``/``out`` follow :mod:`tetherperch.kernels.layout`.
    """
    dt = float(params[P_DT])
    grav = float(params[P_GRAVITY])
    kp = float(params[P_KP])
    kd = float(params[P_KD])
    vmax = float(params[P_MAX_SPEED])
    amax = float(params[P_MAX_ACCEL])
    qmass = float(params[P_QUAD_MASS])
    ktether = float(params[P_TETHER_K])
    seg_len = float(params[P_SEG_LEN])
    min_iters = int(params[P_MIN_ITERS])
    max_iters = int(params[P_MAX_ITERS])
    exit_tol = float(params[P_EXIT_TOL]) * seg_len
    cx = float(params[P_CX])
    cy = float(params[P_CY])
    cz = float(params[P_CZ])
    ax = float(params[P_AX])
    ay = float(params[P_AY])
    az = float(params[P_AZ])
    radius = float(params[P_RADIUS])
    friction = float(params[P_FRICTION])
    contact_eps = float(params[P_CONTACT_EPS])

    p = link_pos.tolist()
    v = link_vel.tolist()
    im = inv_mass.tolist()
    n_pts = len(im)
    n_seg = n_pts - 1

    qpx, qpy, qpz = float(quad_pos[0]), float(quad_pos[1]), float(quad_pos[2])
    qvx, qvy, qvz = float(quad_vel[0]), float(quad_vel[1]), float(quad_vel[2])
    wx, wy, wz = float(waypoint[0]), float(waypoint[1]), float(waypoint[2])

    start = [row[:] for row in p]

    # Chain integration (gravity only; the pinned point 0 follows the vehicle).
    for i in range(1, n_pts):
        v[i][2] -= grav * dt
        p[i][0] += v[i][0] * dt
        p[i][1] += v[i][1] * dt
        p[i][2] += v[i][2] * dt

    # One-way tether spring on the vehicle.  The chain has already been
    # integrated, so compare against the vehicle advanced by its own
    # velocity; measuring from the stale position reads a phantom stretch
    # of |v|*dt during co-moving flight.  The dead band hides the
    # projection residual and the per-step gravity transient, so a chain
    # at rest transmits no force; only genuinely taut events tug the
    # vehicle.
    tax = tay = taz = 0.0
    dx = p[1][0] - (qpx + qvx * dt)
    dy = p[1][1] - (qpy + qvy * dt)
    dz = p[1][2] - (qpz + qvz * dt)
    dist1 = math.sqrt(dx * dx + dy * dy + dz * dz)
    band = 2.0 * grav * dt * dt + 1e-3 * seg_len
    stretch = dist1 - seg_len - band
    if stretch > 0.0 and dist1 > 1e-12:
        coeff = ktether * stretch / (qmass * dist1)
        tax = coeff * dx
        tay = coeff * dy
        taz = coeff * dz

    # Vehicle: PD acceleration toward the waypoint, clamped, plus tension.
    acx = kp * (wx - qpx) - kd * qvx
    acy = kp * (wy - qpy) - kd * qvy
    acz = kp * (wz - qpz) - kd * qvz
    amag = math.sqrt(acx * acx + acy * acy + acz * acz)
    if amag > amax:
        scale = amax / amag
        acx *= scale
        acy *= scale
        acz *= scale
    acx += tax
    acy += tay
    acz += taz
    qvx += acx * dt
    qvy += acy * dt
    qvz += acz * dt
    speed = math.sqrt(qvx * qvx + qvy * qvy + qvz * qvz)
    if speed > vmax:
        scale = vmax / speed
        qvx *= scale
        qvy *= scale
        qvz *= scale
    qpx += qvx * dt
    qpy += qvy * dt
    qpz += qvz * dt

    axis_fallback = 0.0

    # Vehicle-branch collision: project out and respond.
    rx, ry, rz, rdist = _radial(qpx, qpy, qpz, cx, cy, cz, ax, ay, az)
    if rdist < radius:
        if rdist < 1e-12:
            nx, ny, nz = 0.0, 0.0, 1.0
            axis_fallback = 1.0
        else:
            nx, ny, nz = rx / rdist, ry / rdist, rz / rdist
        push = radius - rdist
        qpx += nx * push
        qpy += ny * push
        qpz += nz * push
        vn = qvx * nx + qvy * ny + qvz * nz
        qvx -= vn * nx
        qvy -= vn * ny
        qvz -= vn * nz
        qvx *= friction
        qvy *= friction
        qvz *= friction

    # Pin the attachment point to the vehicle.
    p[0][0] = qpx
    p[0][1] = qpy
    p[0][2] = qpz

    # Interleave direct distance projection with the collision sweep until
    # both constraint families hold.
    contacted = [False] * n_pts
    max_violation = 0.0
    it = 0
    while True:
        it += 1
        _project_pass(p, im, n_seg, seg_len)
        for i in range(1, n_pts):
            rx, ry, rz, rdist = _radial(p[i][0], p[i][1], p[i][2], cx, cy, cz, ax, ay, az)
            if rdist < radius:
                if rdist < 1e-12:
                    nx, ny, nz = 0.0, 0.0, 1.0
                    axis_fallback = 1.0
                else:
                    nx, ny, nz = rx / rdist, ry / rdist, rz / rdist
                push = radius - rdist
                p[i][0] += nx * push
                p[i][1] += ny * push
                p[i][2] += nz * push
                contacted[i] = True
        max_violation = 0.0
        for s in range(n_seg):
            dx = p[s + 1][0] - p[s][0]
            dy = p[s + 1][1] - p[s][1]
            dz = p[s + 1][2] - p[s][2]
            err = abs(math.sqrt(dx * dx + dy * dy + dz * dz) - seg_len)
            if err > max_violation:
                max_violation = err
        if it >= min_iters and max_violation <= exit_tol:
            break
        if it >= max_iters:
            break

    # Position-based velocity update, then contact response.
    inv_dt = 1.0 / dt
    for i in range(1, n_pts):
        v[i][0] = (p[i][0] - start[i][0]) * inv_dt
        v[i][1] = (p[i][1] - start[i][1]) * inv_dt
        v[i][2] = (p[i][2] - start[i][2]) * inv_dt
        if contacted[i]:
            rx, ry, rz, rdist = _radial(p[i][0], p[i][1], p[i][2], cx, cy, cz, ax, ay, az)
            if rdist < 1e-12:
                nx, ny, nz = 0.0, 0.0, 1.0
            else:
                nx, ny, nz = rx / rdist, ry / rdist, rz / rdist
            vn = v[i][0] * nx + v[i][1] * ny + v[i][2] * nz
            v[i][0] -= vn * nx
            v[i][1] -= vn * ny
            v[i][2] -= vn * nz
            v[i][0] *= friction
            v[i][1] *= friction
            v[i][2] *= friction
    v[0][0] = qvx
    v[0][1] = qvy
    v[0][2] = qvz

    # Contact flag and minimum radial clearance for the reward layer.
    contact = 0.0
    min_radial = _HUGE
    for i in range(1, n_pts):
        _, _, _, rdist = _radial(p[i][0], p[i][1], p[i][2], cx, cy, cz, ax, ay, az)
        if rdist < min_radial:
            min_radial = rdist
        if rdist <= radius + contact_eps:
            contact = 1.0

    diverged = 0.0
    vals = [qpx, qpy, qpz, qvx, qvy, qvz]
    for i in range(n_pts):
        vals.extend(p[i])
        vals.extend(v[i])
    for x in vals:
        if not (-_HUGE < x < _HUGE):
            diverged = 1.0
            break

    quad_pos[0] = qpx
    quad_pos[1] = qpy
    quad_pos[2] = qpz
    quad_vel[0] = qvx
    quad_vel[1] = qvy
    quad_vel[2] = qvz
    for i in range(n_pts):
        link_pos[i, 0] = p[i][0]
        link_pos[i, 1] = p[i][1]
        link_pos[i, 2] = p[i][2]
        link_vel[i, 0] = v[i][0]
        link_vel[i, 1] = v[i][1]
        link_vel[i, 2] = v[i][2]

    out[O_CONTACT] = contact
    out[O_MAX_VIOLATION] = max_violation / seg_len
    out[O_DIVERGED] = diverged
    out[O_MIN_RADIAL] = min_radial
    out[O_AXIS_FALLBACK] = axis_fallback


def project_chain(link_pos, inv_mass, anchor, seg_len, iterations):
    """Distance-only projection used by the standalone constraint solver.

    Pins point 0 to ``anchor``, runs up to ``iterations`` fast-projection
    passes (early exit once fully converged), and returns the largest
    remaining absolute segment-length violation in meters.
    """
    p = link_pos.tolist()
    im = inv_mass.tolist()
    n_pts = len(im)
    n_seg = n_pts - 1
    seg_len = float(seg_len)

    p[0][0] = float(anchor[0])
    p[0][1] = float(anchor[1])
    p[0][2] = float(anchor[2])

    max_violation = 0.0
    for _ in range(int(iterations)):
        _project_pass(p, im, n_seg, seg_len)
        max_violation = 0.0
        for s in range(n_seg):
            dx = p[s + 1][0] - p[s][0]
            dy = p[s + 1][1] - p[s][1]
            dz = p[s + 1][2] - p[s][2]
            err = abs(math.sqrt(dx * dx + dy * dy + dz * dz) - seg_len)
            if err > max_violation:
                max_violation = err
        if max_violation <= 1e-12:
            break

    for i in range(n_pts):
        link_pos[i, 0] = p[i][0]
        link_pos[i, 1] = p[i][1]
        link_pos[i, 2] = p[i][2]
    return max_violation
