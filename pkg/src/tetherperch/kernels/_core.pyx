# cython: language_level=3
"""Compiled physics kernel.

Mirror of ``reference.py``: identical operation order on IEEE doubles, so the
two backends produce bit-identical trajectories.  Any change here must be made
in the reference module too (the parity test enforces this).
"""

from libc.math cimport sqrt, fabs
from libc.stdlib cimport malloc, free

from .layout import (
    O_AXIS_FALLBACK, O_CONTACT, O_DIVERGED, O_MAX_VIOLATION, O_MIN_RADIAL,
    P_AX, P_AY, P_AZ, P_CONTACT_EPS, P_CX, P_CY, P_CZ, P_DT, P_EXIT_TOL,
    P_FRICTION, P_GRAVITY, P_KD, P_KP, P_MAX_ACCEL, P_MAX_ITERS, P_MAX_SPEED,
    P_MIN_ITERS, P_QUAD_MASS, P_RADIUS, P_SEG_LEN, P_TETHER_K,
)

cdef double _HUGE = 1.0e9

cdef int _p_dt = P_DT
cdef int _p_gravity = P_GRAVITY
cdef int _p_kp = P_KP
cdef int _p_kd = P_KD
cdef int _p_max_speed = P_MAX_SPEED
cdef int _p_max_accel = P_MAX_ACCEL
cdef int _p_quad_mass = P_QUAD_MASS
cdef int _p_tether_k = P_TETHER_K
cdef int _p_seg_len = P_SEG_LEN
cdef int _p_min_iters = P_MIN_ITERS
cdef int _p_max_iters = P_MAX_ITERS
cdef int _p_exit_tol = P_EXIT_TOL
cdef int _p_cx = P_CX
cdef int _p_cy = P_CY
cdef int _p_cz = P_CZ
cdef int _p_ax = P_AX
cdef int _p_ay = P_AY
cdef int _p_az = P_AZ
cdef int _p_radius = P_RADIUS
cdef int _p_friction = P_FRICTION
cdef int _p_contact_eps = P_CONTACT_EPS
cdef int _o_contact = O_CONTACT
cdef int _o_max_violation = O_MAX_VIOLATION
cdef int _o_min_radial = O_MIN_RADIAL
cdef int _o_diverged = O_DIVERGED
cdef int _o_axis_fallback = O_AXIS_FALLBACK


cdef struct ProjScratch:
    double* ux
    double* uy
    double* uz
    double* diag
    double* sub
    double* sup
    double* rhs
    double* cp
    double* dp
    double* lam
    double* gx
    double* gy
    double* gz


cdef inline double _radial_dist(double px, double py, double pz,
                                double cx, double cy, double cz,
                                double ax, double ay, double az,
                                double* rx, double* ry, double* rz) nogil:
    cdef double dx = px - cx
    cdef double dy = py - cy
    cdef double dz = pz - cz
    cdef double along = dx * ax + dy * ay + dz * az
    rx[0] = dx - along * ax
    ry[0] = dy - along * ay
    rz[0] = dz - along * az
    return sqrt(rx[0] * rx[0] + ry[0] * ry[0] + rz[0] * rz[0])


cdef double _project_pass(double[:, ::1] p, double[::1] im, int n_seg,
                          double seg_len, ProjScratch* w) nogil:
    # One linearized solve of the segment-length constraints in the
    # inverse-mass metric; the normal matrix is tridiagonal (Thomas solve).
    cdef int s, i, n_pts
    cdef double dx, dy, dz, dist, dot, denom
    cdef double cxx, cyy, czz, mag, max_corr, scale

    for s in range(n_seg):
        dx = p[s + 1, 0] - p[s, 0]
        dy = p[s + 1, 1] - p[s, 1]
        dz = p[s + 1, 2] - p[s, 2]
        dist = sqrt(dx * dx + dy * dy + dz * dz)
        if dist < 1e-12:
            w.ux[s] = 0.0
            w.uy[s] = 0.0
            w.uz[s] = 1.0
            w.rhs[s] = -(dist - seg_len)
        else:
            w.ux[s] = dx / dist
            w.uy[s] = dy / dist
            w.uz[s] = dz / dist
            w.rhs[s] = -(dist - seg_len)
        w.diag[s] = im[s] + im[s + 1]
        w.sub[s] = 0.0
        w.sup[s] = 0.0
        w.cp[s] = 0.0
    for s in range(1, n_seg):
        dot = w.ux[s - 1] * w.ux[s] + w.uy[s - 1] * w.uy[s] + w.uz[s - 1] * w.uz[s]
        w.sub[s] = -im[s] * dot
        w.sup[s - 1] = w.sub[s]

    denom = w.diag[0]
    if fabs(denom) < 1e-30:
        denom = 1e-30
    if n_seg > 1:
        w.cp[0] = w.sup[0] / denom
    else:
        w.cp[0] = 0.0
    w.dp[0] = w.rhs[0] / denom
    for s in range(1, n_seg):
        denom = w.diag[s] - w.sub[s] * w.cp[s - 1]
        if fabs(denom) < 1e-30:
            denom = 1e-30
        if s < n_seg - 1:
            w.cp[s] = w.sup[s] / denom
        w.dp[s] = (w.rhs[s] - w.sub[s] * w.dp[s - 1]) / denom
    w.lam[n_seg - 1] = w.dp[n_seg - 1]
    for s in range(n_seg - 2, -1, -1):
        w.lam[s] = w.dp[s] - w.cp[s] * w.lam[s + 1]

    max_corr = 0.0
    n_pts = n_seg + 1
    for i in range(1, n_pts):
        cxx = 0.0
        cyy = 0.0
        czz = 0.0
        if i - 1 < n_seg:
            cxx = cxx - w.lam[i - 1] * w.ux[i - 1]
            cyy = cyy - w.lam[i - 1] * w.uy[i - 1]
            czz = czz - w.lam[i - 1] * w.uz[i - 1]
        if i < n_seg:
            cxx = cxx + w.lam[i] * w.ux[i]
            cyy = cyy + w.lam[i] * w.uy[i]
            czz = czz + w.lam[i] * w.uz[i]
        w.gx[i] = -im[i] * cxx
        w.gy[i] = -im[i] * cyy
        w.gz[i] = -im[i] * czz
        mag = sqrt(w.gx[i] * w.gx[i] + w.gy[i] * w.gy[i] + w.gz[i] * w.gz[i])
        if mag > max_corr:
            max_corr = mag
    scale = 1.0
    if max_corr > seg_len:
        scale = seg_len / max_corr
    for i in range(1, n_pts):
        p[i, 0] = p[i, 0] + w.gx[i] * scale
        p[i, 1] = p[i, 1] + w.gy[i] * scale
        p[i, 2] = p[i, 2] + w.gz[i] * scale
    return max_corr


cdef int _alloc_scratch(ProjScratch* w, int n_seg) except -1:
    cdef int n_pts = n_seg + 1
    w.ux = <double*>malloc(n_seg * sizeof(double))
    w.uy = <double*>malloc(n_seg * sizeof(double))
    w.uz = <double*>malloc(n_seg * sizeof(double))
    w.diag = <double*>malloc(n_seg * sizeof(double))
    w.sub = <double*>malloc(n_seg * sizeof(double))
    w.sup = <double*>malloc(n_seg * sizeof(double))
    w.rhs = <double*>malloc(n_seg * sizeof(double))
    w.cp = <double*>malloc(n_seg * sizeof(double))
    w.dp = <double*>malloc(n_seg * sizeof(double))
    w.lam = <double*>malloc(n_seg * sizeof(double))
    w.gx = <double*>malloc(n_pts * sizeof(double))
    w.gy = <double*>malloc(n_pts * sizeof(double))
    w.gz = <double*>malloc(n_pts * sizeof(double))
    if (w.ux == NULL or w.uy == NULL or w.uz == NULL or w.diag == NULL
            or w.sub == NULL or w.sup == NULL or w.rhs == NULL or w.cp == NULL
            or w.dp == NULL or w.lam == NULL or w.gx == NULL or w.gy == NULL
            or w.gz == NULL):
        _free_scratch(w)
        raise MemoryError()
    return 0


cdef void _free_scratch(ProjScratch* w):
    free(w.ux)
    free(w.uy)
    free(w.uz)
    free(w.diag)
    free(w.sub)
    free(w.sup)
    free(w.rhs)
    free(w.cp)
    free(w.dp)
    free(w.lam)
    free(w.gx)
    free(w.gy)
    free(w.gz)


def step_world(double[::1] quad_pos, double[::1] quad_vel,
               double[:, ::1] link_pos, double[:, ::1] link_vel,
               double[::1] inv_mass, double[::1] waypoint,
               double[::1] params, double[::1] out):
    """Advance the world one substep; see the reference module for the contract."""
    cdef double dt = params[_p_dt]
    cdef double grav = params[_p_gravity]
    cdef double kp = params[_p_kp]
    cdef double kd = params[_p_kd]
    cdef double vmax = params[_p_max_speed]
    cdef double amax = params[_p_max_accel]
    cdef double qmass = params[_p_quad_mass]
    cdef double ktether = params[_p_tether_k]
    cdef double seg_len = params[_p_seg_len]
    cdef int min_iters = <int>params[_p_min_iters]
    cdef int max_iters = <int>params[_p_max_iters]
    cdef double exit_tol = params[_p_exit_tol] * seg_len
    cdef double cx = params[_p_cx]
    cdef double cy = params[_p_cy]
    cdef double cz = params[_p_cz]
    cdef double ax = params[_p_ax]
    cdef double ay = params[_p_ay]
    cdef double az = params[_p_az]
    cdef double radius = params[_p_radius]
    cdef double friction = params[_p_friction]
    cdef double contact_eps = params[_p_contact_eps]

    cdef int n_pts = inv_mass.shape[0]
    cdef int n_seg = n_pts - 1
    cdef int i, s, it
    cdef double dx, dy, dz, dist, err, reach
    cdef double rx = 0.0, ry = 0.0, rz = 0.0, rdist
    cdef double nx, ny, nz, push, vn
    cdef double tax, tay, taz, dist1, band, stretch, coeff
    cdef double acx, acy, acz, amag, scale, speed
    cdef double max_violation, contact, min_radial, diverged, axis_fallback
    cdef double inv_dt

    cdef ProjScratch scratch
    cdef double* start = <double*>malloc(3 * n_pts * sizeof(double))
    cdef int* contacted = <int*>malloc(n_pts * sizeof(int))
    if start == NULL or contacted == NULL:
        if start != NULL:
            free(start)
        if contacted != NULL:
            free(contacted)
        raise MemoryError()
    _alloc_scratch(&scratch, n_seg)

    cdef double qpx = quad_pos[0]
    cdef double qpy = quad_pos[1]
    cdef double qpz = quad_pos[2]
    cdef double qvx = quad_vel[0]
    cdef double qvy = quad_vel[1]
    cdef double qvz = quad_vel[2]
    cdef double wx = waypoint[0]
    cdef double wy = waypoint[1]
    cdef double wz = waypoint[2]

    for i in range(n_pts):
        start[3 * i] = link_pos[i, 0]
        start[3 * i + 1] = link_pos[i, 1]
        start[3 * i + 2] = link_pos[i, 2]
        contacted[i] = 0

    # Chain integration (gravity only; the pinned point 0 follows the vehicle).
    for i in range(1, n_pts):
        link_vel[i, 2] = link_vel[i, 2] - grav * dt
        link_pos[i, 0] = link_pos[i, 0] + link_vel[i, 0] * dt
        link_pos[i, 1] = link_pos[i, 1] + link_vel[i, 1] * dt
        link_pos[i, 2] = link_pos[i, 2] + link_vel[i, 2] * dt

    # One-way tether spring on the vehicle (dead-banded, measured against
    # the velocity-advanced vehicle position; see reference).
    tax = 0.0
    tay = 0.0
    taz = 0.0
    dx = link_pos[1, 0] - (qpx + qvx * dt)
    dy = link_pos[1, 1] - (qpy + qvy * dt)
    dz = link_pos[1, 2] - (qpz + qvz * dt)
    dist1 = sqrt(dx * dx + dy * dy + dz * dz)
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
    amag = sqrt(acx * acx + acy * acy + acz * acz)
    if amag > amax:
        scale = amax / amag
        acx = acx * scale
        acy = acy * scale
        acz = acz * scale
    acx = acx + tax
    acy = acy + tay
    acz = acz + taz
    qvx = qvx + acx * dt
    qvy = qvy + acy * dt
    qvz = qvz + acz * dt
    speed = sqrt(qvx * qvx + qvy * qvy + qvz * qvz)
    if speed > vmax:
        scale = vmax / speed
        qvx = qvx * scale
        qvy = qvy * scale
        qvz = qvz * scale
    qpx = qpx + qvx * dt
    qpy = qpy + qvy * dt
    qpz = qpz + qvz * dt

    axis_fallback = 0.0

    # Vehicle-branch collision: project out and respond.
    rdist = _radial_dist(qpx, qpy, qpz, cx, cy, cz, ax, ay, az, &rx, &ry, &rz)
    if rdist < radius:
        if rdist < 1e-12:
            nx = 0.0
            ny = 0.0
            nz = 1.0
            axis_fallback = 1.0
        else:
            nx = rx / rdist
            ny = ry / rdist
            nz = rz / rdist
        push = radius - rdist
        qpx = qpx + nx * push
        qpy = qpy + ny * push
        qpz = qpz + nz * push
        vn = qvx * nx + qvy * ny + qvz * nz
        qvx = qvx - vn * nx
        qvy = qvy - vn * ny
        qvz = qvz - vn * nz
        qvx = qvx * friction
        qvy = qvy * friction
        qvz = qvz * friction

    # Pin the attachment point to the vehicle.
    link_pos[0, 0] = qpx
    link_pos[0, 1] = qpy
    link_pos[0, 2] = qpz

    # Interleave direct distance projection with the collision sweep until
    # both constraint families hold.
    max_violation = 0.0
    it = 0
    while True:
        it += 1
        _project_pass(link_pos, inv_mass, n_seg, seg_len, &scratch)
        for i in range(1, n_pts):
            rdist = _radial_dist(link_pos[i, 0], link_pos[i, 1], link_pos[i, 2],
                                 cx, cy, cz, ax, ay, az, &rx, &ry, &rz)
            if rdist < radius:
                if rdist < 1e-12:
                    nx = 0.0
                    ny = 0.0
                    nz = 1.0
                    axis_fallback = 1.0
                else:
                    nx = rx / rdist
                    ny = ry / rdist
                    nz = rz / rdist
                push = radius - rdist
                link_pos[i, 0] = link_pos[i, 0] + nx * push
                link_pos[i, 1] = link_pos[i, 1] + ny * push
                link_pos[i, 2] = link_pos[i, 2] + nz * push
                contacted[i] = 1
        max_violation = 0.0
        for s in range(n_seg):
            dx = link_pos[s + 1, 0] - link_pos[s, 0]
            dy = link_pos[s + 1, 1] - link_pos[s, 1]
            dz = link_pos[s + 1, 2] - link_pos[s, 2]
            err = fabs(sqrt(dx * dx + dy * dy + dz * dz) - seg_len)
            if err > max_violation:
                max_violation = err
        if it >= min_iters and max_violation <= exit_tol:
            break
        if it >= max_iters:
            break

    # Position-based velocity update, then contact response.
    inv_dt = 1.0 / dt
    for i in range(1, n_pts):
        link_vel[i, 0] = (link_pos[i, 0] - start[3 * i]) * inv_dt
        link_vel[i, 1] = (link_pos[i, 1] - start[3 * i + 1]) * inv_dt
        link_vel[i, 2] = (link_pos[i, 2] - start[3 * i + 2]) * inv_dt
        if contacted[i]:
            rdist = _radial_dist(link_pos[i, 0], link_pos[i, 1], link_pos[i, 2],
                                 cx, cy, cz, ax, ay, az, &rx, &ry, &rz)
            if rdist < 1e-12:
                nx = 0.0
                ny = 0.0
                nz = 1.0
            else:
                nx = rx / rdist
                ny = ry / rdist
                nz = rz / rdist
            vn = link_vel[i, 0] * nx + link_vel[i, 1] * ny + link_vel[i, 2] * nz
            link_vel[i, 0] = link_vel[i, 0] - vn * nx
            link_vel[i, 1] = link_vel[i, 1] - vn * ny
            link_vel[i, 2] = link_vel[i, 2] - vn * nz
            link_vel[i, 0] = link_vel[i, 0] * friction
            link_vel[i, 1] = link_vel[i, 1] * friction
            link_vel[i, 2] = link_vel[i, 2] * friction
    link_vel[0, 0] = qvx
    link_vel[0, 1] = qvy
    link_vel[0, 2] = qvz

    # Contact flag and minimum radial clearance for the reward layer.
    contact = 0.0
    min_radial = _HUGE
    for i in range(1, n_pts):
        rdist = _radial_dist(link_pos[i, 0], link_pos[i, 1], link_pos[i, 2],
                             cx, cy, cz, ax, ay, az, &rx, &ry, &rz)
        if rdist < min_radial:
            min_radial = rdist
        if rdist <= radius + contact_eps:
            contact = 1.0

    diverged = 0.0
    if not (-_HUGE < qpx < _HUGE and -_HUGE < qpy < _HUGE and -_HUGE < qpz < _HUGE
            and -_HUGE < qvx < _HUGE and -_HUGE < qvy < _HUGE and -_HUGE < qvz < _HUGE):
        diverged = 1.0
    if diverged == 0.0:
        for i in range(n_pts):
            if not (-_HUGE < link_pos[i, 0] < _HUGE
                    and -_HUGE < link_pos[i, 1] < _HUGE
                    and -_HUGE < link_pos[i, 2] < _HUGE
                    and -_HUGE < link_vel[i, 0] < _HUGE
                    and -_HUGE < link_vel[i, 1] < _HUGE
                    and -_HUGE < link_vel[i, 2] < _HUGE):
                diverged = 1.0
                break

    quad_pos[0] = qpx
    quad_pos[1] = qpy
    quad_pos[2] = qpz
    quad_vel[0] = qvx
    quad_vel[1] = qvy
    quad_vel[2] = qvz

    free(start)
    free(contacted)
    _free_scratch(&scratch)

    out[_o_contact] = contact
    out[_o_max_violation] = max_violation / seg_len
    out[_o_min_radial] = min_radial
    out[_o_diverged] = diverged
    out[_o_axis_fallback] = axis_fallback


def project_chain(double[:, ::1] link_pos, double[::1] inv_mass,
                  double[::1] anchor, double seg_len, int iterations):
    """Distance-only projection; see the reference module for the contract."""
    cdef int n_pts = inv_mass.shape[0]
    cdef int n_seg = n_pts - 1
    cdef int s, it
    cdef double dx, dy, dz, err
    cdef double max_violation = 0.0
    cdef ProjScratch scratch
    _alloc_scratch(&scratch, n_seg)

    link_pos[0, 0] = anchor[0]
    link_pos[0, 1] = anchor[1]
    link_pos[0, 2] = anchor[2]

    for it in range(iterations):
        _project_pass(link_pos, inv_mass, n_seg, seg_len, &scratch)
        max_violation = 0.0
        for s in range(n_seg):
            dx = link_pos[s + 1, 0] - link_pos[s, 0]
            dy = link_pos[s + 1, 1] - link_pos[s, 1]
            dz = link_pos[s + 1, 2] - link_pos[s, 2]
            err = fabs(sqrt(dx * dx + dy * dy + dz * dz) - seg_len)
            if err > max_violation:
                max_violation = err
        if max_violation <= 1e-12:
            break

    _free_scratch(&scratch)
    return max_violation
