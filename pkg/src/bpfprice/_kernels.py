"""Compiled right-hand sides and RK4 loops.

Everything here works on raw float64 arrays; the public modules wrap these
with validation and the ``Field`` types.  Status codes returned by the
advance loops:

    0  ok
    1  non-finite value
    2  hard invariant breached (u^2 - h^2 above tolerance / negative density)
    3  support guard tripped (BPF only)
    4  price ODE singular, h(p) too small (sharp interface only)
"""

import numpy as np
from numba import njit

PAPER_CENTRAL = 0
FLUX_CONSERVATIVE = 1

OK = 0
NONFINITE = 1
INVARIANT = 2
GUARD = 3
SINGULAR = 4


@njit(cache=True)
def laplacian_mirror(v, D, dx, out):
    n = v.size
    c = D / (dx * dx)
    out[0] = 2.0 * c * (v[1] - v[0])
    for i in range(1, n - 1):
        out[i] = c * (v[i + 1] - 2.0 * v[i] + v[i - 1])
    out[n - 1] = 2.0 * c * (v[n - 2] - v[n - 1])


@njit(cache=True)
def hu_rhs_paper(h, u, D, eps, dx, dh, du):
    n = h.size
    cd = D / (dx * dx)
    ca = 1.0 / (4.0 * eps * dx)
    laplacian_mirror(h, D, dx, dh)
    for i in range(1, n - 1):
        qp = h[i + 1] * h[i + 1] - u[i + 1] * u[i + 1]
        qm = h[i - 1] * h[i - 1] - u[i - 1] * u[i - 1]
        du[i] = cd * (u[i + 1] - 2.0 * u[i] + u[i - 1]) + ca * (qp - qm)
    # ghosts from D u_x + q / (2 eps) = 0, centred at the boundary node
    q0 = h[0] * h[0] - u[0] * u[0]
    ug = u[1] + dx * q0 / (eps * D)
    qg = h[1] * h[1] - ug * ug
    q1 = h[1] * h[1] - u[1] * u[1]
    du[0] = cd * (u[1] - 2.0 * u[0] + ug) + ca * (q1 - qg)
    qn = h[n - 1] * h[n - 1] - u[n - 1] * u[n - 1]
    ug = u[n - 2] - dx * qn / (eps * D)
    qg = h[n - 2] * h[n - 2] - ug * ug
    qm = h[n - 2] * h[n - 2] - u[n - 2] * u[n - 2]
    du[n - 1] = cd * (ug - 2.0 * u[n - 1] + u[n - 2]) + ca * (qg - qm)


@njit(cache=True)
def hu_rhs_conservative(h, u, D, eps, dx, dh, du):
    n = h.size
    laplacian_mirror(h, D, dx, dh)
    inv = 1.0 / dx
    ca = 1.0 / (4.0 * eps)
    q_prev = h[0] * h[0] - u[0] * u[0]
    flux_left = 0.0
    for i in range(n - 1):
        q_next = h[i + 1] * h[i + 1] - u[i + 1] * u[i + 1]
        flux = D * (u[i + 1] - u[i]) * inv + ca * (q_next + q_prev)
        if i == 0:
            du[0] = 2.0 * flux * inv
        else:
            du[i] = (flux - flux_left) * inv
        flux_left = flux
        q_prev = q_next
    du[n - 1] = -2.0 * flux_left * inv


@njit(cache=True)
def hu_rhs(h, u, D, eps, dx, scheme, dh, du):
    if scheme == PAPER_CENTRAL:
        hu_rhs_paper(h, u, D, eps, dx, dh, du)
    else:
        hu_rhs_conservative(h, u, D, eps, dx, dh, du)


@njit(cache=True)
def hu_advance(h0, u0, D, eps, dx, scheme, freeze_h, dt, nsteps, excess_tol):
    """RK4 for (h, u).

    Returns (h, u, status, steps_done, worst_excess) where worst_excess is the
    largest (u^2 - h^2) / max(h^2) seen at any node after any step.
    """
    n = h0.size
    h = h0.copy()
    u = u0.copy()
    k1h = np.empty(n); k2h = np.empty(n); k3h = np.empty(n); k4h = np.empty(n)
    k1u = np.empty(n); k2u = np.empty(n); k3u = np.empty(n); k4u = np.empty(n)
    th = np.empty(n); tu = np.empty(n)
    worst = -np.inf
    for step in range(nsteps):
        hu_rhs(h, u, D, eps, dx, scheme, k1h, k1u)
        for i in range(n):
            th[i] = h[i] + 0.5 * dt * k1h[i]
            tu[i] = u[i] + 0.5 * dt * k1u[i]
        if freeze_h:
            th[:] = h
        hu_rhs(th, tu, D, eps, dx, scheme, k2h, k2u)
        for i in range(n):
            th[i] = h[i] + 0.5 * dt * k2h[i]
            tu[i] = u[i] + 0.5 * dt * k2u[i]
        if freeze_h:
            th[:] = h
        hu_rhs(th, tu, D, eps, dx, scheme, k3h, k3u)
        for i in range(n):
            th[i] = h[i] + dt * k3h[i]
            tu[i] = u[i] + dt * k3u[i]
        if freeze_h:
            th[:] = h
        hu_rhs(th, tu, D, eps, dx, scheme, k4h, k4u)
        hmax2 = 0.0
        finite = True
        for i in range(n):
            u[i] += dt * (k1u[i] + 2.0 * k2u[i] + 2.0 * k3u[i] + k4u[i]) / 6.0
            if not freeze_h:
                h[i] += dt * (k1h[i] + 2.0 * k2h[i] + 2.0 * k3h[i] + k4h[i]) / 6.0
            if not (np.isfinite(u[i]) and np.isfinite(h[i])):
                finite = False
            if h[i] * h[i] > hmax2:
                hmax2 = h[i] * h[i]
        if not finite:
            return h, u, NONFINITE, step + 1, worst
        scale = hmax2 if hmax2 > 0.0 else 1.0
        for i in range(n):
            e = (u[i] * u[i] - h[i] * h[i]) / scale
            if e > worst:
                worst = e
        if worst > excess_tol:
            return h, u, INVARIANT, step + 1, worst
    return h, u, OK, nsteps, worst


@njit(cache=True)
def bpf_rhs(f, g, D, k, m, dx, df, dg, work):
    """Kinetic model: diffusion + k * (shifted gain - loss) of the product fg."""
    n = f.size
    laplacian_mirror(f, D, dx, df)
    laplacian_mirror(g, D, dx, dg)
    for i in range(n):
        work[i] = k * f[i] * g[i]
    for i in range(n):
        df[i] -= work[i]
        dg[i] -= work[i]
        if i + m < n:
            df[i] += work[i + m]
        if i - m >= 0:
            dg[i] += work[i - m]


@njit(cache=True)
def guard_tripped(f, g, m, tol):
    n = f.size
    peak = 0.0
    for i in range(n):
        p = f[i] * g[i]
        if p > peak:
            peak = p
    if peak <= 0.0:
        return False
    band = 0.0
    for i in range(min(m + 1, n)):
        p = f[i] * g[i]
        if p > band:
            band = p
        p = f[n - 1 - i] * g[n - 1 - i]
        if p > band:
            band = p
    return band > tol * peak


@njit(cache=True)
def bpf_advance(f0, g0, D, k, m, dx, dt, nsteps, neg_tol, guard, guard_tol):
    """RK4 for the kinetic system; returns (f, g, status, steps_done)."""
    n = f0.size
    f = f0.copy()
    g = g0.copy()
    k1f = np.empty(n); k2f = np.empty(n); k3f = np.empty(n); k4f = np.empty(n)
    k1g = np.empty(n); k2g = np.empty(n); k3g = np.empty(n); k4g = np.empty(n)
    tf = np.empty(n); tg = np.empty(n); work = np.empty(n)
    for step in range(nsteps):
        if guard and guard_tripped(f, g, m, guard_tol):
            return f, g, GUARD, step
        bpf_rhs(f, g, D, k, m, dx, k1f, k1g, work)
        for i in range(n):
            tf[i] = f[i] + 0.5 * dt * k1f[i]
            tg[i] = g[i] + 0.5 * dt * k1g[i]
        bpf_rhs(tf, tg, D, k, m, dx, k2f, k2g, work)
        for i in range(n):
            tf[i] = f[i] + 0.5 * dt * k2f[i]
            tg[i] = g[i] + 0.5 * dt * k2g[i]
        bpf_rhs(tf, tg, D, k, m, dx, k3f, k3g, work)
        for i in range(n):
            tf[i] = f[i] + dt * k3f[i]
            tg[i] = g[i] + dt * k3g[i]
        bpf_rhs(tf, tg, D, k, m, dx, k4f, k4g, work)
        status = OK
        for i in range(n):
            f[i] += dt * (k1f[i] + 2.0 * k2f[i] + 2.0 * k3f[i] + k4f[i]) / 6.0
            g[i] += dt * (k1g[i] + 2.0 * k2g[i] + 2.0 * k3g[i] + k4g[i]) / 6.0
            if not (np.isfinite(f[i]) and np.isfinite(g[i])):
                status = NONFINITE
            elif status == OK and (f[i] < -neg_tol or g[i] < -neg_tol):
                status = INVARIANT
        if status != OK:
            return f, g, status, step + 1
    if guard and guard_tripped(f, g, m, guard_tol):
        return f, g, GUARD, nsteps
    return f, g, OK, nsteps


@njit(cache=True)
def heat_advance(h0, D, dx, dt, nsteps):
    n = h0.size
    h = h0.copy()
    k1 = np.empty(n); k2 = np.empty(n); k3 = np.empty(n); k4 = np.empty(n)
    t = np.empty(n)
    for step in range(nsteps):
        laplacian_mirror(h, D, dx, k1)
        for i in range(n):
            t[i] = h[i] + 0.5 * dt * k1[i]
        laplacian_mirror(t, D, dx, k2)
        for i in range(n):
            t[i] = h[i] + 0.5 * dt * k2[i]
        laplacian_mirror(t, D, dx, k3)
        for i in range(n):
            t[i] = h[i] + dt * k3[i]
        laplacian_mirror(t, D, dx, k4)
        for i in range(n):
            h[i] += dt * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) / 6.0
            if not np.isfinite(h[i]):
                return h, NONFINITE, step + 1
    return h, OK, nsteps


@njit(cache=True)
def price_velocity(h, p, D, x_min, dx, hmin):
    """-D h_x(p) / h(p) with linear interpolation of h and its centred slope."""
    n = h.size
    s = (p - x_min) / dx
    j = int(np.floor(s))
    if j < 0:
        j = 0
    if j > n - 2:
        j = n - 2
    theta = s - j
    hp = (1.0 - theta) * h[j] + theta * h[j + 1]
    if hp < hmin:
        return np.nan
    # central_diff at nodes j and j + 1 (one-sided at the ends)
    if j == 0:
        dj = (4.0 * (h[1] - h[0]) - (h[2] - h[0])) / (2.0 * dx)
    else:
        dj = (h[j + 1] - h[j - 1]) / (2.0 * dx)
    if j + 1 == n - 1:
        dj1 = ((h[n - 3] - h[n - 1]) - 4.0 * (h[n - 2] - h[n - 1])) / (2.0 * dx)
    else:
        dj1 = (h[j + 2] - h[j]) / (2.0 * dx)
    hx = (1.0 - theta) * dj + theta * dj1
    return -D * hx / hp


@njit(cache=True)
def sharp_advance(h0, p0, D, x_min, dx, dt, nsteps, hmin):
    """Coupled RK4 for the Neumann heat flow of h and the price ODE."""
    n = h0.size
    h = h0.copy()
    p = p0
    k1 = np.empty(n); k2 = np.empty(n); k3 = np.empty(n); k4 = np.empty(n)
    t = np.empty(n)
    for step in range(nsteps):
        laplacian_mirror(h, D, dx, k1)
        v1 = price_velocity(h, p, D, x_min, dx, hmin)
        for i in range(n):
            t[i] = h[i] + 0.5 * dt * k1[i]
        laplacian_mirror(t, D, dx, k2)
        v2 = price_velocity(t, p + 0.5 * dt * v1, D, x_min, dx, hmin)
        for i in range(n):
            t[i] = h[i] + 0.5 * dt * k2[i]
        laplacian_mirror(t, D, dx, k3)
        v3 = price_velocity(t, p + 0.5 * dt * v2, D, x_min, dx, hmin)
        for i in range(n):
            t[i] = h[i] + dt * k3[i]
        laplacian_mirror(t, D, dx, k4)
        v4 = price_velocity(t, p + dt * v3, D, x_min, dx, hmin)
        if not (np.isfinite(v1) and np.isfinite(v2) and np.isfinite(v3) and np.isfinite(v4)):
            return h, p, SINGULAR, step
        p += dt * (v1 + 2.0 * v2 + 2.0 * v3 + v4) / 6.0
        for i in range(n):
            h[i] += dt * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) / 6.0
            if not np.isfinite(h[i]):
                return h, p, NONFINITE, step + 1
    return h, p, OK, nsteps
