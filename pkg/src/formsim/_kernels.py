"""Hot inner-loop kernels for the closed-loop integrator.

Everything here is written in nopython-compatible scalar style and gets
compiled by numba when acceleration is on (see accel.py). The plain numpy
engine path in engine.py computes the same quantities through the public
module functions; tests pin the two paths together. Status codes instead
of exceptions: 0 ok, 1 rank deficient, 2 non-finite state, 3 singular
desired speed.
"""

import math

import numpy as np

from .accel import maybe_jit

STATUS_OK = 0
STATUS_RANK = 1
STATUS_NONFINITE = 2
STATUS_SINGULAR = 3


@maybe_jit
def _chol_factor(G):
    m = G.shape[0]
    L = np.zeros((m, m))
    maxd = 0.0
    for i in range(m):
        if G[i, i] > maxd:
            maxd = G[i, i]
    for j in range(m):
        acc = G[j, j]
        for k in range(j):
            acc -= L[j, k] * L[j, k]
        if acc <= 1e-12 * maxd:
            return L, False
        L[j, j] = math.sqrt(acc)
        for i in range(j + 1, m):
            s = G[i, j]
            for k in range(j):
                s -= L[i, k] * L[j, k]
            L[i, j] = s / L[j, j]
    return L, True


@maybe_jit
def _chol_solve(L, b):
    m = L.shape[0]
    x = np.empty(m)
    for i in range(m):
        s = b[i]
        for k in range(i):
            s -= L[i, k] * x[k]
        x[i] = s / L[i, i]
    for i in range(m - 1, -1, -1):
        s = x[i]
        for k in range(i + 1, m):
            s -= L[k, i] * x[k]
        x[i] = s / L[i, i]
    return x


@maybe_jit
def _twist_hermite(tab_t, tab_v, tab_r, tlen, t):
    """Cubic Hermite twist and rate from a sampled table (clamped ends)."""
    if t <= tab_t[0]:
        return tab_v[0, 0], tab_v[0, 1], 0.0, 0.0
    if t >= tab_t[tlen - 1]:
        return tab_v[tlen - 1, 0], tab_v[tlen - 1, 1], 0.0, 0.0
    lo = 0
    hi = tlen - 1
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if tab_t[mid] <= t:
            lo = mid
        else:
            hi = mid
    k = lo
    h = tab_t[k + 1] - tab_t[k]
    u = (t - tab_t[k]) / h
    h00 = (1 + 2 * u) * (1 - u) ** 2
    h10 = u * (1 - u) ** 2
    h01 = u * u * (3 - 2 * u)
    h11 = u * u * (u - 1)
    d00 = 6 * u * (u - 1)
    d10 = (1 - u) * (1 - 3 * u)
    d01 = -d00
    d11 = u * (3 * u - 2)
    v = (h00 * tab_v[k, 0] + h10 * h * tab_r[k, 0]
         + h01 * tab_v[k + 1, 0] + h11 * h * tab_r[k + 1, 0])
    w = (h00 * tab_v[k, 1] + h10 * h * tab_r[k, 1]
         + h01 * tab_v[k + 1, 1] + h11 * h * tab_r[k + 1, 1])
    vd = (d00 * tab_v[k, 0] + d10 * h * tab_r[k, 0]
          + d01 * tab_v[k + 1, 0] + d11 * h * tab_r[k + 1, 0]) / h
    wd = (d00 * tab_v[k, 1] + d10 * h * tab_r[k, 1]
          + d01 * tab_v[k + 1, 1] + d11 * h * tab_r[k + 1, 1]) / h
    return v, w, vd, wd


@maybe_jit
def _desired_one(kind, qd0r, tw0r, tab_t, tab_v, tab_r, tlen, grid_h,
                 grid_q, glen, t, out_q, out_tw, out_acc):
    """Fill one robot's desired pose, twist, and twist rate at time t."""
    if kind == 0:
        v = tw0r[0]
        w = tw0r[1]
        th0 = qd0r[2]
        th = th0 + w * t
        if abs(w) > 1e-12:
            rad = v / w
            out_q[0] = qd0r[0] + rad * (math.sin(th) - math.sin(th0))
            out_q[1] = qd0r[1] - rad * (math.cos(th) - math.cos(th0))
        else:
            out_q[0] = qd0r[0] + v * t * math.cos(th0)
            out_q[1] = qd0r[1] + v * t * math.sin(th0)
        out_q[2] = th
        out_tw[0] = v
        out_tw[1] = w
        out_acc[0] = 0.0
        out_acc[1] = 0.0
        return STATUS_OK

    v, w, vd, wd = _twist_hermite(tab_t, tab_v, tab_r, tlen, t)
    if abs(v) < 1e-6:
        return STATUS_SINGULAR
    out_tw[0] = v
    out_tw[1] = w
    out_acc[0] = vd
    out_acc[1] = wd
    span = tab_t[tlen - 1]
    tc = t
    if tc < 0.0:
        tc = 0.0
    if tc > span:
        tc = span
    k = int(tc / grid_h)
    if k > glen - 2:
        k = glen - 2
    delta = tc - k * grid_h
    x = grid_q[k, 0]
    y = grid_q[k, 1]
    th = grid_q[k, 2]
    if delta > 0.0:
        t0 = k * grid_h
        v1, w1, _, _ = _twist_hermite(tab_t, tab_v, tab_r, tlen, t0)
        v2, w2, _, _ = _twist_hermite(tab_t, tab_v, tab_r, tlen,
                                      t0 + 0.5 * delta)
        v4, w4, _, _ = _twist_hermite(tab_t, tab_v, tab_r, tlen, t0 + delta)
        k1x = v1 * math.cos(th)
        k1y = v1 * math.sin(th)
        th2 = th + 0.5 * delta * w1
        k2x = v2 * math.cos(th2)
        k2y = v2 * math.sin(th2)
        th3 = th + 0.5 * delta * w2
        k3x = v2 * math.cos(th3)
        k3y = v2 * math.sin(th3)
        th4 = th + delta * w2
        k4x = v4 * math.cos(th4)
        k4y = v4 * math.sin(th4)
        x += (delta / 6.0) * (k1x + 2 * k2x + 2 * k3x + k4x)
        y += (delta / 6.0) * (k1y + 2 * k2y + 2 * k3y + k4y)
        th += (delta / 6.0) * (w1 + 2 * w2 + 2 * w2 + w4)
    out_q[0] = x
    out_q[1] = y
    out_q[2] = th
    return STATUS_OK


@maybe_jit
def _fill_desired(n, kinds, qd0, tw0, tab_t, tab_v, tab_r, tab_len,
                  grid_h, grid_q, grid_len, t, qd, etad, etadd):
    for r in range(n):
        st = _desired_one(kinds[r], qd0[r], tw0[r], tab_t[r], tab_v[r],
                          tab_r[r], tab_len[r], grid_h[r], grid_q[r],
                          grid_len[r], t, qd[r], etad[r], etadd[r])
        if st != STATUS_OK:
            return st
    return STATUS_OK


@maybe_jit
def _stack_errors(n, edges, poses, qd):
    z = np.empty(3 * n)
    ex = qd[0, 0] - poses[0, 0]
    ey = qd[0, 1] - poses[0, 1]
    c1 = math.cos(poses[0, 2])
    s1 = math.sin(poses[0, 2])
    z[0] = c1 * ex + s1 * ey
    z[1] = -s1 * ex + c1 * ey
    z[2] = qd[0, 2] - poses[0, 2]
    for k in range(edges.shape[0]):
        i = edges[k, 0]
        j = edges[k, 1]
        r = 3 * (k + 1)
        z[r] = (qd[i, 0] - poses[i, 0]) - (qd[j, 0] - poses[j, 0])
        z[r + 1] = (qd[i, 1] - poses[i, 1]) - (qd[j, 1] - poses[j, 1])
        z[r + 2] = (qd[i, 2] - poses[i, 2]) - (qd[j, 2] - poses[j, 2])
    return z


@maybe_jit
def _coupling(n, edges, poses):
    A = np.zeros((3 * n, 2 * n))
    A[0, 0] = -1.0
    A[2, 1] = -1.0
    for k in range(edges.shape[0]):
        i = edges[k, 0]
        j = edges[k, 1]
        r = 3 * (k + 1)
        A[r, 2 * i] = -math.cos(poses[i, 2])
        A[r + 1, 2 * i] = -math.sin(poses[i, 2])
        A[r + 2, 2 * i + 1] = -1.0
        A[r, 2 * j] = math.cos(poses[j, 2])
        A[r + 1, 2 * j] = math.sin(poses[j, 2])
        A[r + 2, 2 * j + 1] = 1.0
    return A


@maybe_jit
def _coupling_rate(n, edges, poses, eta):
    Adot = np.zeros((3 * n, 2 * n))
    for k in range(edges.shape[0]):
        i = edges[k, 0]
        j = edges[k, 1]
        r = 3 * (k + 1)
        wi = eta[2 * i + 1]
        wj = eta[2 * j + 1]
        Adot[r, 2 * i] = wi * math.sin(poses[i, 2])
        Adot[r + 1, 2 * i] = -wi * math.cos(poses[i, 2])
        Adot[r, 2 * j] = -wj * math.sin(poses[j, 2])
        Adot[r + 1, 2 * j] = wj * math.cos(poses[j, 2])
    return Adot


@maybe_jit
def _feedforward(n, edges, th1, qd, etad):
    g = np.empty((n, 3))
    for r in range(n):
        g[r, 0] = etad[r, 0] * math.cos(qd[r, 2])
        g[r, 1] = etad[r, 0] * math.sin(qd[r, 2])
        g[r, 2] = etad[r, 1]
    ff = np.empty(3 * n)
    c1 = math.cos(th1)
    s1 = math.sin(th1)
    ff[0] = c1 * g[0, 0] + s1 * g[0, 1]
    ff[1] = -s1 * g[0, 0] + c1 * g[0, 1]
    ff[2] = g[0, 2]
    for k in range(edges.shape[0]):
        i = edges[k, 0]
        j = edges[k, 1]
        r = 3 * (k + 1)
        ff[r] = g[i, 0] - g[j, 0]
        ff[r + 1] = g[i, 1] - g[j, 1]
        ff[r + 2] = g[i, 2] - g[j, 2]
    return ff, g


@maybe_jit
def _feedforward_rate(n, edges, th1, omega1, qd, etad, etadd, g, ff):
    gdot = np.empty((n, 3))
    for r in range(n):
        gdot[r, 0] = -etad[r, 1] * g[r, 1] + etadd[r, 0] * math.cos(qd[r, 2])
        gdot[r, 1] = etad[r, 1] * g[r, 0] + etadd[r, 0] * math.sin(qd[r, 2])
        gdot[r, 2] = etadd[r, 1]
    out = np.empty(3 * n)
    c1 = math.cos(th1)
    s1 = math.sin(th1)
    # omega1 * skew of the already-rotated leader block plus rotated gdot
    out[0] = omega1 * ff[1] + c1 * gdot[0, 0] + s1 * gdot[0, 1]
    out[1] = -omega1 * ff[0] - s1 * gdot[0, 0] + c1 * gdot[0, 1]
    out[2] = gdot[0, 2]
    for k in range(edges.shape[0]):
        i = edges[k, 0]
        j = edges[k, 1]
        r = 3 * (k + 1)
        out[r] = gdot[i, 0] - gdot[j, 0]
        out[r + 1] = gdot[i, 1] - gdot[j, 1]
        out[r + 2] = gdot[i, 2] - gdot[j, 2]
    return out


@maybe_jit
def _kin_rates(t, y, n, edges, gz, kinds, qd0, tw0, tab_t, tab_v, tab_r,
               tab_len, grid_h, grid_q, grid_len, dy):
    qd = np.empty((n, 3))
    etad = np.empty((n, 2))
    etadd = np.empty((n, 2))
    st = _fill_desired(n, kinds, qd0, tw0, tab_t, tab_v, tab_r, tab_len,
                       grid_h, grid_q, grid_len, t, qd, etad, etadd)
    if st != STATUS_OK:
        return st
    poses = y.reshape(n, 3)
    z = _stack_errors(n, edges, poses, qd)
    A = _coupling(n, edges, poses)
    ff, _ = _feedforward(n, edges, poses[0, 2], qd, etad)
    G = A.T @ A
    w = gz * z + ff
    L, ok = _chol_factor(G)
    if not ok:
        return STATUS_RANK
    eta = -_chol_solve(L, A.T @ w)
    for r in range(n):
        dy[3 * r] = eta[2 * r] * math.cos(poses[r, 2])
        dy[3 * r + 1] = eta[2 * r] * math.sin(poses[r, 2])
        dy[3 * r + 2] = eta[2 * r + 1]
    return STATUS_OK


@maybe_jit
def _dyn_rates(t, y, n, edges, gz, gs, ga, minv, damp, kinds, qd0, tw0,
               tab_t, tab_v, tab_r, tab_len, grid_h, grid_q, grid_len, dy):
    qd = np.empty((n, 3))
    etad = np.empty((n, 2))
    etadd = np.empty((n, 2))
    st = _fill_desired(n, kinds, qd0, tw0, tab_t, tab_v, tab_r, tab_len,
                       grid_h, grid_q, grid_len, t, qd, etad, etadd)
    if st != STATUS_OK:
        return st
    poses = y[:3 * n].reshape(n, 3)
    eta = y[3 * n:5 * n]
    phihat = y[5 * n:]
    z = _stack_errors(n, edges, poses, qd)
    A = _coupling(n, edges, poses)
    ff, g = _feedforward(n, edges, poses[0, 2], qd, etad)
    G = A.T @ A
    w = gz * z + ff
    L, ok = _chol_factor(G)
    if not ok:
        return STATUS_RANK
    etaf = -_chol_solve(L, A.T @ w)

    Adot = _coupling_rate(n, edges, poses, eta)
    Gdot = Adot.T @ A + A.T @ Adot
    zdot = A @ eta + ff
    omega1 = eta[1]
    zdot[0] += omega1 * z[1]
    zdot[1] -= omega1 * z[0]
    ffdot = _feedforward_rate(n, edges, poses[0, 2], omega1, qd, etad,
                              etadd, g, ff)
    wdot = gz * zdot + ffdot
    etafdot = -_chol_solve(L, Gdot @ etaf + Adot.T @ w + A.T @ wdot)

    Atz = A.T @ z
    for r in range(n):
        v = eta[2 * r]
        om = eta[2 * r + 1]
        th = poses[r, 2]
        dy[3 * r] = v * math.cos(th)
        dy[3 * r + 1] = v * math.sin(th)
        dy[3 * r + 2] = om
        sv = v - etaf[2 * r]
        sw = om - etaf[2 * r + 1]
        mu1 = etafdot[2 * r]
        mu2 = etafdot[2 * r + 1]
        p0 = phihat[6 * r]
        p1 = phihat[6 * r + 1]
        p2 = phihat[6 * r + 2]
        p3 = phihat[6 * r + 3]
        p4 = phihat[6 * r + 4]
        p5 = phihat[6 * r + 5]
        uf = -gs[2 * r] * sv - Atz[2 * r] + mu1 * p0 + v * p2 + om * p3
        ut = -gs[2 * r + 1] * sw - Atz[2 * r + 1] + mu2 * p1 + v * p4 + om * p5
        dy[3 * n + 2 * r] = minv[2 * r] * (
            uf - (damp[r, 0, 0] * v + damp[r, 0, 1] * om))
        dy[3 * n + 2 * r + 1] = minv[2 * r + 1] * (
            ut - (damp[r, 1, 0] * v + damp[r, 1, 1] * om))
        base = 5 * n + 6 * r
        dy[base] = -ga[6 * r] * (mu1 * sv)
        dy[base + 1] = -ga[6 * r + 1] * (mu2 * sw)
        dy[base + 2] = -ga[6 * r + 2] * (v * sv)
        dy[base + 3] = -ga[6 * r + 3] * (om * sv)
        dy[base + 4] = -ga[6 * r + 4] * (v * sw)
        dy[base + 5] = -ga[6 * r + 5] * (om * sw)
    return STATUS_OK


@maybe_jit
def advance_kinematic(y, t0, dt, steps, n, edges, gz, kinds, qd0, tw0,
                      tab_t, tab_v, tab_r, tab_len, grid_h, grid_q,
                      grid_len):
    m = y.shape[0]
    k1 = np.empty(m)
    k2 = np.empty(m)
    k3 = np.empty(m)
    k4 = np.empty(m)
    ytmp = np.empty(m)
    for s in range(steps):
        t = t0 + s * dt
        st = _kin_rates(t, y, n, edges, gz, kinds, qd0, tw0, tab_t, tab_v,
                        tab_r, tab_len, grid_h, grid_q, grid_len, k1)
        if st != STATUS_OK:
            return st, s
        for i in range(m):
            ytmp[i] = y[i] + 0.5 * dt * k1[i]
        st = _kin_rates(t + 0.5 * dt, ytmp, n, edges, gz, kinds, qd0, tw0,
                        tab_t, tab_v, tab_r, tab_len, grid_h, grid_q,
                        grid_len, k2)
        if st != STATUS_OK:
            return st, s
        for i in range(m):
            ytmp[i] = y[i] + 0.5 * dt * k2[i]
        st = _kin_rates(t + 0.5 * dt, ytmp, n, edges, gz, kinds, qd0, tw0,
                        tab_t, tab_v, tab_r, tab_len, grid_h, grid_q,
                        grid_len, k3)
        if st != STATUS_OK:
            return st, s
        for i in range(m):
            ytmp[i] = y[i] + dt * k3[i]
        st = _kin_rates(t + dt, ytmp, n, edges, gz, kinds, qd0, tw0, tab_t,
                        tab_v, tab_r, tab_len, grid_h, grid_q, grid_len, k4)
        if st != STATUS_OK:
            return st, s
        for i in range(m):
            y[i] += (dt / 6.0) * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i])
            if not math.isfinite(y[i]):
                return STATUS_NONFINITE, s
    return STATUS_OK, steps


@maybe_jit
def advance_dynamic(y, t0, dt, steps, n, edges, gz, gs, ga, minv, damp,
                    kinds, qd0, tw0, tab_t, tab_v, tab_r, tab_len, grid_h,
                    grid_q, grid_len):
    m = y.shape[0]
    k1 = np.empty(m)
    k2 = np.empty(m)
    k3 = np.empty(m)
    k4 = np.empty(m)
    ytmp = np.empty(m)
    for s in range(steps):
        t = t0 + s * dt
        st = _dyn_rates(t, y, n, edges, gz, gs, ga, minv, damp, kinds, qd0,
                        tw0, tab_t, tab_v, tab_r, tab_len, grid_h, grid_q,
                        grid_len, k1)
        if st != STATUS_OK:
            return st, s
        for i in range(m):
            ytmp[i] = y[i] + 0.5 * dt * k1[i]
        st = _dyn_rates(t + 0.5 * dt, ytmp, n, edges, gz, gs, ga, minv,
                        damp, kinds, qd0, tw0, tab_t, tab_v, tab_r, tab_len,
                        grid_h, grid_q, grid_len, k2)
        if st != STATUS_OK:
            return st, s
        for i in range(m):
            ytmp[i] = y[i] + 0.5 * dt * k2[i]
        st = _dyn_rates(t + 0.5 * dt, ytmp, n, edges, gz, gs, ga, minv,
                        damp, kinds, qd0, tw0, tab_t, tab_v, tab_r, tab_len,
                        grid_h, grid_q, grid_len, k3)
        if st != STATUS_OK:
            return st, s
        for i in range(m):
            ytmp[i] = y[i] + dt * k3[i]
        st = _dyn_rates(t + dt, ytmp, n, edges, gz, gs, ga, minv, damp,
                        kinds, qd0, tw0, tab_t, tab_v, tab_r, tab_len,
                        grid_h, grid_q, grid_len, k4)
        if st != STATUS_OK:
            return st, s
        for i in range(m):
            y[i] += (dt / 6.0) * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i])
            if not math.isfinite(y[i]):
                return STATUS_NONFINITE, s
    return STATUS_OK, steps
