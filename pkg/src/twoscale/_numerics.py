"""Compiled inner loops: hat-function weights against the regularized kernel
and the Gauss-Seidel sweeps.

Every quadrature rule used here has positive weights and every radial
integral is clipped at zero, so assembled off-diagonal weights are
nonnegative by construction.
"""

import math

import numpy as np
from numba import njit


def _gauss_unit(n):
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


GL4_X, GL4_W = _gauss_unit(4)
GL8_X, GL8_W = _gauss_unit(8)
GL16_X, GL16_W = _gauss_unit(16)

HALF_PI = 0.5 * math.pi


@njit(cache=True, nogil=True)
def powint(a, c, q):
    # int_a^c t^(q-1) dt, 0 < a <= c
    if c <= a:
        return 0.0
    L = math.log(c / a)
    x = q * L
    if abs(x) > 0.5:
        return (c**q - a**q) / q
    if abs(x) > 1e-8:
        rel = math.expm1(x) / x
    else:
        rel = 1.0 + 0.5 * x + x * x / 6.0
    return a**q * L * rel


@njit(cache=True, nogil=True)
def radial_weights(rn, rf, b, c0, gam, nu, s, d):
    """Return ``(Wn, Wf)``: integrals of the two linear hats along a chord.

    ``Wn = int_rn^rf (rf - t)/(rf - rn) t^(d-1) K_b(t) dt`` and ``Wf`` the
    complementary hat.
    """
    delta = rf - rn
    if delta <= 0.0:
        return 0.0, 0.0
    wn = 0.0
    wf = 0.0
    hi = min(rf, b)
    if rn < hi:
        lo = rn
        span = hi - lo
        for k in range(4):
            t = lo + span * GL4_X[k]
            g = c0 + gam * t * t + nu * t * t * t
            if d == 2:
                g *= t
            g *= span * GL4_W[k]
            wn += (rf - t) * g
            wf += (t - rn) * g
    lo = max(rn, b)
    if lo < rf:
        if rf <= 1.5 * lo:
            span = rf - lo
            for k in range(8):
                t = lo + span * GL8_X[k]
                g = t ** (-1.0 - 2.0 * s) * span * GL8_W[k]
                wn += (rf - t) * g
                wf += (t - rn) * g
        else:
            i0 = powint(lo, rf, -2.0 * s)
            i1 = powint(lo, rf, 1.0 - 2.0 * s)
            wn += max(rf * i0 - i1, 0.0)
            wf += max(i1 - rn * i0, 0.0)
    wn /= delta
    wf /= delta
    return max(wn, 0.0), max(wf, 0.0)


@njit(cache=True, nogil=True)
def inner_moment(b, c0, gam, nu, d):
    # int_0^b t^(d-1) K_b(t) dt
    return c0 * b**d / d + gam * b ** (d + 2) / (d + 2) + nu * b ** (d + 3) / (d + 3)


@njit(cache=True, nogil=True)
def kernel_params(b, s, d):
    ds = d + 2.0 * s
    gam = -(4.0 + d) * ds * (3.0 + ds) / (4.0 * (1.0 - s)) * b ** (-ds - 2.0)
    nu = (5.0 + d) * ds * (2.0 + ds) / (6.0 * (1.0 - s)) * b ** (-ds - 3.0)
    c0 = b ** (-ds) - gam * b * b - nu * b * b * b
    return c0, gam, nu


# ---------------------------------------------------------------------------
# 1D rows


@njit(cache=True, nogil=True)
def row_1d(x, iz, b, s, eta, out):
    """Accumulate ``int phi_y K_b(|x - x_iz|) eta dx`` over all elements into ``out``."""
    c0, gam, nu = kernel_params(b, s, 1)
    z = x[iz]
    for j in range(x.size - 1):
        if j >= iz:
            rn = x[j] - z
            rf = x[j + 1] - z
            near, far = j, j + 1
        else:
            rn = z - x[j + 1]
            rf = z - x[j]
            near, far = j + 1, j
        wn, wf = radial_weights(rn, rf, b, c0, gam, nu, s, 1)
        out[near] += eta * wn
        out[far] += eta * wf


@njit(cache=True, nogil=True)
def rows_1d(x, rows, radii, s, eta, A):
    for k in range(rows.size):
        row_1d(x, rows[k], radii[k], s, eta, A[k])


# ---------------------------------------------------------------------------
# 2D rows: polar integration about the row vertex


@njit(cache=True, nogil=True)
def _wrap(a):
    while a > math.pi:
        a -= 2.0 * math.pi
    while a <= -math.pi:
        a += 2.0 * math.pi
    return a


@njit(cache=True, nogil=True)
def eta_series(theta, ca, cb):
    c2 = math.cos(2.0 * theta)
    s2 = math.sin(2.0 * theta)
    ck = 1.0
    sk = 0.0
    val = 0.0
    for k in range(ca.size):
        val += ca[k] * ck + cb[k] * sk
        ck, sk = ck * c2 - sk * s2, sk * c2 + ck * s2
    return val


@njit(cache=True, nogil=True)
def _line(ux, uy, wx, wy):
    # unit normal (nx, ny) and distance p >= 0 of the line through u, w (origin = row vertex)
    ex = wx - ux
    ey = wy - uy
    L = math.hypot(ex, ey)
    nx = -ey / L
    ny = ex / L
    p = nx * ux + ny * uy
    if p < 0.0:
        nx = -nx
        ny = -ny
        p = -p
    return nx, ny, p


@njit(cache=True, nogil=True)
def _polar_piece(t1, t2, nxa, nya, pa, nxb, nyb, pb, near_is_a, vertex_mode,
                 lam0, gradx, grady, b, c0, gam, nu, s, ca, cb, qx, qw, acc):
    width = t2 - t1
    for q in range(qx.size):
        th = t1 + width * qx[q]
        ct = math.cos(th)
        st = math.sin(th)
        rb = pb / (nxb * ct + nyb * st)
        if vertex_mode:
            rn = 0.0
            rf = rb
        else:
            ra = pa / (nxa * ct + nya * st)
            if near_is_a:
                rn = ra
                rf = rb
            else:
                rn = rb
                rf = ra
        wn, wf = radial_weights(rn, rf, b, c0, gam, nu, s, 2)
        e = eta_series(th, ca, cb) * width * qw[q]
        for i in range(3):
            g = gradx[i] * ct + grady[i] * st
            acc[i] += e * ((lam0[i] + rn * g) * wn + (lam0[i] + rf * g) * wf)


@njit(cache=True, nogil=True)
def _pole_margin(t, nx, ny):
    tn = math.atan2(ny, nx)
    return HALF_PI - abs(_wrap(t - tn))


@njit(cache=True, nogil=True)
def _subrange(t1, t2, nxa, nya, pa, nxb, nyb, pb, vertex_mode, lam0, gradx, grady,
              b, c0, gam, nu, s, ca, cb, qx, qw, cap, acc):
    if t2 - t1 <= 1e-15:
        return
    mid = 0.5 * (t1 + t2)
    cm = math.cos(mid)
    sm = math.sin(mid)
    near_is_a = True
    if not vertex_mode:
        ra = pa / (nxa * cm + nya * sm)
        rb = pb / (nxb * cm + nyb * sm)
        near_is_a = ra <= rb
    # breakpoints: where either chord end crosses the splice radius b
    brk = np.empty(6)
    nb = 0
    brk[nb] = t1
    nb += 1
    for line in range(2):
        if line == 0:
            if vertex_mode:
                continue
            nx, ny, p = nxa, nya, pa
        else:
            nx, ny, p = nxb, nyb, pb
        if p < b:
            tn = math.atan2(ny, nx)
            da = math.acos(p / b)
            for sgn in (-1.0, 1.0):
                t = mid + _wrap(tn + sgn * da - mid)
                if t1 < t < t2:
                    brk[nb] = t
                    nb += 1
    brk[nb] = t2
    nb += 1
    brk[:nb].sort()
    stack_lo = np.empty(256)
    stack_hi = np.empty(256)
    for k in range(nb - 1):
        lo0 = brk[k]
        hi0 = brk[k + 1]
        if hi0 - lo0 <= 1e-15:
            continue
        top = 0
        stack_lo[0] = lo0
        stack_hi[0] = hi0
        top = 1
        while top > 0:
            top -= 1
            lo = stack_lo[top]
            hi = stack_hi[top]
            margin = min(_pole_margin(lo, nxb, nyb), _pole_margin(hi, nxb, nyb))
            if not vertex_mode:
                margin = min(margin, _pole_margin(lo, nxa, nya), _pole_margin(hi, nxa, nya))
            if (hi - lo > cap or hi - lo > 0.5 * margin) and top < 254 and hi - lo > 1e-14:
                m = 0.5 * (lo + hi)
                stack_lo[top] = lo
                stack_hi[top] = m
                stack_lo[top + 1] = m
                stack_hi[top + 1] = hi
                top += 2
            else:
                _polar_piece(lo, hi, nxa, nya, pa, nxb, nyb, pb, near_is_a, vertex_mode,
                             lam0, gradx, grady, b, c0, gam, nu, s, ca, cb, qx, qw, acc)


@njit(cache=True, nogil=True)
def triangle_polar(zx, zy, P, local_z, b, s, ca, cb, qx, qw, cap, acc):
    """Integrate the three hats of triangle ``P`` against ``K_b(|x - z|) eta``.

    ``local_z`` is the local index of ``z`` in ``P`` or -1 when ``z`` is not
    a vertex.  Results are added to ``acc[0:3]``.
    """
    c0, gam, nu = kernel_params(b, s, 2)
    vx = np.empty(3)
    vy = np.empty(3)
    for j in range(3):
        vx[j] = P[j, 0] - zx
        vy[j] = P[j, 1] - zy
    # barycentric coordinates as affine functions of the offset from z
    det = (vx[1] - vx[0]) * (vy[2] - vy[0]) - (vy[1] - vy[0]) * (vx[2] - vx[0])
    gradx = np.empty(3)
    grady = np.empty(3)
    lam0 = np.empty(3)
    for i in range(3):
        j = (i + 1) % 3
        k = (i + 2) % 3
        gradx[i] = (vy[j] - vy[k]) / det
        grady[i] = (vx[k] - vx[j]) / det
        lam0[i] = (vx[j] * vy[k] - vx[k] * vy[j]) / det
    if local_z >= 0:
        i1 = (local_z + 1) % 3
        i2 = (local_z + 2) % 3
        a1 = math.atan2(vy[i1], vx[i1])
        span = _wrap(math.atan2(vy[i2], vx[i2]) - a1)
        t1 = a1 + min(span, 0.0)
        t2 = a1 + max(span, 0.0)
        nx, ny, p = _line(vx[i1], vy[i1], vx[i2], vy[i2])
        _subrange(t1, t2, 0.0, 0.0, 0.0, nx, ny, p, True, lam0, gradx, grady,
                  b, c0, gam, nu, s, ca, cb, qx, qw, cap, acc)
        return
    a0 = math.atan2(vy[0], vx[0])
    ang = np.empty(3)
    for j in range(3):
        ang[j] = a0 + _wrap(math.atan2(vy[j], vx[j]) - a0)
    order = np.argsort(ang)
    iA = order[0]
    iM = order[1]
    iC = order[2]
    nAC_x, nAC_y, pAC = _line(vx[iA], vy[iA], vx[iC], vy[iC])
    nAM_x, nAM_y, pAM = _line(vx[iA], vy[iA], vx[iM], vy[iM])
    nMC_x, nMC_y, pMC = _line(vx[iM], vy[iM], vx[iC], vy[iC])
    _subrange(ang[iA], ang[iM], nAC_x, nAC_y, pAC, nAM_x, nAM_y, pAM, False, lam0, gradx,
              grady, b, c0, gam, nu, s, ca, cb, qx, qw, cap, acc)
    _subrange(ang[iM], ang[iC], nAC_x, nAC_y, pAC, nMC_x, nMC_y, pMC, False, lam0, gradx,
              grady, b, c0, gam, nu, s, ca, cb, qx, qw, cap, acc)


@njit(cache=True, nogil=True)
def row_2d(V, E, iz, b, s, ca, cb, qx, qw, out):
    cap = math.pi / (4.0 * ca.size)
    zx = V[iz, 0]
    zy = V[iz, 1]
    acc = np.empty(3)
    P = np.empty((3, 2))
    for t in range(E.shape[0]):
        local = -1
        for j in range(3):
            P[j, 0] = V[E[t, j], 0]
            P[j, 1] = V[E[t, j], 1]
            if E[t, j] == iz:
                local = j
        acc[:] = 0.0
        triangle_polar(zx, zy, P, local, b, s, ca, cb, qx, qw, cap, acc)
        for j in range(3):
            out[E[t, j]] += acc[j]


@njit(cache=True, nogil=True)
def rows_2d(V, E, rows, radii, s, ca, cb, qx, qw, A):
    for k in range(rows.size):
        row_2d(V, E, rows[k], radii[k], s, ca, cb, qx, qw, A[k])


# ---------------------------------------------------------------------------
# sweeps


@njit(cache=True, nogil=True)
def gs_sweep(L, f, u, sweeps):
    n = u.size
    for _ in range(sweeps):
        for i in range(n):
            acc = f[i]
            row = L[i]
            for j in range(n):
                if j != i:
                    acc -= row[j] * u[j]
            u[i] = acc / row[i]


@njit(cache=True, nogil=True)
def pgs_sweep(L, f, psi, u, sweeps):
    n = u.size
    for _ in range(sweeps):
        for i in range(n):
            acc = f[i]
            row = L[i]
            for j in range(n):
                if j != i:
                    acc -= row[j] * u[j]
            v = acc / row[i]
            u[i] = v if v > psi[i] else psi[i]
