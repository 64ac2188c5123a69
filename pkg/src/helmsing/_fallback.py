"""Pure-Python/numpy implementations of the hot kernels.

Selected by :mod:`helmsing._kernels` when the compiled ``_core`` extension
is unavailable (or when forced).  Every public function here has a twin
with the same signature in ``_core.pyx`` and the test-suite checks that
the two agree.  Loops over evaluation points are vectorised by regime:
the power series and Hankel expansion run on whole arrays, the continued
fractions run on a shrinking set of unconverged points.
"""

import math

import numpy as np

SERIES_MAX_X = 2.0
LIMIT_STEP = 1e-5
NEAR_INT = 1e-6
_EPS = 1e-16
_FPMIN = 1e-300
_MAXIT = 100000


def asym_min_x(nu):
    """Smallest argument at which the Hankel expansion is used for order nu."""
    return max(30.0, 2.0 * abs(nu))


def rgamma(x):
    """1/Gamma(x), zero at the poles."""
    if x <= 0.0 and x == math.floor(x):
        return 0.0
    if x > 171.0:
        return 0.0
    try:
        g = math.gamma(x)
    except OverflowError:
        return 0.0
    if g == 0.0 or math.isinf(g):
        return 0.0
    return 1.0 / g


def sinpi(a):
    r = math.fmod(a, 2.0)
    if r == 0.0 or r == 1.0 or r == -1.0:
        return 0.0
    if r == 0.5 or r == -1.5:
        return 1.0
    if r == -0.5 or r == 1.5:
        return -1.0
    return math.sin(math.pi * r)


def cospi(a):
    r = math.fmod(abs(a), 2.0)
    if r == 0.5 or r == 1.5:
        return 0.0
    if r == 0.0:
        return 1.0
    if r == 1.0:
        return -1.0
    return math.cos(math.pi * r)


def series_j(nu, x):
    """Power series for J_nu on an array of x >= 0."""
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    zero = x == 0.0
    if zero.any():
        if nu == 0.0:
            out[zero] = 1.0
        elif nu > 0.0 or nu == math.floor(nu):
            out[zero] = 0.0
        else:
            out[zero] = math.inf
    pos = ~zero
    if not pos.any():
        return out
    xp = x[pos]
    m0 = int(-nu) if (nu < 0.0 and nu == math.floor(nu)) else 0
    h = 0.5 * xp
    term = h ** (2 * m0 + nu) * (rgamma(m0 + 1.0) * rgamma(m0 + nu + 1.0))
    if m0 % 2:
        term = -term
    total = term.copy()
    q = -h * h
    for m in range(m0 + 1, m0 + 200):
        term = term * (q / (m * (m + nu)))
        total += term
        if m + nu > 0.0 and np.all(np.abs(term) <= 1e-17 * np.abs(total)):
            break
    out[pos] = total
    return out


def _limit_ratio(lam, x):
    return (cospi(lam) * series_j(lam, x) - series_j(-lam, x)) / sinpi(lam)


def series_y(nu, x):
    """Y_nu as the limit combination of J_nu and J_{-nu} (small x > 0).

    Away from integer orders the combination is evaluated directly.  At
    (or within NEAR_INT of) an integer n the symmetric quotient at n +- h
    is Richardson-extrapolated once from steps h and 2h, and a first-order
    Taylor correction carries it to nu.
    """
    n = math.floor(nu + 0.5)
    d = nu - n
    if abs(d) > NEAR_INT:
        return _limit_ratio(nu, x)
    h = LIMIT_STEP
    fp1 = _limit_ratio(n + h, x)
    fm1 = _limit_ratio(n - h, x)
    fp2 = _limit_ratio(n + 2 * h, x)
    fm2 = _limit_ratio(n - 2 * h, x)
    y = (4.0 * 0.5 * (fp1 + fm1) - 0.5 * (fp2 + fm2)) / 3.0
    if d != 0.0:
        y = y + d * (fp1 - fm1) / (2.0 * h)
    return y


def steed_jy(nu, x):
    """J_nu, Y_nu, J'_nu, Y'_nu for nu >= 0 and an array of x >= 2.

    CF1 gives J'/J at order nu, downward recurrence carries it to the
    reduced order mu, and the complex CF2 for (J' + iY')/(J + iY) fixes the
    normalisation through the Wronskian.
    """
    x = np.asarray(x, dtype=float)
    n = x.size
    nl = np.maximum(0, np.floor(nu - x + 1.5)).astype(np.int64)
    xmu = nu - nl
    xi = 1.0 / x
    xi2 = 2.0 * xi
    w = xi2 / math.pi

    # CF1, modified Lentz, on the shrinking set of unconverged points.
    h_out = np.empty(n)
    sign_out = np.empty(n)
    idx = np.arange(n)
    h = np.maximum(nu * xi, _FPMIN)
    b = xi2 * nu
    d = np.zeros(n)
    c = h.copy()
    isign = np.ones(n)
    sxi2 = xi2
    for _ in range(_MAXIT):
        b = b + sxi2
        d = b - d
        d = np.where(np.abs(d) < _FPMIN, _FPMIN, d)
        c = b - 1.0 / c
        c = np.where(np.abs(c) < _FPMIN, _FPMIN, c)
        d = 1.0 / d
        dl = c * d
        h = h * dl
        isign = np.where(d < 0.0, -isign, isign)
        done = np.abs(dl - 1.0) < _EPS
        if done.any():
            h_out[idx[done]] = h[done]
            sign_out[idx[done]] = isign[done]
            keep = ~done
            idx, h, b, d, c, isign, sxi2 = (
                idx[keep], h[keep], b[keep], d[keep], c[keep], isign[keep], sxi2[keep])
            if idx.size == 0:
                break
    else:
        raise ArithmeticError("CF1 did not converge")

    rjl = sign_out * 1e-30
    rjpl = h_out * rjl
    rjl1 = rjl.copy()
    rjp1 = rjpl.copy()
    fact = nu * xi
    for step in range(int(nl.max()) if n else 0):
        m = step < nl
        rjtemp = fact * rjl + rjpl
        fact_new = fact - xi
        rjpl = np.where(m, fact_new * rjtemp - rjl, rjpl)
        rjl = np.where(m, rjtemp, rjl)
        fact = np.where(m, fact_new, fact)
        big = np.abs(rjl) > 1e250
        if big.any():
            s = np.where(big, 1e-250, 1.0)
            rjl, rjpl, rjl1, rjp1 = rjl * s, rjpl * s, rjl1 * s, rjp1 * s
    rjl = np.where(rjl == 0.0, _EPS, rjl)
    f = rjpl / rjl

    # CF2 (Steed), complex arithmetic carried in real pairs.
    p_out = np.empty(n)
    q_out = np.empty(n)
    a = 0.25 - xmu * xmu
    p = -0.5 * xi
    q = np.ones(n)
    br = 2.0 * x
    bi = np.full(n, 2.0)
    fact = a * xi / (p * p + q * q)
    cr = br + q * fact
    ci = bi + p * fact
    den = br * br + bi * bi
    dr = br / den
    di = -bi / den
    dlr = cr * dr - ci * di
    dli = cr * di + ci * dr
    temp = p * dlr - q * dli
    q = p * dli + q * dlr
    p = temp
    idx = np.arange(n)
    for i in range(2, _MAXIT):
        a = a + 2 * (i - 1)
        bi = bi + 2.0
        dr = a * dr + br
        di = a * di + bi
        dr = np.where(np.abs(dr) + np.abs(di) < _FPMIN, _FPMIN, dr)
        fact = a / (cr * cr + ci * ci)
        cr = br + cr * fact
        ci = bi - ci * fact
        cr = np.where(np.abs(cr) + np.abs(ci) < _FPMIN, _FPMIN, cr)
        den = dr * dr + di * di
        dr = dr / den
        di = -di / den
        dlr = cr * dr - ci * di
        dli = cr * di + ci * dr
        temp = p * dlr - q * dli
        q = p * dli + q * dlr
        p = temp
        done = np.abs(dlr - 1.0) + np.abs(dli) < _EPS
        if done.any():
            p_out[idx[done]] = p[done]
            q_out[idx[done]] = q[done]
            keep = ~done
            idx, a, bi, br, dr, di, cr, ci, p, q = (
                idx[keep], a[keep], bi[keep], br[keep], dr[keep], di[keep],
                cr[keep], ci[keep], p[keep], q[keep])
            if idx.size == 0:
                break
    else:
        raise ArithmeticError("CF2 did not converge")

    p = p_out
    q = q_out
    gam = (p - f) / q
    rjmu = np.sqrt(w / ((p - f) * gam + q))
    rjmu = np.copysign(rjmu, rjl)
    rymu = rjmu * gam
    rymup = rymu * (p + q / gam)
    ry1 = xmu * xi * rymu - rymup
    fact = rjmu / rjl
    rj = rjl1 * fact
    rjp = rjp1 * fact
    for i in range(1, int(nl.max()) + 1 if n else 1):
        m = i <= nl
        rytemp = (xmu + i) * xi2 * ry1 - rymu
        rymu = np.where(m, ry1, rymu)
        ry1 = np.where(m, rytemp, ry1)
    ry = rymu
    ryp = nu * xi * rymu - ry1
    return rj, ry, rjp, ryp


def hankel_asym(nu, x):
    """J_nu, Y_nu from the large-argument Hankel expansion (any real nu)."""
    x = np.asarray(x, dtype=float)
    mu = 4.0 * nu * nu
    p = np.ones_like(x)
    q = np.zeros_like(x)
    term = np.ones_like(x)
    prev = np.full_like(x, np.inf)
    active = np.ones(x.shape, dtype=bool)
    for k in range(1, 400):
        term = term * ((mu - (2 * k - 1) ** 2) / (8.0 * k * x))
        at = np.abs(term)
        if (2 * k - 1) ** 2 > mu:
            active &= ~(at > prev)
        sgn = 1.0 if (k // 2) % 2 == 0 else -1.0
        if k % 2:
            q = np.where(active, q + sgn * term, q)
        else:
            p = np.where(active, p + sgn * term, p)
        active &= ~(at <= 1e-17 * np.maximum(np.abs(p), np.abs(q)))
        prev = at
        if not active.any():
            break
    phase = 0.5 * nu + 0.25
    cphi = cospi(phase)
    sphi = sinpi(phase)
    cx = np.cos(x)
    sx = np.sin(x)
    cchi = cx * cphi + sx * sphi
    schi = sx * cphi - cx * sphi
    amp = np.sqrt(2.0 / (math.pi * x))
    return amp * (p * cchi - q * schi), amp * (p * schi + q * cchi)


def besseljy(nu, x):
    """(J_nu(x), Y_nu(x)) for real nu and an array of x > 0."""
    x = np.asarray(x, dtype=float)
    j = np.empty_like(x)
    y = np.empty_like(x)
    small = x < SERIES_MAX_X
    large = x >= asym_min_x(nu)
    mid = ~(small | large)
    if small.any():
        j[small] = series_j(nu, x[small])
        y[small] = series_y(nu, x[small])
    if large.any():
        j[large], y[large] = hankel_asym(nu, x[large])
    if mid.any():
        anu = abs(nu)
        jm, ym, _, _ = steed_jy(anu, x[mid])
        if nu < 0.0:
            c = cospi(anu)
            s = sinpi(anu)
            jm, ym = c * jm - s * ym, s * jm + c * ym
        j[mid] = jm
        y[mid] = ym
    return j, y


def besselj(nu, x):
    """J_nu(x) for real nu and an array of x >= 0."""
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    small = x < SERIES_MAX_X
    if small.any():
        out[small] = series_j(nu, x[small])
    if (~small).any():
        out[~small] = besseljy(nu, x[~small])[0]
    return out


def planar_apply(table, f):
    """Discrete planar convolution v[i] = sum_j table[i - j] f[j].

    ``table`` holds the cell-averaged kernel on offsets -(G-1)..(G-1) along
    each axis, ``f`` is G x G.  The sum is done exactly (no transforms): for
    each row offset the Toeplitz block is applied to all matching row pairs
    with a single matrix product.
    """
    f = np.asarray(f, dtype=float)
    g = f.shape[0]
    table = np.asarray(table, dtype=float)
    out = np.zeros_like(f)
    cols = np.arange(g)
    toe = (cols[:, None] - cols[None, :]) + g - 1
    for d1 in range(-(g - 1), g):
        block = table[d1 + g - 1][toe]
        lo = max(0, -d1)
        hi = min(g, g - d1)
        out[lo + d1:hi + d1] += f[lo:hi] @ block.T
    return out


def phi2_point_sum(px, py, cx, cy, w):
    """sum_j -Y_0(|p - c_j|)/4 * w_j for every probe p (planar real kernel)."""
    px = np.asarray(px, dtype=float)
    py = np.asarray(py, dtype=float)
    cx = np.asarray(cx, dtype=float)
    cy = np.asarray(cy, dtype=float)
    w = np.asarray(w, dtype=float)
    out = np.empty(px.size)
    chunk = max(1, 400000 // max(1, cx.size))
    for s in range(0, px.size, chunk):
        dx = px[s:s + chunk, None] - cx[None, :]
        dy = py[s:s + chunk, None] - cy[None, :]
        d = np.hypot(dx, dy)
        y0 = besseljy(0.0, d)[1]
        out[s:s + chunk] = -0.25 * (y0 @ w)
    return out
