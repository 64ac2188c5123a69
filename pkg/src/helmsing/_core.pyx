# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: Bessel J/Y, planar direct sums, planar point sums.

Same regime switches and constants as ``_fallback``; the two are checked
against each other in the test-suite.
"""

import numpy as np
cimport numpy as cnp
from cython.parallel cimport prange
from libc.math cimport (sqrt, sin, cos, fabs, floor, fmod, tgamma, pow,
                        copysign, hypot, M_PI, INFINITY)

cnp.import_array()

cdef double SERIES_MAX_X = 2.0
cdef double LIMIT_STEP = 1e-5
cdef double NEAR_INT = 1e-6
cdef double EPS = 1e-16
cdef double FPMIN = 1e-300
cdef int MAXIT = 100000


cdef inline double _asym_min_x(double nu) noexcept nogil:
    cdef double a = 2.0 * fabs(nu)
    return a if a > 30.0 else 30.0


cdef double _rgamma(double x) noexcept nogil:
    cdef double g
    if x <= 0.0 and x == floor(x):
        return 0.0
    if x > 171.0:
        return 0.0
    g = tgamma(x)
    if g == 0.0 or g == INFINITY or g == -INFINITY:
        return 0.0
    return 1.0 / g


cdef double _sinpi(double a) noexcept nogil:
    cdef double r = fmod(a, 2.0)
    if r == 0.0 or r == 1.0 or r == -1.0:
        return 0.0
    if r == 0.5 or r == -1.5:
        return 1.0
    if r == -0.5 or r == 1.5:
        return -1.0
    return sin(M_PI * r)


cdef double _cospi(double a) noexcept nogil:
    cdef double r = fmod(fabs(a), 2.0)
    if r == 0.5 or r == 1.5:
        return 0.0
    if r == 0.0:
        return 1.0
    if r == 1.0:
        return -1.0
    return cos(M_PI * r)


cdef double _series_j(double nu, double x) noexcept nogil:
    cdef int m0 = 0
    cdef int m
    cdef double h, term, total, q
    if x == 0.0:
        if nu == 0.0:
            return 1.0
        if nu > 0.0 or nu == floor(nu):
            return 0.0
        return INFINITY
    if nu < 0.0 and nu == floor(nu):
        m0 = <int>(-nu)
    h = 0.5 * x
    term = pow(h, 2 * m0 + nu) * _rgamma(m0 + 1.0) * _rgamma(m0 + nu + 1.0)
    if m0 % 2:
        term = -term
    total = term
    q = -h * h
    for m in range(m0 + 1, m0 + 200):
        term *= q / (m * (m + nu))
        total += term
        if m + nu > 0.0 and fabs(term) <= 1e-17 * fabs(total):
            break
    return total


cdef inline double _limit_ratio(double lam, double x) noexcept nogil:
    return (_cospi(lam) * _series_j(lam, x) - _series_j(-lam, x)) / _sinpi(lam)


cdef double _series_y(double nu, double x) noexcept nogil:
    cdef double n = floor(nu + 0.5)
    cdef double d = nu - n
    cdef double h = LIMIT_STEP
    cdef double fp1, fm1, fp2, fm2, y
    if fabs(d) > NEAR_INT:
        return _limit_ratio(nu, x)
    fp1 = _limit_ratio(n + h, x)
    fm1 = _limit_ratio(n - h, x)
    fp2 = _limit_ratio(n + 2 * h, x)
    fm2 = _limit_ratio(n - 2 * h, x)
    y = (4.0 * 0.5 * (fp1 + fm1) - 0.5 * (fp2 + fm2)) / 3.0
    if d != 0.0:
        y += d * (fp1 - fm1) / (2.0 * h)
    return y


cdef void _steed(double nu, double x, double *rj_out, double *ry_out) noexcept nogil:
    cdef int nl, i, it
    cdef double fnl = floor(nu - x + 1.5)
    cdef double xmu, xi, xi2, w, h, b, d, c, dl, rjl, rjpl, rjl1, rjp1
    cdef double fact, rjtemp, f, a, p, q, br, bi, cr, ci, den, dr, di
    cdef double dlr, dli, temp, gam, rjmu, rymu, rymup, ry1, rytemp
    cdef int isign = 1
    nl = <int>fnl if fnl > 0.0 else 0
    xmu = nu - nl
    xi = 1.0 / x
    xi2 = 2.0 * xi
    w = xi2 / M_PI
    h = nu * xi
    if h < FPMIN:
        h = FPMIN
    b = xi2 * nu
    d = 0.0
    c = h
    for it in range(MAXIT):
        b += xi2
        d = b - d
        if fabs(d) < FPMIN:
            d = FPMIN
        c = b - 1.0 / c
        if fabs(c) < FPMIN:
            c = FPMIN
        d = 1.0 / d
        dl = c * d
        h *= dl
        if d < 0.0:
            isign = -isign
        if fabs(dl - 1.0) < EPS:
            break
    rjl = isign * 1e-30
    rjpl = h * rjl
    rjl1 = rjl
    rjp1 = rjpl
    fact = nu * xi
    for i in range(nl):
        rjtemp = fact * rjl + rjpl
        fact -= xi
        rjpl = fact * rjtemp - rjl
        rjl = rjtemp
        if fabs(rjl) > 1e250:
            rjl *= 1e-250
            rjpl *= 1e-250
            rjl1 *= 1e-250
            rjp1 *= 1e-250
    if rjl == 0.0:
        rjl = EPS
    f = rjpl / rjl

    a = 0.25 - xmu * xmu
    p = -0.5 * xi
    q = 1.0
    br = 2.0 * x
    bi = 2.0
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
    for i in range(2, MAXIT):
        a += 2 * (i - 1)
        bi += 2.0
        dr = a * dr + br
        di = a * di + bi
        if fabs(dr) + fabs(di) < FPMIN:
            dr = FPMIN
        fact = a / (cr * cr + ci * ci)
        cr = br + cr * fact
        ci = bi - ci * fact
        if fabs(cr) + fabs(ci) < FPMIN:
            cr = FPMIN
        den = dr * dr + di * di
        dr /= den
        di /= -den
        dlr = cr * dr - ci * di
        dli = cr * di + ci * dr
        temp = p * dlr - q * dli
        q = p * dli + q * dlr
        p = temp
        if fabs(dlr - 1.0) + fabs(dli) < EPS:
            break
    gam = (p - f) / q
    rjmu = sqrt(w / ((p - f) * gam + q))
    rjmu = copysign(rjmu, rjl)
    rymu = rjmu * gam
    rymup = rymu * (p + q / gam)
    ry1 = xmu * xi * rymu - rymup
    fact = rjmu / rjl
    rj_out[0] = rjl1 * fact
    for i in range(1, nl + 1):
        rytemp = (xmu + i) * xi2 * ry1 - rymu
        rymu = ry1
        ry1 = rytemp
    ry_out[0] = rymu


cdef void _hankel(double nu, double x, double *j_out, double *y_out) noexcept nogil:
    cdef double mu = 4.0 * nu * nu
    cdef double p = 1.0
    cdef double q = 0.0
    cdef double term = 1.0
    cdef double prev = INFINITY
    cdef double at, odd, phase, cphi, sphi, cx, sx, cchi, schi, amp, big
    cdef int k
    for k in range(1, 400):
        odd = 2 * k - 1
        term *= (mu - odd * odd) / (8.0 * k * x)
        at = fabs(term)
        if odd * odd > mu and at > prev:
            break
        if k % 2:
            if (k // 2) % 2 == 0:
                q += term
            else:
                q -= term
        else:
            if (k // 2) % 2 == 0:
                p += term
            else:
                p -= term
        big = fabs(p) if fabs(p) > fabs(q) else fabs(q)
        if at <= 1e-17 * big:
            break
        prev = at
    phase = 0.5 * nu + 0.25
    cphi = _cospi(phase)
    sphi = _sinpi(phase)
    cx = cos(x)
    sx = sin(x)
    cchi = cx * cphi + sx * sphi
    schi = sx * cphi - cx * sphi
    amp = sqrt(2.0 / (M_PI * x))
    j_out[0] = amp * (p * cchi - q * schi)
    y_out[0] = amp * (p * schi + q * cchi)


cdef void _jy(double nu, double x, double *j, double *y) noexcept nogil:
    cdef double anu, c, s, jj, yy
    if x < SERIES_MAX_X:
        j[0] = _series_j(nu, x)
        y[0] = _series_y(nu, x)
        return
    anu = fabs(nu)
    if x >= _asym_min_x(nu):
        _hankel(nu, x, j, y)
        return
    _steed(anu, x, &jj, &yy)
    if nu >= 0.0:
        j[0] = jj
        y[0] = yy
        return
    c = _cospi(anu)
    s = _sinpi(anu)
    j[0] = c * jj - s * yy
    y[0] = s * jj + c * yy


def besseljy(double nu, x):
    """(J_nu(x), Y_nu(x)) for real nu and an array of x > 0."""
    arr = np.ascontiguousarray(x, dtype=np.float64)
    shape = arr.shape
    cdef const double[::1] xv = arr.reshape(-1)
    cdef Py_ssize_t n = xv.shape[0]
    cdef Py_ssize_t i
    jo = np.empty(n)
    yo = np.empty(n)
    cdef double[::1] jv = jo
    cdef double[::1] yv = yo
    with nogil:
        for i in range(n):
            _jy(nu, xv[i], &jv[i], &yv[i])
    return jo.reshape(shape), yo.reshape(shape)


def besselj(double nu, x):
    """J_nu(x) for real nu and an array of x >= 0."""
    arr = np.ascontiguousarray(x, dtype=np.float64)
    shape = arr.shape
    cdef const double[::1] xv = arr.reshape(-1)
    cdef Py_ssize_t n = xv.shape[0]
    cdef Py_ssize_t i
    cdef double yy
    jo = np.empty(n)
    cdef double[::1] jv = jo
    with nogil:
        for i in range(n):
            if xv[i] < SERIES_MAX_X:
                jv[i] = _series_j(nu, xv[i])
            else:
                _jy(nu, xv[i], &jv[i], &yy)
    return jo.reshape(shape)


def planar_apply(table, f, int threads=1):
    """Discrete planar convolution v[i] = sum_j table[i - j] f[j] (direct)."""
    cdef const double[:, ::1] t = np.ascontiguousarray(table, dtype=np.float64)
    cdef const double[:, ::1] fv = np.ascontiguousarray(f, dtype=np.float64)
    cdef Py_ssize_t g = fv.shape[0]
    out = np.zeros((g, g))
    cdef double[:, ::1] ov = out
    cdef Py_ssize_t i1, i2, j1, j2, o1, base
    cdef double fj
    for i1 in prange(g, nogil=True, num_threads=threads, schedule="static"):
        for j1 in range(g):
            o1 = i1 - j1 + g - 1
            for j2 in range(g):
                fj = fv[j1, j2]
                base = g - 1 - j2
                for i2 in range(g):
                    ov[i1, i2] += t[o1, base + i2] * fj
    return out


def phi2_point_sum(px, py, cx, cy, w, int threads=1):
    """sum_j -Y_0(|p - c_j|)/4 * w_j for every probe p (planar real kernel)."""
    cdef const double[::1] pxv = np.ascontiguousarray(px, dtype=np.float64).reshape(-1)
    cdef const double[::1] pyv = np.ascontiguousarray(py, dtype=np.float64).reshape(-1)
    cdef const double[::1] cxv = np.ascontiguousarray(cx, dtype=np.float64).reshape(-1)
    cdef const double[::1] cyv = np.ascontiguousarray(cy, dtype=np.float64).reshape(-1)
    cdef const double[::1] wv = np.ascontiguousarray(w, dtype=np.float64).reshape(-1)
    cdef Py_ssize_t n = pxv.shape[0]
    cdef Py_ssize_t m = cxv.shape[0]
    cdef Py_ssize_t i, j
    cdef double acc, jj, yy
    out = np.empty(n)
    cdef double[::1] ov = out
    for i in prange(n, nogil=True, num_threads=threads, schedule="dynamic"):
        acc = 0.0
        for j in range(m):
            _jy(0.0, hypot(pxv[i] - cxv[j], pyv[i] - cyv[j]), &jj, &yy)
            acc = acc + yy * wv[j]
        ov[i] = -0.25 * acc
    return out
