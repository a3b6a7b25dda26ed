# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels for the unicycle obstacle problem.

Mirrors ``drcbf._purepy`` function for function; results agree to the last
few ulps.
"""
from libc.math cimport cos, sin, ceil, M_PI

cdef double _TWO_PI = 2.0 * M_PI
cdef double _HALF_PI = 0.5 * M_PI


cdef inline double _min2(double a, double b) nogil:
    return a if a < b else b


cdef inline double _max2(double a, double b) nogil:
    return a if a > b else b


cdef inline void _mul(double alo, double ahi, double blo, double bhi, double* lo, double* hi) nogil:
    cdef double p1 = alo * blo
    cdef double p2 = alo * bhi
    cdef double p3 = ahi * blo
    cdef double p4 = ahi * bhi
    lo[0] = _min2(_min2(p1, p2), _min2(p3, p4))
    hi[0] = _max2(_max2(p1, p2), _max2(p3, p4))


cdef inline void _sqr(double a, double b, double* lo, double* hi) nogil:
    if a >= 0.0:
        lo[0] = a * a
        hi[0] = b * b
    elif b <= 0.0:
        lo[0] = b * b
        hi[0] = a * a
    else:
        lo[0] = 0.0
        hi[0] = _max2(a * a, b * b)


cdef inline void _cos_range(double a, double b, double* lo, double* hi) nogil:
    cdef double ca, cb
    if b - a >= _TWO_PI:
        lo[0] = -1.0
        hi[0] = 1.0
        return
    ca = cos(a)
    cb = cos(b)
    lo[0] = _min2(ca, cb)
    hi[0] = _max2(ca, cb)
    if ceil(a / _TWO_PI) * _TWO_PI <= b:
        hi[0] = 1.0
    if ceil((a - M_PI) / _TWO_PI) * _TWO_PI + M_PI <= b:
        lo[0] = -1.0


cdef inline void _sin_range(double a, double b, double* lo, double* hi) nogil:
    cdef double sa, sb
    if b - a >= _TWO_PI:
        lo[0] = -1.0
        hi[0] = 1.0
        return
    sa = sin(a)
    sb = sin(b)
    lo[0] = _min2(sa, sb)
    hi[0] = _max2(sa, sb)
    if ceil((a - _HALF_PI) / _TWO_PI) * _TWO_PI + _HALF_PI <= b:
        hi[0] = 1.0
    if ceil((a + _HALF_PI) / _TWO_PI) * _TWO_PI - _HALF_PI <= b:
        lo[0] = -1.0


def unicycle_tube(xhat, meas_lo, meas_hi, u_lo, u_hi, d_lo, d_hi, double T, int n_sub):
    cdef double xl = xhat[0] - meas_hi[0]
    cdef double xh = xhat[0] - meas_lo[0]
    cdef double yl = xhat[1] - meas_hi[1]
    cdef double yh = xhat[1] - meas_lo[1]
    cdef double tl = xhat[2] - meas_hi[2]
    cdef double th = xhat[2] - meas_lo[2]
    cdef double vl = xhat[3] - meas_hi[3]
    cdef double vh = xhat[3] - meas_lo[3]
    cdef double txl = xl, txh = xh, tyl = yl, tyh = yh
    cdef double ttl = tl, tth = th, tvl = vl, tvh = vh
    cdef double delta = T / n_sub
    cdef double u1l = delta * <double>u_lo[0]
    cdef double u1h = delta * <double>u_hi[0]
    cdef double u2l = delta * <double>u_lo[1]
    cdef double u2h = delta * <double>u_hi[1]
    cdef double d1l = d_lo[0], d1h = d_hi[0], d2l = d_lo[1], d2h = d_hi[1]
    cdef double btl, bth, bvl, bvh, cl, ch, sl, sh, fxl, fxh, fyl, fyh
    cdef int i
    for i in range(n_sub):
        btl = tl + _min2(0.0, u1l)
        bth = th + _max2(0.0, u1h)
        bvl = vl + _min2(0.0, u2l)
        bvh = vh + _max2(0.0, u2h)
        _cos_range(btl, bth, &cl, &ch)
        _sin_range(btl, bth, &sl, &sh)
        _mul(bvl, bvh, cl, ch, &fxl, &fxh)
        _mul(bvl, bvh, sl, sh, &fyl, &fyh)
        fxl = delta * (fxl + d1l)
        fxh = delta * (fxh + d1h)
        fyl = delta * (fyl + d2l)
        fyh = delta * (fyh + d2h)
        txl = _min2(txl, xl + _min2(0.0, fxl))
        txh = _max2(txh, xh + _max2(0.0, fxh))
        tyl = _min2(tyl, yl + _min2(0.0, fyl))
        tyh = _max2(tyh, yh + _max2(0.0, fyh))
        ttl = _min2(ttl, btl)
        tth = _max2(tth, bth)
        tvl = _min2(tvl, bvl)
        tvh = _max2(tvh, bvh)
        xl += fxl
        xh += fxh
        yl += fyl
        yh += fyh
        tl += u1l
        th += u1h
        vl += u2l
        vh += u2h
    return (xl, yl, tl, vl), (xh, yh, th, vh), (txl, tyl, ttl, tvl), (txh, tyh, tth, tvh)


cdef void _fv0_and_g(double xl, double xh, double yl, double yh, double tl, double th,
                     double vl, double vh, double xo, double yo, double D, double p1, double p2,
                     double* out) nogil:
    cdef double dxl = xl - xo, dxh = xh - xo, dyl = yl - yo, dyh = yh - yo
    cdef double cl, ch, sl, sh, cdxl, cdxh, sdyl, sdyh, cdyl, cdyh, sdxl, sdxh
    cdef double al, ah, ll, lh, lfl, lfh, x2l, x2h, y2l, y2h, hl, hh, v2l, v2h, g1l, g1h
    cdef double s = p1 + p2
    cdef double k = p1 * p2
    _cos_range(tl, th, &cl, &ch)
    _sin_range(tl, th, &sl, &sh)
    _mul(cl, ch, dxl, dxh, &cdxl, &cdxh)
    _mul(sl, sh, dyl, dyh, &sdyl, &sdyh)
    _mul(cl, ch, dyl, dyh, &cdyl, &cdyh)
    _mul(sl, sh, dxl, dxh, &sdxl, &sdxh)
    al = cdxl + sdyl
    ah = cdxh + sdyh
    ll = cdyl - sdxh
    lh = cdyh - sdxl
    _mul(vl, vh, al, ah, &lfl, &lfh)
    lfl *= 2.0
    lfh *= 2.0
    _sqr(dxl, dxh, &x2l, &x2h)
    _sqr(dyl, dyh, &y2l, &y2h)
    hl = x2l + y2l - D * D
    hh = x2h + y2h - D * D
    _sqr(vl, vh, &v2l, &v2h)
    _mul(vl, vh, ll, lh, &g1l, &g1h)
    out[0] = 2.0 * v2l + s * lfl + k * hl
    out[1] = 2.0 * v2h + s * lfh + k * hh
    out[2] = 2.0 * g1l
    out[3] = 2.0 * g1h
    out[4] = 2.0 * al
    out[5] = 2.0 * ah


def unicycle_margin(tube_lo, tube_hi, xhat, u_lo, u_hi, d_lo, d_hi,
                    double xo, double yo, double D, double p1, double p2):
    cdef double box[6]
    cdef double pt[6]
    cdef double lo0 = tube_lo[0], hi0 = tube_hi[0], lo1 = tube_lo[1], hi1 = tube_hi[1]
    cdef double lo2 = tube_lo[2], hi2 = tube_hi[2], lo3 = tube_lo[3], hi3 = tube_hi[3]
    cdef double x0 = xhat[0], x1 = xhat[1], x2 = xhat[2], x3 = xhat[3]
    cdef double u1l = u_lo[0], u1h = u_hi[0], u2l = u_lo[1], u2h = u_hi[1]
    cdef double d1l = d_lo[0], d1h = d_hi[0], d2l = d_lo[1], d2h = d_hi[1]
    cdef double total, a, b, cl, ch, sl, sh, vcl, vch, vsl, vsh, s
    cdef double k1l, k1h, k2l, k2h
    _fv0_and_g(lo0, hi0, lo1, hi1, lo2, hi2, lo3, hi3, xo, yo, D, p1, p2, box)
    _fv0_and_g(x0, x0, x1, x1, x2, x2, x3, x3, xo, yo, D, p1, p2, pt)
    total = box[0] - pt[0]
    _mul(box[2] - pt[2], box[3] - pt[2], u1l, u1h, &a, &b)
    total += a
    _mul(box[4] - pt[4], box[5] - pt[4], u2l, u2h, &a, &b)
    total += a
    _cos_range(lo2, hi2, &cl, &ch)
    _sin_range(lo2, hi2, &sl, &sh)
    _mul(lo3, hi3, cl, ch, &vcl, &vch)
    _mul(lo3, hi3, sl, sh, &vsl, &vsh)
    s = 2.0 * (p1 + p2)
    k1l = 4.0 * vcl + s * (lo0 - xo)
    k1h = 4.0 * vch + s * (hi0 - xo)
    k2l = 4.0 * vsl + s * (lo1 - yo)
    k2h = 4.0 * vsh + s * (hi1 - yo)
    _mul(k1l, k1h, d1l, d1h, &a, &b)
    total += a
    _mul(k2l, k2h, d2l, d2h, &a, &b)
    total += a
    _sqr(d1l, d1h, &a, &b)
    _sqr(d2l, d2h, &cl, &ch)
    total += 2.0 * (a + cl)
    return total


cdef inline void _rhs(double t, double v, double u1, double u2, double d1, double d2, double* k) nogil:
    k[0] = v * cos(t) + d1
    k[1] = v * sin(t) + d2
    k[2] = u1
    k[3] = u2


def unicycle_rk4(x, u, d, double T, int substeps):
    cdef double px = x[0], py = x[1], pt = x[2], pv = x[3]
    cdef double u1 = u[0], u2 = u[1], d1 = d[0], d2 = d[1]
    cdef double h = T / substeps
    cdef double a[4]
    cdef double b[4]
    cdef double c[4]
    cdef double e[4]
    cdef int i
    for i in range(substeps):
        _rhs(pt, pv, u1, u2, d1, d2, a)
        _rhs(pt + 0.5 * h * a[2], pv + 0.5 * h * a[3], u1, u2, d1, d2, b)
        _rhs(pt + 0.5 * h * b[2], pv + 0.5 * h * b[3], u1, u2, d1, d2, c)
        _rhs(pt + h * c[2], pv + h * c[3], u1, u2, d1, d2, e)
        px += (h / 6.0) * (a[0] + 2.0 * b[0] + 2.0 * c[0] + e[0])
        py += (h / 6.0) * (a[1] + 2.0 * b[1] + 2.0 * c[1] + e[1])
        pt += (h / 6.0) * (a[2] + 2.0 * b[2] + 2.0 * c[2] + e[2])
        pv += (h / 6.0) * (a[3] + 2.0 * b[3] + 2.0 * c[3] + e[3])
    return px, py, pt, pv
