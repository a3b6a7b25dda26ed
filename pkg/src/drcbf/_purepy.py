"""Pure-Python hot kernels for the unicycle obstacle problem.

Same signatures and results as the compiled ``drcbf._core``; used when the
extension is not built or ``DRCBF_PURE_PYTHON=1`` is set.
"""
import math

_TWO_PI = 2.0 * math.pi
_HALF_PI = 0.5 * math.pi


def _mul(alo, ahi, blo, bhi):
    p1 = alo * blo
    p2 = alo * bhi
    p3 = ahi * blo
    p4 = ahi * bhi
    return min(p1, p2, p3, p4), max(p1, p2, p3, p4)


def _sqr(lo, hi):
    if lo >= 0.0:
        return lo * lo, hi * hi
    if hi <= 0.0:
        return hi * hi, lo * lo
    return 0.0, max(lo * lo, hi * hi)


def _cos_range(lo, hi):
    if hi - lo >= _TWO_PI:
        return -1.0, 1.0
    a = math.cos(lo)
    b = math.cos(hi)
    rlo = min(a, b)
    rhi = max(a, b)
    if math.ceil(lo / _TWO_PI) * _TWO_PI <= hi:
        rhi = 1.0
    if math.ceil((lo - math.pi) / _TWO_PI) * _TWO_PI + math.pi <= hi:
        rlo = -1.0
    return rlo, rhi


def _sin_range(lo, hi):
    if hi - lo >= _TWO_PI:
        return -1.0, 1.0
    a = math.sin(lo)
    b = math.sin(hi)
    rlo = min(a, b)
    rhi = max(a, b)
    if math.ceil((lo - _HALF_PI) / _TWO_PI) * _TWO_PI + _HALF_PI <= hi:
        rhi = 1.0
    if math.ceil((lo + _HALF_PI) / _TWO_PI) * _TWO_PI - _HALF_PI <= hi:
        rlo = -1.0
    return rlo, rhi


def unicycle_tube(xhat, meas_lo, meas_hi, u_lo, u_hi, d_lo, d_hi, T, n_sub):
    """Interval enclosure of the unicycle flow over ``[0, T]``.

    The initial set is ``xhat - meas_box``.  Each of the ``n_sub`` sub-steps
    builds an a-priori enclosure of the flow (heading and speed move only
    through the bounded inputs, so the enclosure is explicit), then advances
    the box to the end of the sub-step.

    Returns:
        ``(end_lo, end_hi, tube_lo, tube_hi)``, each a 4-tuple.
    """
    xl = xhat[0] - meas_hi[0]
    xh = xhat[0] - meas_lo[0]
    yl = xhat[1] - meas_hi[1]
    yh = xhat[1] - meas_lo[1]
    tl = xhat[2] - meas_hi[2]
    th = xhat[2] - meas_lo[2]
    vl = xhat[3] - meas_hi[3]
    vh = xhat[3] - meas_lo[3]
    txl, txh, tyl, tyh, ttl, tth, tvl, tvh = xl, xh, yl, yh, tl, th, vl, vh
    delta = T / n_sub
    u1l = delta * u_lo[0]
    u1h = delta * u_hi[0]
    u2l = delta * u_lo[1]
    u2h = delta * u_hi[1]
    for _ in range(n_sub):
        btl = tl + min(0.0, u1l)
        bth = th + max(0.0, u1h)
        bvl = vl + min(0.0, u2l)
        bvh = vh + max(0.0, u2h)
        cl, ch = _cos_range(btl, bth)
        sl, sh = _sin_range(btl, bth)
        fxl, fxh = _mul(bvl, bvh, cl, ch)
        fyl, fyh = _mul(bvl, bvh, sl, sh)
        fxl = delta * (fxl + d_lo[0])
        fxh = delta * (fxh + d_hi[0])
        fyl = delta * (fyl + d_lo[1])
        fyh = delta * (fyh + d_hi[1])
        txl = min(txl, xl + min(0.0, fxl))
        txh = max(txh, xh + max(0.0, fxh))
        tyl = min(tyl, yl + min(0.0, fyl))
        tyh = max(tyh, yh + max(0.0, fyh))
        ttl = min(ttl, btl)
        tth = max(tth, bth)
        tvl = min(tvl, bvl)
        tvh = max(tvh, bvh)
        xl += fxl
        xh += fxh
        yl += fyl
        yh += fyh
        tl += u1l
        th += u1h
        vl += u2l
        vh += u2h
    return (xl, yl, tl, vl), (xh, yh, th, vh), (txl, tyl, ttl, tvl), (txh, tyh, tth, tvh)


def _fv0_and_g(xl, xh, yl, yh, tl, th, vl, vh, xo, yo, D, p1, p2):
    dxl = xl - xo
    dxh = xh - xo
    dyl = yl - yo
    dyh = yh - yo
    cl, ch = _cos_range(tl, th)
    sl, sh = _sin_range(tl, th)
    cdxl, cdxh = _mul(cl, ch, dxl, dxh)
    sdyl, sdyh = _mul(sl, sh, dyl, dyh)
    cdyl, cdyh = _mul(cl, ch, dyl, dyh)
    sdxl, sdxh = _mul(sl, sh, dxl, dxh)
    # along = C*DX + S*DY, lateral = C*DY - S*DX
    al = cdxl + sdyl
    ah = cdxh + sdyh
    ll = cdyl - sdxh
    lh = cdyh - sdxl
    lfl, lfh = _mul(vl, vh, al, ah)
    lfl *= 2.0
    lfh *= 2.0
    x2l, x2h = _sqr(dxl, dxh)
    y2l, y2h = _sqr(dyl, dyh)
    hl = x2l + y2l - D * D
    hh = x2h + y2h - D * D
    v2l, v2h = _sqr(vl, vh)
    s = p1 + p2
    k = p1 * p2
    f0l = 2.0 * v2l + s * lfl + k * hl
    f0h = 2.0 * v2h + s * lfh + k * hh
    g1l, g1h = _mul(vl, vh, ll, lh)
    return f0l, f0h, 2.0 * g1l, 2.0 * g1h, 2.0 * al, 2.0 * ah


def unicycle_margin(tube_lo, tube_hi, xhat, u_lo, u_hi, d_lo, d_hi, xo, yo, D, p1, p2):
    """Lower bound of ``f_v(y,u) - f_v(xhat,u) + f_d(y,d)`` over the tube,
    the input box and the disturbance box (linear class-K gains ``p1, p2``)."""
    f0l, f0h, g1l, g1h, g2l, g2h = _fv0_and_g(
        tube_lo[0], tube_hi[0], tube_lo[1], tube_hi[1], tube_lo[2], tube_hi[2], tube_lo[3], tube_hi[3],
        xo, yo, D, p1, p2,
    )
    c0, _, c1, _, c2, _ = _fv0_and_g(
        xhat[0], xhat[0], xhat[1], xhat[1], xhat[2], xhat[2], xhat[3], xhat[3], xo, yo, D, p1, p2,
    )
    total = f0l - c0
    du1l, _ = _mul(g1l - c1, g1h - c1, u_lo[0], u_hi[0])
    du2l, _ = _mul(g2l - c2, g2h - c2, u_lo[1], u_hi[1])
    total += du1l + du2l
    # disturbance effect: k1*d1 + k2*d2 + 2|d|^2
    vl, vh = tube_lo[3], tube_hi[3]
    cl, ch = _cos_range(tube_lo[2], tube_hi[2])
    sl, sh = _sin_range(tube_lo[2], tube_hi[2])
    vcl, vch = _mul(vl, vh, cl, ch)
    vsl, vsh = _mul(vl, vh, sl, sh)
    s = 2.0 * (p1 + p2)
    k1l = 4.0 * vcl + s * (tube_lo[0] - xo)
    k1h = 4.0 * vch + s * (tube_hi[0] - xo)
    k2l = 4.0 * vsl + s * (tube_lo[1] - yo)
    k2h = 4.0 * vsh + s * (tube_hi[1] - yo)
    e1l, _ = _mul(k1l, k1h, d_lo[0], d_hi[0])
    e2l, _ = _mul(k2l, k2h, d_lo[1], d_hi[1])
    q1l, _ = _sqr(d_lo[0], d_hi[0])
    q2l, _ = _sqr(d_lo[1], d_hi[1])
    total += e1l + e2l + 2.0 * (q1l + q2l)
    return total


def _uni_rhs(x, y, t, v, u1, u2, d1, d2):
    return v * math.cos(t) + d1, v * math.sin(t) + d2, u1, u2


def unicycle_rk4(x, u, d, T, substeps):
    """Classical RK4 over ``substeps`` equal sub-intervals, input and
    disturbance held; returns the end state as a 4-tuple."""
    px, py, pt, pv = x[0], x[1], x[2], x[3]
    u1, u2 = u[0], u[1]
    d1, d2 = d[0], d[1]
    h = T / substeps
    for _ in range(substeps):
        a1, a2, a3, a4 = _uni_rhs(px, py, pt, pv, u1, u2, d1, d2)
        b1, b2, b3, b4 = _uni_rhs(px + 0.5 * h * a1, py + 0.5 * h * a2, pt + 0.5 * h * a3, pv + 0.5 * h * a4, u1, u2, d1, d2)
        c1, c2, c3, c4 = _uni_rhs(px + 0.5 * h * b1, py + 0.5 * h * b2, pt + 0.5 * h * b3, pv + 0.5 * h * b4, u1, u2, d1, d2)
        e1, e2, e3, e4 = _uni_rhs(px + h * c1, py + h * c2, pt + h * c3, pv + h * c4, u1, u2, d1, d2)
        px += (h / 6.0) * (a1 + 2.0 * b1 + 2.0 * c1 + e1)
        py += (h / 6.0) * (a2 + 2.0 * b2 + 2.0 * c2 + e2)
        pt += (h / 6.0) * (a3 + 2.0 * b3 + 2.0 * c3 + e3)
        pv += (h / 6.0) * (a4 + 2.0 * b4 + 2.0 * c4 + e4)
    return px, py, pt, pv
