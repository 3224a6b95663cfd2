# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops: inverse-distance sums and the double-bubble angle solve.

Same contracts as ``_pykernels``; reductions run serially in index order so
results do not depend on thread count.
"""
from libc.math cimport M_PI, cos, fabs, fmin, log, signbit, sin, sqrt, tan


def pair_sums(const double[:, ::1] x, const double[:, ::1] y):
    """Return (sum, sum of squares) of 1/|x_i - y_i| over paired rows."""
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t i
    cdef double dx, dy, dz, inv
    cdef double s = 0.0, s2 = 0.0
    if y.shape[0] != n:
        raise ValueError("x and y must have the same number of rows")
    with nogil:
        for i in range(n):
            dx = x[i, 0] - y[i, 0]
            dy = x[i, 1] - y[i, 1]
            dz = x[i, 2] - y[i, 2]
            inv = 1.0 / sqrt(dx * dx + dy * dy + dz * dz)
            s += inv
            s2 += inv * inv
    return s, s2


def cross_sum(const double[:, ::1] a, const double[:, ::1] b, bint skip_diagonal=False):
    """Return sum over all (i, j) of 1/|a_i - b_j|, omitting i == j if asked."""
    cdef Py_ssize_t na = a.shape[0], nb = b.shape[0]
    cdef Py_ssize_t i, j
    cdef double ax, ay, az, dx, dy, dz, row
    cdef double s = 0.0
    with nogil:
        for i in range(na):
            ax = a[i, 0]
            ay = a[i, 1]
            az = a[i, 2]
            row = 0.0
            for j in range(nb):
                if skip_diagonal and i == j:
                    continue
                dx = ax - b[j, 0]
                dy = ay - b[j, 1]
                dz = az - b[j, 2]
                row += 1.0 / sqrt(dx * dx + dy * dy + dz * dz)
            s += row
    return s


cdef double _THIRD_PI = M_PI / 3.0


cdef inline double _cap(double r, double c) nogil:
    return M_PI * r * r * r * (1.0 + c) * (1.0 + c) * (2.0 - c) / 3.0


cdef double _log_ratio(double b1) nogil:
    cdef double b2 = 2.0 * _THIRD_PI - b1
    cdef double psi = _THIRD_PI - b1
    cdef double r1 = 1.0 / sin(b1)
    cdef double r2 = 1.0 / sin(b2)
    cdef double h0 = tan(psi / 2.0)
    cdef double lens = M_PI * h0 * (3.0 + h0 * h0) / 6.0
    cdef double v_big = _cap(r1, cos(b1)) - lens
    cdef double v_small = _cap(r2, cos(b2)) + lens
    return log(v_small / v_big)


def unit_log_ratio(double b1):
    """log(small / big) lobe volume ratio of the junction-radius-1 bubble."""
    return _log_ratio(b1)


def brent_b1(double target, double xa, double xb, double xtol, double rtol, int maxiter):
    """Brent root of unit_log_ratio(b1) - target on [xa, xb].

    Returns (root, iterations, converged).
    """
    cdef double xpre = xa, xcur = xb, xblk = 0.0
    cdef double fpre, fcur, fblk = 0.0, spre = 0.0, scur = 0.0
    cdef double sbis, delta, stry, dpre, dblk
    cdef int i
    fpre = _log_ratio(xpre) - target
    fcur = _log_ratio(xcur) - target
    if fpre == 0:
        return xpre, 0, True
    if fcur == 0:
        return xcur, 0, True
    if signbit(fpre) == signbit(fcur):
        raise ValueError("root is not bracketed")
    for i in range(maxiter):
        if fpre != 0 and fcur != 0 and signbit(fpre) != signbit(fcur):
            xblk = xpre
            fblk = fpre
            spre = xcur - xpre
            scur = spre
        if fabs(fblk) < fabs(fcur):
            xpre = xcur
            xcur = xblk
            xblk = xpre
            fpre = fcur
            fcur = fblk
            fblk = fpre
        delta = (xtol + rtol * fabs(xcur)) / 2.0
        sbis = (xblk - xcur) / 2.0
        if fcur == 0 or fabs(sbis) < delta:
            return xcur, i, True
        if fabs(spre) > delta and fabs(fcur) < fabs(fpre):
            if xpre == xblk:
                stry = -fcur * (xcur - xpre) / (fcur - fpre)
            else:
                dpre = (fpre - fcur) / (xpre - xcur)
                dblk = (fblk - fcur) / (xblk - xcur)
                stry = -fcur * (fblk * dblk - fpre * dpre) / (dblk * dpre * (fblk - fpre))
            if 2.0 * fabs(stry) < fmin(fabs(spre), 3.0 * fabs(sbis) - delta):
                spre = scur
                scur = stry
            else:
                spre = sbis
                scur = sbis
        else:
            spre = sbis
            scur = sbis
        xpre = xcur
        fpre = fcur
        if fabs(scur) > delta:
            xcur += scur
        else:
            xcur += delta if sbis > 0 else -delta
        fcur = _log_ratio(xcur) - target
    return xcur, maxiter, False
