"""Pure Python/numpy fallback for the compiled kernels in ``_ckernels.pyx``."""
import math

import numpy as np

_BLOCK = 2048


def pair_sums(x, y):
    """Return (sum, sum of squares) of 1/|x_i - y_i| over paired rows."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape[0] != y.shape[0]:
        raise ValueError("x and y must have the same number of rows")
    inv = 1.0 / np.sqrt(((x - y) ** 2).sum(axis=1))
    return float(inv.sum()), float((inv * inv).sum())


def cross_sum(a, b, skip_diagonal=False):
    """Return sum over all (i, j) of 1/|a_i - b_j|, omitting i == j if asked."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    total = 0.0
    for start in range(0, a.shape[0], _BLOCK):
        blk = a[start:start + _BLOCK]
        d2 = ((blk[:, None, :] - b[None, :, :]) ** 2).sum(axis=2)
        if skip_diagonal:
            rows = np.arange(blk.shape[0])
            d2[rows, rows + start] = np.inf
        total += float((1.0 / np.sqrt(d2)).sum())
    return total


_THIRD_PI = math.pi / 3.0


def _cap(r, c):
    return math.pi * r * r * r * (1.0 + c) * (1.0 + c) * (2.0 - c) / 3.0


def unit_log_ratio(b1):
    """log(small / big) lobe volume ratio of the junction-radius-1 bubble."""
    b2 = 2.0 * _THIRD_PI - b1
    psi = _THIRD_PI - b1
    r1 = 1.0 / math.sin(b1)
    r2 = 1.0 / math.sin(b2)
    h0 = math.tan(psi / 2.0)
    lens = math.pi * h0 * (3.0 + h0 * h0) / 6.0
    v_big = _cap(r1, math.cos(b1)) - lens
    v_small = _cap(r2, math.cos(b2)) + lens
    return math.log(v_small / v_big)


def brent_b1(target, xa, xb, xtol, rtol, maxiter):
    """Brent root of unit_log_ratio(b1) - target on [xa, xb].

    Returns (root, iterations, converged).  Same steps as the compiled version.
    """
    f = unit_log_ratio
    xpre, xcur, xblk = xa, xb, 0.0
    fblk = spre = scur = 0.0
    fpre = f(xpre) - target
    fcur = f(xcur) - target
    if fpre == 0:
        return xpre, 0, True
    if fcur == 0:
        return xcur, 0, True
    if math.copysign(1.0, fpre) == math.copysign(1.0, fcur):
        raise ValueError("root is not bracketed")
    for i in range(maxiter):
        if fpre != 0 and fcur != 0 and math.copysign(1.0, fpre) != math.copysign(1.0, fcur):
            xblk, fblk = xpre, fpre
            spre = scur = xcur - xpre
        if abs(fblk) < abs(fcur):
            xpre, xcur, xblk = xcur, xblk, xcur
            fpre, fcur, fblk = fcur, fblk, fcur
        delta = (xtol + rtol * abs(xcur)) / 2.0
        sbis = (xblk - xcur) / 2.0
        if fcur == 0 or abs(sbis) < delta:
            return xcur, i, True
        if abs(spre) > delta and abs(fcur) < abs(fpre):
            if xpre == xblk:
                stry = -fcur * (xcur - xpre) / (fcur - fpre)
            else:
                dpre = (fpre - fcur) / (xpre - xcur)
                dblk = (fblk - fcur) / (xblk - xcur)
                stry = -fcur * (fblk * dblk - fpre * dpre) / (dblk * dpre * (fblk - fpre))
            if 2.0 * abs(stry) < min(abs(spre), 3.0 * abs(sbis) - delta):
                spre, scur = scur, stry
            else:
                spre = scur = sbis
        else:
            spre = scur = sbis
        xpre, fpre = xcur, fcur
        if abs(scur) > delta:
            xcur += scur
        else:
            xcur += delta if sbis > 0 else -delta
        fcur = f(xcur) - target
    return xcur, maxiter, False
