"""Independent reference computations used by the tests.

Nothing here calls into the package's solvers or estimators.  The double
bubble is rebuilt from the law of cosines (outer spheres meet at 60 degrees
between normals) and the curvature balance, and its volumes and areas come
from 1D quadrature of the surface of revolution.
"""
import math

import numpy as np
from scipy.integrate import quad
from scipy.optimize import fsolve


def _frame(r1, r2):
    """Axis layout for outer radii r1 >= r2: big centre at 0, small at d."""
    d = math.sqrt(r1 * r1 + r2 * r2 - r1 * r2)
    zj = (d * d + r1 * r1 - r2 * r2) / (2 * d)
    a2 = r1 * r1 - zj * zj
    if r1 == r2:
        return d, zj, a2, math.inf, 0.0
    r0 = r1 * r2 / (r1 - r2)
    # height of the wall cap over the junction disc, written without cancellation
    h = a2 / (r0 + math.sqrt(r0 * r0 - a2))
    return d, zj, a2, r0, h


def bubble_volumes(r1, r2):
    """(big, small) lobe volumes by quadrature of disc areas along the axis."""
    d, zj, a2, r0, h = _frame(r1, r2)
    big_side = quad(lambda z: math.pi * (r1 * r1 - z * z), -r1, zj, epsabs=0, epsrel=1e-13)[0]
    small_side = quad(lambda z: math.pi * (r2 * r2 - (z - d) ** 2), zj, d + r2, epsabs=0, epsrel=1e-13)[0]
    lens = 0.0
    if h > 0:
        # the wall bulges into the big lobe; the lens it cuts off belongs to
        # the small one.  s is the distance from the lens apex.
        lens = quad(lambda s: math.pi * s * (2 * r0 - s), 0.0, h, epsabs=0, epsrel=1e-13)[0]
    return big_side - lens, small_side + lens


def _zone_area(r, zc, lo, hi):
    # surface of revolution rho(z) = sqrt(r^2 - (z - zc)^2):
    # 2 pi rho sqrt(1 + rho'^2) = 2 pi sqrt(rho^2 + (rho rho')^2)
    f = lambda z: 2 * math.pi * math.sqrt(max(r * r - (z - zc) ** 2, 0.0) + (z - zc) ** 2)
    return quad(f, lo, hi, epsabs=0, epsrel=1e-13)[0]


def bubble_area(r1, r2):
    d, zj, a2, r0, h = _frame(r1, r2)
    area = _zone_area(r1, 0.0, -r1, zj) + _zone_area(r2, d, zj, d + r2)
    if h > 0:
        # rho^2 = s (2 r0 - s) and rho rho' = r0 - s along the wall cap
        wall = lambda s: 2 * math.pi * math.sqrt(s * (2 * r0 - s) + (r0 - s) ** 2)
        area += quad(wall, 0.0, h, epsabs=0, epsrel=1e-13)[0]
    else:
        area += math.pi * a2
    return area


def solve_bubble(m1, m2):
    """(area, r_big, r_small, r0) for volumes m1, m2 by a 2D root find."""
    big, small = max(m1, m2), min(m1, m2)
    guess = [(3 * big / (4 * math.pi)) ** (1 / 3), (3 * small / (4 * math.pi)) ** (1 / 3)]

    def res(x):
        r1, r2 = x
        if r2 > r1:
            vs, vb = bubble_volumes(r2, r1)
        else:
            vb, vs = bubble_volumes(r1, r2)
        return [vb / big - 1.0, vs / small - 1.0]

    (r1, r2), info, _, _ = fsolve(res, guess, xtol=1e-13, full_output=True)
    # fsolve may stop short of xtol once rounding dominates; judge by the residual
    if max(abs(v) for v in info["fvec"]) > 1e-12:
        raise RuntimeError(f"oracle bubble solve did not converge for ({m1!r}, {m2!r})")
    r1, r2 = max(r1, r2), min(r1, r2)
    _, _, _, r0, _ = _frame(r1, r2)
    return bubble_area(r1, r2), r1, r2, r0


def _uniform_ball(n, rng, radius):
    out = np.empty((0, 3))
    while out.shape[0] < n:
        pts = rng.uniform(-radius, radius, size=(2 * n, 3))
        pts = pts[(pts**2).sum(axis=1) <= radius * radius]
        out = np.vstack([out, pts])
    return out[:n]


def mc_ball_pairs(m1, m2, d, pairs, seed, chunk=1_000_000):
    """Plain mean estimate of m1 m2 E|x - y|^-1, x in B(0), y in B(d e_z).

    Returns (value, standard error).  ``d = 0`` with ``m1 == m2`` gives the
    self-energy.
    """
    rng = np.random.default_rng(seed)
    r1 = (3 * m1 / (4 * math.pi)) ** (1 / 3)
    r2 = (3 * m2 / (4 * math.pi)) ** (1 / 3)
    s = s2 = 0.0
    done = 0
    while done < pairs:
        n = min(chunk, pairs - done)
        x = _uniform_ball(n, rng, r1)
        y = _uniform_ball(n, rng, r2)
        y[:, 2] += d
        inv = 1.0 / np.sqrt(((x - y) ** 2).sum(axis=1))
        s += inv.sum()
        s2 += (inv * inv).sum()
        done += n
    mean = s / pairs
    var = s2 / pairs - mean * mean
    return m1 * m2 * mean, m1 * m2 * math.sqrt(var / pairs)


def mc_unit_cube(pairs, seed, chunk=1_000_000):
    """Plain mean estimate of the unit cube's self-energy with its error."""
    rng = np.random.default_rng(seed)
    s = s2 = 0.0
    done = 0
    while done < pairs:
        n = min(chunk, pairs - done)
        inv = 1.0 / np.sqrt(((rng.random((n, 3)) - rng.random((n, 3))) ** 2).sum(axis=1))
        s += inv.sum()
        s2 += (inv * inv).sum()
        done += n
    mean = s / pairs
    return mean, math.sqrt((s2 / pairs - mean * mean) / pairs)
