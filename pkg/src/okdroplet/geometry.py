"""Standard double bubble geometry in R^3.

The bubble is axisymmetric about z.  The three spherical caps meet along a
circle of radius ``a`` in the plane z = 0; phase 1 lives on the z < 0 side.
With ``b1``, ``b2`` the angles between each outer sphere's conormal and the
junction plane, 120 degree balance forces ``b1 + b2 = 2*pi/3`` and a
separating cap of opening angle ``psi = pi/3 - b1`` (larger bubble's side).
The volume ratio is then a monotone function of ``b1`` alone, so solving the
bubble is a scalar root find followed by a closed-form rescale.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import kernels
from .errors import ConvergenceFailure, NegativeMass, NonPositiveMass

SPHERE_CONST = (36.0 * math.pi) ** (1.0 / 3.0)
HUTCHINGS_C = SPHERE_CONST / 2.0
RESIDUAL_TOL = 1e-10
MAX_ITER = 200
DEGENERATE_RATIO = 1e-12

_THIRD_PI = math.pi / 3.0
_EPS = float(np.finfo(float).eps)


def sphere_area(m: float) -> float:
    """Surface area of the ball of volume ``m``: (36 pi)^(1/3) m^(2/3)."""
    if m < 0:
        raise NegativeMass(f"mass must be >= 0, got {m!r}")
    return SPHERE_CONST * m ** (2.0 / 3.0)


def hutchings_lower_bound(m1: float, m2: float) -> float:
    if m1 < 0 or m2 < 0:
        raise NegativeMass(f"masses must be >= 0, got ({m1!r}, {m2!r})")
    t = 2.0 / 3.0
    return HUTCHINGS_C * (m1**t + m2**t + (m1 + m2) ** t)


def _cap_volume(r, c):
    # cap of height r*(1+c) on a sphere of radius r
    return math.pi * r**3 * (1.0 + c) ** 2 * (2.0 - c) / 3.0


def _unit_frame(b1: float):
    """Volumes/area pieces for junction radius 1; ``b1`` in (0, pi/3]."""
    b2 = 2.0 * _THIRD_PI - b1
    psi = _THIRD_PI - b1
    r1, r2 = 1.0 / math.sin(b1), 1.0 / math.sin(b2)
    c1, c2 = math.cos(b1), math.cos(b2)
    h0 = math.tan(psi / 2.0)
    lens = math.pi * h0 * (3.0 + h0 * h0) / 6.0
    v_big = _cap_volume(r1, c1) - lens
    v_small = _cap_volume(r2, c2) + lens
    area = 2 * math.pi * r1 * r1 * (1 + c1) + 2 * math.pi * r2 * r2 * (1 + c2) + math.pi * (1 + h0 * h0)
    return v_big, v_small, area


@lru_cache(maxsize=1)
def _limit_small_bubble():
    """Small-bubble volume and excess area at b1 -> 0 (junction radius 1)."""
    b2 = 2.0 * _THIRD_PI
    r2, c2 = 1.0 / math.sin(b2), math.cos(b2)
    h0 = math.tan(_THIRD_PI / 2.0)
    vol = _cap_volume(r2, c2) + math.pi * h0 * (3.0 + h0 * h0) / 6.0
    # outer small cap + wall - disc removed from the (locally flat) big sphere
    excess = 2 * math.pi * r2 * r2 * (1 + c2) + math.pi * (1 + h0 * h0) - math.pi
    return vol, excess


@dataclass(frozen=True)
class DoubleBubbleGeometry:
    """Radii and cap angles of a standard double bubble.

    ``r0`` is signed: positive when the separating cap bulges into the phase-1
    bubble, negative when into phase 2, infinite when flat.  With that sign
    ``1/r0 = 1/r2 - 1/r1`` holds for either ordering.  ``theta*`` are the
    polar half-angles of each cap seen from its sphere's centre.  ``a`` is the
    junction circle radius; ``z1, z2, z0`` are the sphere centres on the axis.
    """

    r1: float
    r2: float
    r0: float
    theta1: float
    theta2: float
    theta0: float
    m1: float
    m2: float
    a: float
    z1: float
    z2: float
    z0: float
    area: float
    iterations: int = 0
    degenerate: bool = False

    def cap_volumes(self):
        """Enclosed volumes recomputed from the cap formulas."""
        if self.degenerate:
            return self.m1, self.m2
        c1 = -math.cos(self.theta1)
        c2 = -math.cos(self.theta2)
        v1 = _cap_volume(self.r1, c1)
        v2 = _cap_volume(self.r2, c2)
        if math.isfinite(self.r0):
            h0 = abs(self.r0) * 2.0 * math.sin(self.theta0 / 2.0) ** 2
            lens = math.pi * h0 * (3 * self.a**2 + h0 * h0) / 6.0
            if self.r0 > 0:
                v1, v2 = v1 - lens, v2 + lens
            else:
                v1, v2 = v1 + lens, v2 - lens
        return v1, v2

    def residuals(self) -> dict:
        v1, v2 = self.cap_volumes()
        vol = max(abs(v1 - self.m1) / self.m1, abs(v2 - self.m2) / self.m2)
        inv0 = 0.0 if not math.isfinite(self.r0) else 1.0 / self.r0
        curv = abs(inv0 - (1.0 / self.r2 - 1.0 / self.r1)) * min(self.r1, self.r2)
        # conormals at the junction point (a, 0) in the (rho, z) half plane
        t1 = _conormal(self.a, 0.0, self.z1, side=-1)
        t2 = _conormal(self.a, 0.0, self.z2, side=+1)
        if math.isfinite(self.r0):
            t0 = _conormal(self.a, 0.0, self.z0, side=0)
        else:
            t0 = np.array([-1.0, 0.0])
        angle = float(np.linalg.norm(t1 + t2 + t0))
        if self.degenerate:
            curv = angle = 0.0
        return {"volume": vol, "curvature": curv, "angle": angle}

    def lobe_box(self, phase: int):
        """Axis-aligned (rho_max, z_lo, z_hi) bounding the given lobe."""
        if phase == 1:
            r, z, lo, hi = self.r1, self.z1, self.z1 - self.r1, 0.0
        else:
            r, z, lo, hi = self.r2, self.z2, 0.0, self.z2 + self.r2
        rho = r if (z <= 0) == (phase == 1) else self.a
        rho = max(rho, self.a)
        if math.isfinite(self.r0):
            h0 = abs(self.r0) * 2.0 * math.sin(self.theta0 / 2.0) ** 2
            owns_lens = (self.r0 > 0) == (phase == 2)
            if owns_lens:
                if phase == 2:
                    lo = -h0
                else:
                    hi = h0
        return rho, lo, hi

    def contains(self, pts: np.ndarray, phase: int) -> np.ndarray:
        """Boolean mask of points (N, 3) inside the lobe of ``phase``."""
        x, y, z = pts[:, 0], pts[:, 1], pts[:, 2]
        rho2 = x * x + y * y
        in1 = (z < 0) & (rho2 + (z - self.z1) ** 2 <= self.r1**2)
        in2 = (z >= 0) & (rho2 + (z - self.z2) ** 2 <= self.r2**2)
        if math.isfinite(self.r0):
            lens = (rho2 + (z - self.z0) ** 2 < self.r0**2) & ((z < 0) if self.r0 > 0 else (z >= 0))
            if self.r0 > 0:
                in1 &= ~lens
                in2 |= lens
            else:
                in2 &= ~lens
                in1 |= lens
        return in1 if phase == 1 else in2


def _conormal(px, pz, zc, side):
    """Unit conormal at the junction pointing into the cap (meridian plane)."""
    n = np.array([px, pz - zc])
    n /= np.linalg.norm(n)
    t = np.array([-n[1], n[0]])
    if side == 0:
        # separating cap heads toward the axis
        if t[0] > 0:
            t = -t
    elif np.sign(t[1]) != side:
        t = -t
    return t


def _solve_b1(q: float):
    """Find b1 with small/big volume ratio ``q`` in (0, 1]."""
    if q >= 1.0:
        return _THIRD_PI, 0
    target = math.log(q)
    lo = 1e-7
    while kernels.unit_log_ratio(lo) - target > 0:
        lo *= 1e-2
        if lo < 1e-300:
            raise ConvergenceFailure(f"cannot bracket volume ratio {q!r}")
    b1, iters, ok = kernels.brent_b1(target, lo, _THIRD_PI, 1e-300, 4 * _EPS, MAX_ITER)
    if not ok:
        raise ConvergenceFailure(f"double bubble root find did not converge for ratio {q!r}")
    return b1, iters


def solve_double_bubble(m1: float, m2: float) -> DoubleBubbleGeometry:
    """Solve the standard double bubble enclosing volumes ``m1`` and ``m2``."""
    if not (m1 > 0 and m2 > 0):
        raise NonPositiveMass(f"both volumes must be > 0, got ({m1!r}, {m2!r})")
    swap = m2 > m1
    big, small = (m2, m1) if swap else (m1, m2)

    if small < DEGENERATE_RATIO * big:
        geo = _degenerate(big, small)
    else:
        b1, iters = _solve_b1(small / big)
        vb, vs, area_unit = _unit_frame(b1)
        a = (big / vb) ** (1.0 / 3.0)
        b2 = 2.0 * _THIRD_PI - b1
        psi = _THIRD_PI - b1
        rb, rs = a / math.sin(b1), a / math.sin(b2)
        r0 = a / math.sin(psi) if psi > 0 else math.inf
        geo = dict(
            rb=rb, rs=rs, r0=r0, tb=math.pi - b1, ts=math.pi - b2, t0=psi, a=a,
            zb=rb * math.cos(b1), zs=rs * math.cos(b2), z0=r0 * math.cos(psi) if psi > 0 else math.inf,
            area=area_unit * a * a, iterations=iters, degenerate=False,
        )
    if not swap:
        out = DoubleBubbleGeometry(
            r1=geo["rb"], r2=geo["rs"], r0=geo["r0"], theta1=geo["tb"], theta2=geo["ts"],
            theta0=geo["t0"], m1=m1, m2=m2, a=geo["a"], z1=-geo["zb"], z2=geo["zs"],
            z0=geo["z0"], area=geo["area"], iterations=geo["iterations"], degenerate=geo["degenerate"],
        )
    else:
        # mirror z so phase 1 stays on the z < 0 side; the wall now bulges into phase 2
        out = DoubleBubbleGeometry(
            r1=geo["rs"], r2=geo["rb"], r0=-geo["r0"], theta1=geo["ts"], theta2=geo["tb"],
            theta0=geo["t0"], m1=m1, m2=m2, a=geo["a"], z1=-geo["zs"], z2=geo["zb"],
            z0=-geo["z0"], area=geo["area"], iterations=geo["iterations"], degenerate=geo["degenerate"],
        )
    if not out.degenerate:
        res = out.residuals()
        worst = max(res.values())
        if not worst <= RESIDUAL_TOL:
            raise ConvergenceFailure(f"double bubble residual {worst:.3e} > {RESIDUAL_TOL:g} for ({m1!r}, {m2!r})")
    return out


def _degenerate(big, small):
    vol, excess = _limit_small_bubble()
    a = (small / vol) ** (1.0 / 3.0)
    b2 = 2.0 * _THIRD_PI
    rb = (3.0 * big / (4.0 * math.pi)) ** (1.0 / 3.0)
    rs = a / math.sin(b2)
    r0 = a / math.sin(_THIRD_PI)
    return dict(
        rb=rb, rs=rs, r0=r0, tb=math.pi, ts=math.pi - b2, t0=_THIRD_PI, a=a,
        zb=rb, zs=rs * math.cos(b2), z0=r0 * math.cos(_THIRD_PI),
        area=sphere_area(big) + excess * a * a, iterations=0, degenerate=True,
    )


def double_bubble_area(m1: float, m2: float, verify: bool = True) -> float:
    """Perimeter S(m1, m2) of the standard double bubble; S(m, 0) is a sphere.

    ``verify=False`` skips building the geometry and its residual check; the
    arithmetic, and so the value, is the same.
    """
    if m1 < 0 or m2 < 0:
        raise NegativeMass(f"masses must be >= 0, got ({m1!r}, {m2!r})")
    if m1 == 0 or m2 == 0:
        if m1 + m2 == 0:
            raise NonPositiveMass("m1 + m2 must be > 0")
        return sphere_area(m1 + m2)
    if verify:
        return solve_double_bubble(m1, m2).area
    big, small = (m2, m1) if m2 > m1 else (m1, m2)
    if small < DEGENERATE_RATIO * big:
        return _degenerate(big, small)["area"]
    b1, _ = _solve_b1(small / big)
    vb, _, area_unit = _unit_frame(b1)
    a = (big / vb) ** (1.0 / 3.0)
    return area_unit * a * a


def check_monotonicity(m1: float, m2: float, x: float) -> bool:
    """True iff shrinking the second volume by ``x`` does not increase S."""
    return double_bubble_area(m1, m2 - x) <= double_bubble_area(m1, m2) + 1e-9
