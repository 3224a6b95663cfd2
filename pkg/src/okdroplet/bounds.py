"""Computable constants behind the upper bound K on the number of clusters.

Pipeline, all functions of (M1, M2, gamma11, gamma22) only:

* merge threshold m_S: below it two pure balls of one phase always prefer to
  merge, so at most one pure cluster per phase is lighter than m_S;
* lower bound on the largest phase-i mass m_i^+, from comparing the Hutchings
  perimeter bound with the two-ball competitor energy U;
* H_i = 3 U / m_i^+ and the mixed-cluster floor eps = min_i (c_i / H_i)^3,
  below which the mass-transfer competitor strictly lowers the energy;
* K = K_pure + K_mixed.

The floor uses eps^(1/3) >= c/H, which is what 0 <= eps H - c eps^(2/3)
implies.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.optimize import minimize

from .coulomb import KAPPA
from .energy import two_ball_upper_bound
from .errors import NonPositiveMass
from .geometry import HUTCHINGS_C, SPHERE_CONST
from .model import ProblemParams

GRID_POINTS = 64
BISECTION_RTOL = 1e-6
ASSEMBLY_NOTE = (
    "K = sum_i (1 + floor(M_i / m_iS)) + 2 + floor((M1 + M2) / eps_min); "
    "the two largest clusters are exempted from the mixed-mass floor"
)


def merge_gain(m1, m2, gamma):
    """Energy saved by merging two pure balls of masses m1, m2 (> 0 favours merging)."""
    t, f = 2.0 / 3.0, 5.0 / 3.0
    m1 = np.asarray(m1, dtype=float)
    m2 = np.asarray(m2, dtype=float)
    s = m1 + m2
    perim = SPHERE_CONST * (m1**t + m2**t - s**t)
    coul = gamma * KAPPA * (s**f - m1**f - m2**f)
    return perim - coul


def worst_pair(t: float, gamma: float):
    """Minimise ``merge_gain`` over (0, t]^2: log grid plus bounded local descent."""
    # merge_gain(t x1, t x2, gamma) = t^(2/3) merge_gain(x1, x2, gamma t), so the
    # search runs on (0, 1]^2 and large t (small gamma) cannot overflow
    gt = gamma * t
    grid = np.logspace(-6.0, 0.0, GRID_POINTS)
    g1, g2 = np.meshgrid(grid, grid, indexing="ij")
    vals = merge_gain(g1, g2, gt)
    k = np.unravel_index(np.argmin(vals), vals.shape)
    x0 = np.array([grid[k[0]], grid[k[1]]])
    res = minimize(
        lambda x: float(merge_gain(x[0], x[1], gt)),
        x0,
        method="L-BFGS-B",
        bounds=[(1e-9, 1.0), (1e-9, 1.0)],
    )
    best, pair = float(vals[k]), (float(g1[k]), float(g2[k]))
    if float(res.fun) < best:
        best, pair = float(res.fun), (float(res.x[0]), float(res.x[1]))
    return best * t ** (2.0 / 3.0), (pair[0] * t, pair[1] * t)


def merge_threshold(gamma_ii: float, cap: float = math.inf) -> float:
    """Largest t <= cap with merging favourable for every pair of masses <= t."""
    if gamma_ii < 0:
        raise ValueError(f"gamma must be >= 0, got {gamma_ii!r}")
    if gamma_ii == 0:
        return cap
    return min(_threshold(float(gamma_ii)), cap)


@lru_cache(maxsize=1024)
def _threshold(gamma_ii: float) -> float:
    hi = 1.0 / gamma_ii
    while worst_pair(hi, gamma_ii)[0] > 0:
        hi *= 2.0
    lo = hi / 2.0
    while worst_pair(lo, gamma_ii)[0] <= 0:
        lo /= 2.0
    while hi - lo > BISECTION_RTOL * hi:
        mid = 0.5 * (lo + hi)
        if worst_pair(mid, gamma_ii)[0] > 0:
            lo = mid
        else:
            hi = mid
    return lo


def merge_threshold_equal_pairs(gamma_ii: float) -> float:
    """Closed form of the threshold restricted to equal-mass pairs."""
    return (2 - 2 ** (2 / 3)) * SPHERE_CONST / ((2 ** (5 / 3) - 2) * gamma_ii * KAPPA)


def largest_cluster_lower_bound(p: ProblemParams):
    """Lower bounds on the largest phase-1 and phase-2 masses of a minimiser."""
    u = two_ball_upper_bound(p)
    return tuple(min(M / 2.0, (HUTCHINGS_C * M / (2.0 * u)) ** 3) for M in (p.M1, p.M2))


def H_constants(p: ProblemParams, m_plus):
    u = two_ball_upper_bound(p)
    out = []
    for m in m_plus:
        if not m > 0:
            raise NonPositiveMass(f"largest-cluster masses must be > 0, got {m_plus!r}")
        out.append(3.0 * u / m)
    return tuple(out)


def floor_from_H(H) -> tuple:
    """Per-case floors (c_i / H_i)^3."""
    return tuple((HUTCHINGS_C / h) ** 3 for h in H)


def mixed_mass_floor(p: ProblemParams) -> float:
    """A priori lower bound on the total mass of any mixed cluster."""
    return min(floor_from_H(H_constants(p, largest_cluster_lower_bound(p))))


@dataclass(frozen=True)
class BoundsReport:
    m_S: tuple
    m_plus_lb: tuple
    H: tuple
    eps_min: float
    K_pure: int
    K_mixed: int
    K: int
    c: tuple = (HUTCHINGS_C, HUTCHINGS_C)
    upper_energy: float = 0.0
    assembly: str = ASSEMBLY_NOTE

    def as_dict(self) -> dict:
        return {
            "m_S": list(self.m_S),
            "m_plus_lb": list(self.m_plus_lb),
            "H": list(self.H),
            "eps_min": self.eps_min,
            "K_pure": self.K_pure,
            "K_mixed": self.K_mixed,
            "K": self.K,
            "c": list(self.c),
            "upper_energy": self.upper_energy,
            "assembly": self.assembly,
        }


def cluster_count_bound(p: ProblemParams, m_B=None) -> BoundsReport:
    """Assemble K(M1, M2, gamma11, gamma22).

    ``m_B`` optionally supplies the ball-minimality thresholds from the
    literature; when given they cap the merge thresholds.
    """
    cap = p.M1 + p.M2
    k = p.kernel_prefactor
    m_S = [merge_threshold(p.gamma11 * k, cap), merge_threshold(p.gamma22 * k, cap)]
    if m_B is not None:
        m_S = [min(s, b) for s, b in zip(m_S, m_B)]
    k_pure = sum(1 + math.floor(M / s) for M, s in zip((p.M1, p.M2), m_S))
    m_plus = largest_cluster_lower_bound(p)
    H = H_constants(p, m_plus)
    eps = min(floor_from_H(H))
    k_mixed = 2 + math.floor((p.M1 + p.M2) / eps)
    return BoundsReport(
        m_S=tuple(m_S),
        m_plus_lb=m_plus,
        H=H,
        eps_min=eps,
        K_pure=k_pure,
        K_mixed=k_mixed,
        K=k_pure + k_mixed,
        upper_energy=two_ball_upper_bound(p),
    )
