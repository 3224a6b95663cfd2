"""Cluster energy E(Omega_1, Omega_2) and configuration energy.

E = sum_{0<=i<j<=2} H^2(dOmega_i & dOmega_j) + sum_{i,j=1,2} gamma_ij I(Omega_i, Omega_j)

so the interior wall of a double bubble is counted once and the (1,2) cross
integral twice.  Clusters do not interact; a configuration's energy is the
plain sum over its clusters.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .coulomb import (
    DEFAULT_SPEC,
    CoulombValue,
    QuadratureSpec,
    ball_pair_interaction,
    ball_self_energy,
    bubble_coulomb,
)
from .geometry import solve_double_bubble, sphere_area
from .model import ClusterAnsatz, Configuration, ProblemParams, SeparatedBalls, SingleBall


@dataclass(frozen=True)
class EnergyBreakdown:
    perimeter: float
    self1: float
    self2: float
    cross: float
    total: float
    std_error: float = 0.0
    relaxed: bool = False

    @classmethod
    def from_terms(cls, perimeter, self1=0.0, self2=0.0, cross=0.0, std_error=0.0, relaxed=False):
        return cls(perimeter, self1, self2, cross, perimeter + self1 + self2 + cross, std_error, relaxed)

    def __add__(self, other: "EnergyBreakdown") -> "EnergyBreakdown":
        return EnergyBreakdown(
            self.perimeter + other.perimeter,
            self.self1 + other.self1,
            self.self2 + other.self2,
            self.cross + other.cross,
            self.total + other.total,
            math.hypot(self.std_error, other.std_error),
            self.relaxed or other.relaxed,
        )

    def as_dict(self) -> dict:
        return {
            "perimeter": self.perimeter,
            "self1": self.self1,
            "self2": self.self2,
            "cross": self.cross,
            "total": self.total,
            "std_error": self.std_error,
            "relaxed": self.relaxed,
        }


def _weighted(coef: float, compute) -> CoulombValue:
    # zero coefficients skip the quadrature entirely
    if coef == 0:
        return CoulombValue(0.0, 0.0)
    return compute().scaled(coef)


def cluster_energy(a: ClusterAnsatz, p: ProblemParams, spec: QuadratureSpec = DEFAULT_SPEC) -> EnergyBreakdown:
    k = p.kernel_prefactor
    shape = a.shape
    if isinstance(shape, SingleBall):
        m = a.m1 if shape.phase == 1 else a.m2
        gamma = p.gamma11 if shape.phase == 1 else p.gamma22
        self_term = _weighted(gamma * k, lambda: ball_self_energy(m)).value
        if shape.phase == 1:
            return EnergyBreakdown.from_terms(sphere_area(m), self1=self_term)
        return EnergyBreakdown.from_terms(sphere_area(m), self2=self_term)

    if isinstance(shape, SeparatedBalls):
        s1 = _weighted(p.gamma11 * k, lambda: ball_self_energy(a.m1))
        s2 = _weighted(p.gamma22 * k, lambda: ball_self_energy(a.m2))
        cr = _weighted(2 * p.gamma12 * k, lambda: ball_pair_interaction(a.m1, a.m2, shape.center_distance))
        return EnergyBreakdown.from_terms(
            sphere_area(a.m1) + sphere_area(a.m2), s1.value, s2.value, cr.value, relaxed=True
        )

    g = solve_double_bubble(a.m1, a.m2)
    s1 = _weighted(p.gamma11 * k, lambda: bubble_coulomb(g, (1, 1), spec))
    s2 = _weighted(p.gamma22 * k, lambda: bubble_coulomb(g, (2, 2), spec))
    cr = _weighted(2 * p.gamma12 * k, lambda: bubble_coulomb(g, (1, 2), spec))
    err = math.sqrt(s1.std_error**2 + s2.std_error**2 + cr.std_error**2)
    return EnergyBreakdown.from_terms(g.area, s1.value, s2.value, cr.value, err)


def configuration_energy(c: Configuration, spec: QuadratureSpec = DEFAULT_SPEC) -> EnergyBreakdown:
    """Sum of cluster energies in index order."""
    if not c.clusters:
        raise ValueError("configuration has no clusters")
    total = None
    for a in c.clusters:
        e = cluster_energy(a, c.params, spec)
        total = e if total is None else total + e
    return total


def two_ball_energy(M1: float, M2: float, gamma11: float, gamma22: float, kernel_prefactor: float = 1.0) -> float:
    """Energy of one pure ball per phase; the cross coefficient never enters."""
    return sum(
        sphere_area(m) + gamma * kernel_prefactor * ball_self_energy(m).value
        for m, gamma in ((M1, gamma11), (M2, gamma22))
    )


def two_ball_upper_bound(p: ProblemParams) -> float:
    """Upper bound on the optimal energy: the two-ball competitor."""
    return two_ball_energy(p.M1, p.M2, p.gamma11, p.gamma22, p.kernel_prefactor)
