"""Mass-transfer competitors against small mixed clusters.

Given a mixed cluster k with masses (e1, e2) and the cluster holding the
largest phase-1 mass m1+ (with phase-2 mass m2), case 1 moves e1 of phase 1
and r*m2 of phase 2 (r = e1/m1+) into that cluster, dilating it by
(1+r)^(1/3), and leaves a pure phase-2 ball of mass e2 - r*m2 behind.  Case 2
is the mirror image using the cluster with the largest phase-2 mass.  When
the case-1 ratio test fails the case-2 test holds, so every mixed cluster
admits one of the two moves.

Ties for "largest cluster" go to the lowest index.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .bounds import floor_from_H
from .coulomb import DEFAULT_SPEC, QuadratureSpec
from .energy import cluster_energy, two_ball_upper_bound
from .errors import IndexOutOfRange, NotMixed, PreconditionViolated
from .geometry import HUTCHINGS_C, double_bubble_area
from .model import ClusterAnsatz, ClusterMasses, Configuration, apply_mass_transfer, ball


@dataclass(frozen=True)
class CompetitorMove:
    case_tag: str
    source_k: int
    target: int
    r: float
    result: Configuration
    energy_delta_bound: float
    eps: tuple
    H: float
    ball_mass: float
    ball_phase: int


def largest(c: Configuration, phase: int) -> int:
    masses = [a.m1 if phase == 1 else a.m2 for a in c.clusters]
    best = max(masses)
    return masses.index(best)


def actual_H(c: Configuration):
    """H_1, H_2 built from the configuration's own largest masses."""
    u = two_ball_upper_bound(c.params)
    m1p = c.clusters[largest(c, 1)].m1
    n2p = c.clusters[largest(c, 2)].m2
    return 3.0 * u / m1p, 3.0 * u / n2p


def actual_floor(c: Configuration) -> float:
    """Mixed-mass floor with H taken from the actual m1+ and n2+."""
    return min(floor_from_H(actual_H(c)))


def _check_source(c: Configuration, k: int):
    n = len(c.clusters)
    if not 0 <= k < n:
        raise IndexOutOfRange(f"cluster index {k} out of range for {n} clusters")
    a = c.clusters[k]
    if not a.masses.is_mixed:
        raise NotMixed(f"cluster {k} has masses ({a.m1!r}, {a.m2!r}); both must be > 0")
    return a


def _move(c: Configuration, k: int, phase: int) -> CompetitorMove:
    """Case 1 for phase 1, case 2 for phase 2."""
    src = _check_source(c, k)
    other = 3 - phase
    t = largest(c, phase)
    if t == k:
        raise PreconditionViolated(f"cluster {k} carries the largest phase-{phase} mass")
    tgt = c.clusters[t]
    top, top_other = tgt.masses[phase], tgt.masses[other]
    e_main, e_other = src.masses[phase], src.masses[other]
    # ratio test top/top_other >= e_main/e_other, cross-multiplied
    if top * e_other < e_main * top_other:
        raise PreconditionViolated(
            f"case {phase} ratio test fails for cluster {k}: {top!r}/{top_other!r} < {e_main!r}/{e_other!r}"
        )
    r = e_main / top
    d_other = min(r * top_other, e_other)
    d = (e_main, d_other) if phase == 1 else (d_other, e_main)
    moved = apply_mass_transfer(c, k, t, *d)
    # the receiving cluster must be the exact dilation of the old one
    t_new = t if t < k or len(moved.clusters) == len(c.clusters) else t - 1
    clusters = list(moved.clusters)
    clusters[t_new] = tgt.dilated(1.0 + r)
    _fix_masses(clusters, t_new, tgt, d)
    result = moved.with_clusters(clusters)

    H = actual_H(c)[phase - 1]
    bound = e_main * H - HUTCHINGS_C * e_main ** (2.0 / 3.0)
    return CompetitorMove(
        case_tag=f"Case{phase}",
        source_k=k,
        target=t,
        r=r,
        result=result,
        energy_delta_bound=bound,
        eps=(src.m1, src.m2),
        H=H,
        ball_mass=e_other - d_other,
        ball_phase=other,
    )


def _fix_masses(clusters, i, old, d):
    # dilated() multiplies masses by 1+r; overwrite with the transferred sums so
    # mass bookkeeping stays exact
    new = clusters[i]
    clusters[i] = ClusterAnsatz(ClusterMasses(old.m1 + d[0], old.m2 + d[1]), new.shape)


def case1_move(c: Configuration, k: int) -> CompetitorMove:
    return _move(c, k, 1)


def case2_move(c: Configuration, k: int) -> CompetitorMove:
    return _move(c, k, 2)


def dispatch_move(c: Configuration, k: int) -> CompetitorMove:
    """Case 1 when its ratio test holds (ties included), else case 2."""
    src = _check_source(c, k)
    t1 = c.clusters[largest(c, 1)]
    if t1.m1 * src.m2 >= src.m1 * t1.m2:
        return case1_move(c, k)
    return case2_move(c, k)


@dataclass(frozen=True)
class ChainReport:
    case_tag: str
    r: float
    eps_main: float
    floor: float
    improving: bool
    scaling_margin: float
    scaling_std_error: float
    perimeter_margin: float
    source_margin: float
    delta_bound: float
    delta_actual: float
    delta_std_error: float
    target_energy: float
    upper_energy: float

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def verify_chain(c: Configuration, mv: CompetitorMove, spec: QuadratureSpec = DEFAULT_SPEC) -> ChainReport:
    """Evaluate every link of the competitor estimate numerically.

    Margins are slacks: >= 0 means the link holds.
      scaling_margin   (1+3r) E(target) - E(dilated target)
      perimeter_margin -c e^(2/3) - [S(ball) - S(e1, e2)]
      source_margin    -c e^(2/3) - [E(ball) - E(cluster k)]
    ``improving`` is set when e < (c/H)^3, i.e. the bound e H - c e^(2/3)
    is negative and an optimal configuration could not contain cluster k.
    """
    p = c.params
    src = _check_source(c, mv.source_k)
    phase = 1 if mv.case_tag == "Case1" else 2
    e_main = src.masses[phase]
    tgt = c.clusters[mv.target]
    scaled = tgt.dilated(1.0 + mv.r)

    e_t = cluster_energy(tgt, p, spec)
    e_scaled = cluster_energy(scaled, p, spec)
    # same seed on a dilated shape: the quadrature noise is common to both
    scale_err = e_t.std_error * abs((1 + mv.r) ** (5.0 / 3.0) - 1.0)

    e_src = cluster_energy(src, p, spec)
    if mv.ball_mass > 0:
        e_ball = cluster_energy(ball(mv.ball_mass, mv.ball_phase), p, spec).total
        s_ball = double_bubble_area(mv.ball_mass, 0.0)
    else:
        e_ball = s_ball = 0.0
    drop = HUTCHINGS_C * e_main ** (2.0 / 3.0)
    perimeter_margin = -drop - (s_ball - double_bubble_area(src.m1, src.m2))
    source_margin = -drop - (e_ball - e_src.total)

    delta = (e_scaled.total - e_t.total) + (e_ball - e_src.total)
    floor = (HUTCHINGS_C / mv.H) ** 3
    return ChainReport(
        case_tag=mv.case_tag,
        r=mv.r,
        eps_main=e_main,
        floor=floor,
        improving=e_main < floor,
        scaling_margin=(1 + 3 * mv.r) * e_t.total - e_scaled.total,
        scaling_std_error=scale_err,
        perimeter_margin=perimeter_margin,
        source_margin=source_margin,
        delta_bound=mv.energy_delta_bound,
        delta_actual=delta,
        delta_std_error=math.hypot(scale_err, e_src.std_error),
        target_energy=e_t.total,
        upper_energy=two_ball_upper_bound(p),
    )
