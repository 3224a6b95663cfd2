"""Domain types: problem parameters, cluster shapes and configurations.

All objects are frozen dataclasses validated at construction, so any instance
that exists satisfies its invariants.  Cluster positions are never stored:
clusters do not interact, so a configuration is just a list of shapes with
their two phase masses.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Union

from .errors import (
    IndexOutOfRange,
    InsufficientMass,
    InvalidAnsatz,
    MassMismatch,
    NegativeGamma,
    NegativeMass,
    NonPositiveMass,
)

MASS_RTOL = 1e-12


def ball_radius(m: float) -> float:
    """Radius of the ball of volume ``m``."""
    return (3.0 * m / (4.0 * math.pi)) ** (1.0 / 3.0)


@dataclass(frozen=True)
class ProblemParams:
    """Total phase masses and the symmetric interaction matrix.

    ``kernel_prefactor`` multiplies every Coulomb integral; leave it at 1 for
    the bare ``|x-y|^-1`` kernel, or set ``1/(4*pi)`` for the Green's function
    normalisation.
    """

    M1: float
    M2: float
    gamma11: float = 1.0
    gamma12: float = 1.0
    gamma22: float = 1.0
    kernel_prefactor: float = 1.0

    def __post_init__(self):
        validate_params(self)

    @property
    def gamma(self):
        return ((self.gamma11, self.gamma12), (self.gamma12, self.gamma22))

    @property
    def total_mass(self) -> float:
        return self.M1 + self.M2


def validate_params(p: ProblemParams) -> bool:
    """Return True if ``p`` is admissible, raise otherwise."""
    for name in ("M1", "M2"):
        v = getattr(p, name)
        if not (math.isfinite(v) and v > 0):
            raise NonPositiveMass(f"{name} must be a positive finite mass, got {v!r}", field=name)
    for name in ("gamma11", "gamma12", "gamma22"):
        v = getattr(p, name)
        if not (math.isfinite(v) and v >= 0):
            raise NegativeGamma(f"{name} must be finite and >= 0, got {v!r}", field=name)
    if not (math.isfinite(p.kernel_prefactor) and p.kernel_prefactor > 0):
        raise NegativeGamma(
            f"kernel_prefactor must be positive, got {p.kernel_prefactor!r}", field="kernel_prefactor"
        )
    return True


@dataclass(frozen=True)
class ClusterMasses:
    m1: float
    m2: float

    def __post_init__(self):
        for name in ("m1", "m2"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0):
                raise NegativeMass(f"{name} must be finite and >= 0, got {v!r}", field=name)
        if self.m1 + self.m2 <= 0:
            raise NonPositiveMass("empty cluster: m1 + m2 must be > 0")

    @property
    def total(self) -> float:
        return self.m1 + self.m2

    @property
    def is_mixed(self) -> bool:
        return self.m1 > 0 and self.m2 > 0

    def __getitem__(self, phase: int) -> float:
        if phase == 1:
            return self.m1
        if phase == 2:
            return self.m2
        raise IndexOutOfRange(f"phase must be 1 or 2, got {phase!r}")


@dataclass(frozen=True)
class SingleBall:
    phase: int

    def __post_init__(self):
        if self.phase not in (1, 2):
            raise InvalidAnsatz(f"SingleBall phase must be 1 or 2, got {self.phase!r}")


@dataclass(frozen=True)
class StandardDoubleBubble:
    pass


@dataclass(frozen=True)
class SeparatedBalls:
    """Two disjoint balls, one per phase.

    Not connected, so as a single cluster this is a relaxation of the model;
    reports carry ``relaxed=True`` for it.
    """

    center_distance: float


Shape = Union[SingleBall, StandardDoubleBubble, SeparatedBalls]


@dataclass(frozen=True)
class ClusterAnsatz:
    masses: ClusterMasses
    shape: Shape

    def __post_init__(self):
        m = self.masses
        s = self.shape
        if isinstance(s, SingleBall):
            other = m.m2 if s.phase == 1 else m.m1
            if other != 0:
                raise InvalidAnsatz(f"SingleBall(phase={s.phase}) needs the other phase empty")
        elif isinstance(s, (StandardDoubleBubble, SeparatedBalls)):
            if not m.is_mixed:
                raise InvalidAnsatz(f"{type(s).__name__} needs both phase masses > 0")
            if isinstance(s, SeparatedBalls):
                touch = ball_radius(m.m1) + ball_radius(m.m2)
                if not (math.isfinite(s.center_distance) and s.center_distance >= touch * (1 - 1e-12)):
                    raise InvalidAnsatz(
                        f"SeparatedBalls distance {s.center_distance!r} < tangency {touch!r}"
                    )
        else:
            raise InvalidAnsatz(f"unknown shape {s!r}")

    @property
    def m1(self) -> float:
        return self.masses.m1

    @property
    def m2(self) -> float:
        return self.masses.m2

    @property
    def relaxed(self) -> bool:
        return isinstance(self.shape, SeparatedBalls)

    @property
    def shape_tag(self) -> str:
        return type(self.shape).__name__

    def dilated(self, factor: float) -> "ClusterAnsatz":
        """Masses times ``factor``; lengths times ``factor**(1/3)``."""
        shape = self.shape
        if isinstance(shape, SeparatedBalls):
            shape = SeparatedBalls(shape.center_distance * factor ** (1.0 / 3.0))
        return ClusterAnsatz(ClusterMasses(self.m1 * factor, self.m2 * factor), shape)


def ball(m: float, phase: int) -> ClusterAnsatz:
    if phase == 1:
        return ClusterAnsatz(ClusterMasses(m, 0.0), SingleBall(1))
    return ClusterAnsatz(ClusterMasses(0.0, m), SingleBall(2))


def double_bubble(m1: float, m2: float) -> ClusterAnsatz:
    return ClusterAnsatz(ClusterMasses(m1, m2), StandardDoubleBubble())


def separated_balls(m1: float, m2: float, distance: float) -> ClusterAnsatz:
    return ClusterAnsatz(ClusterMasses(m1, m2), SeparatedBalls(distance))


def cluster_for(m1: float, m2: float, prefer: Shape | None = None) -> ClusterAnsatz:
    """Default ansatz for the given masses (ball if pure, else ``prefer``)."""
    if m2 == 0:
        return ball(m1, 1)
    if m1 == 0:
        return ball(m2, 2)
    if prefer is None or isinstance(prefer, SingleBall):
        prefer = StandardDoubleBubble()
    return ClusterAnsatz(ClusterMasses(m1, m2), prefer)


@dataclass(frozen=True)
class Configuration:
    params: ProblemParams
    clusters: tuple = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "clusters", tuple(self.clusters))
        for c in self.clusters:
            if not isinstance(c, ClusterAnsatz):
                raise InvalidAnsatz(f"not a ClusterAnsatz: {c!r}")
        s1, s2 = total_masses(self)
        for name, got, want in (("M1", s1, self.params.M1), ("M2", s2, self.params.M2)):
            if abs(got - want) > MASS_RTOL * want:
                raise MassMismatch(f"cluster masses sum to {got!r}, expected {name}={want!r}", field=name)

    def __len__(self):
        return len(self.clusters)

    def __iter__(self):
        return iter(self.clusters)

    def __getitem__(self, k):
        return self.clusters[k]

    def with_clusters(self, clusters) -> "Configuration":
        return replace(self, clusters=tuple(clusters))


def total_masses(c: Configuration) -> tuple[float, float]:
    return (
        math.fsum(a.m1 for a in c.clusters),
        math.fsum(a.m2 for a in c.clusters),
    )


def _reshaped(old: ClusterAnsatz, m1: float, m2: float) -> ClusterAnsatz:
    shape = old.shape
    if isinstance(shape, SeparatedBalls) and m1 > 0 and m2 > 0:
        grow = max(
            ball_radius(m1) / ball_radius(old.m1) if old.m1 > 0 else 1.0,
            ball_radius(m2) / ball_radius(old.m2) if old.m2 > 0 else 1.0,
        )
        d = max(shape.center_distance * grow, ball_radius(m1) + ball_radius(m2))
        shape = SeparatedBalls(d)
    return cluster_for(m1, m2, shape)


def apply_mass_transfer(c: Configuration, src: int, dst: int, d1: float, d2: float) -> Configuration:
    """Move ``(d1, d2)`` from cluster ``src`` to cluster ``dst``.

    Pure clusters stay balls, clusters that become mixed turn into standard
    double bubbles, and a source cluster emptied completely is removed.
    """
    n = len(c.clusters)
    for name, k in (("from", src), ("to", dst)):
        if not (0 <= k < n):
            raise IndexOutOfRange(f"{name} index {k} out of range for {n} clusters")
    if src == dst:
        raise IndexOutOfRange("from and to must differ")
    a, b = c.clusters[src], c.clusters[dst]
    amounts = []
    for name, d, have in (("d1", d1, a.m1), ("d2", d2, a.m2)):
        if d < 0 or not math.isfinite(d):
            raise InsufficientMass(f"{name}={d!r} must be >= 0", field=name)
        if d > have:
            if d - have > MASS_RTOL * max(have, 1e-300):
                raise InsufficientMass(f"{name}={d!r} exceeds available {have!r}", field=name)
            d = have
        amounts.append(d)
    d1, d2 = amounts
    if d1 == 0 and d2 == 0:
        return c

    clusters = list(c.clusters)
    clusters[dst] = _reshaped(b, b.m1 + d1, b.m2 + d2)
    r1, r2 = a.m1 - d1, a.m2 - d2
    if r1 == 0 and r2 == 0:
        del clusters[src]
    else:
        clusters[src] = _reshaped(a, r1, r2)
    return c.with_clusters(clusters)
