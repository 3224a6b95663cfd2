"""Coulomb integrals  I(A, B) = int_A int_B |x - y|^-1 dx dy.

Balls have closed forms.  Double-bubble lobes are integrated by Monte-Carlo
pair sampling (the kernel is integrable in 3D and 1/|x-y|^2 is too, so the
plain estimator has finite variance) or by a deterministic voxel sum.  Both
quadratures work on the bubble rescaled to unit total volume and multiply by
``(m1 + m2)**(5/3)``, which makes the mass scaling law exact for a fixed seed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import kernels
from .errors import ConvergenceFailure, InvalidQuadrature, NegativeMass, OverlappingBalls
from .geometry import DoubleBubbleGeometry, solve_double_bubble
from .model import ball_radius

# int_B int_B |x-y|^-1 for the unit-volume ball: (32 pi^2 / 15) R^5, R = (3/(4 pi))^(1/3)
KAPPA = 32.0 * math.pi**2 / 15.0 * (3.0 / (4.0 * math.pi)) ** (5.0 / 3.0)
# same integral over the unit cube, from a singularity-free 3D quadrature
C_CUBE = 1.88231264438966

N_BATCHES = 16
MAX_REL_ERROR = 0.01
METHODS = ("analytic", "monte_carlo", "voxel")
_MEDIAN_EFFICIENCY = math.sqrt(math.pi / 2.0)


@dataclass(frozen=True)
class QuadratureSpec:
    method: str = "monte_carlo"
    samples: int = 1_000_000
    grid_h: float | None = None
    seed: int = 42

    def __post_init__(self):
        if self.method not in METHODS:
            raise InvalidQuadrature(f"method must be one of {METHODS}, got {self.method!r}", field="method")
        if self.method == "monte_carlo" and not (isinstance(self.samples, int) and self.samples >= 10_000):
            raise InvalidQuadrature(f"monte_carlo needs samples >= 1e4, got {self.samples!r}", field="samples")
        if self.method == "voxel" and not (self.grid_h is not None and self.grid_h > 0):
            raise InvalidQuadrature(f"voxel needs grid_h > 0, got {self.grid_h!r}", field="grid_h")
        if not (isinstance(self.seed, int) and 0 <= self.seed < 2**64):
            raise InvalidQuadrature(f"seed must be a 64-bit unsigned integer, got {self.seed!r}", field="seed")


DEFAULT_SPEC = QuadratureSpec()


@dataclass(frozen=True)
class CoulombValue:
    value: float
    std_error: float = 0.0

    def __add__(self, other):
        return CoulombValue(self.value + other.value, math.hypot(self.std_error, other.std_error))

    def scaled(self, factor: float) -> "CoulombValue":
        return CoulombValue(self.value * factor, self.std_error * abs(factor))


def ball_self_energy(m: float) -> CoulombValue:
    if m < 0:
        raise NegativeMass(f"mass must be >= 0, got {m!r}")
    return CoulombValue(KAPPA * m ** (5.0 / 3.0), 0.0)


def ball_pair_interaction(m1: float, m2: float, d: float) -> CoulombValue:
    """Two disjoint balls interact like point masses (shell theorem)."""
    if m1 < 0 or m2 < 0:
        raise NegativeMass(f"masses must be >= 0, got ({m1!r}, {m2!r})")
    touch = ball_radius(m1) + ball_radius(m2)
    if not d >= touch * (1 - 1e-12) or d <= 0:
        raise OverlappingBalls(f"centre distance {d!r} < R1 + R2 = {touch!r}")
    return CoulombValue(m1 * m2 / d, 0.0)


def cube_self_correction(h: float) -> float:
    """Self interaction of a cube of side ``h``."""
    return C_CUBE * h**5


# -- sampling -----------------------------------------------------------------

def _rng(seed: int, *tags: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, *tags]))


def _rejection_sample(contains, box, n, rng):
    rho, lo, hi = box
    out = []
    have = 0
    accept = 0.5
    while have < n:
        k = int((n - have) / accept * 1.1) + 1024
        pts = np.empty((k, 3))
        pts[:, 0] = rng.uniform(-rho, rho, k)
        pts[:, 1] = rng.uniform(-rho, rho, k)
        pts[:, 2] = rng.uniform(lo, hi, k)
        mask = contains(pts)
        accept = max(mask.mean(), 1e-3)
        pts = pts[mask]
        out.append(pts)
        have += pts.shape[0]
    return np.ascontiguousarray(np.concatenate(out)[:n])


def sample_ball(n: int, rng: np.random.Generator, radius: float = 1.0, center=(0.0, 0.0, 0.0)) -> np.ndarray:
    """Uniform points in a ball (isotropic direction, radius ~ U^(1/3))."""
    d = rng.standard_normal((n, 3))
    d /= np.linalg.norm(d, axis=1)[:, None]
    d *= (radius * np.cbrt(rng.random(n)))[:, None]
    d += np.asarray(center, dtype=float)
    return np.ascontiguousarray(d)


def sample_lobe(g: DoubleBubbleGeometry, phase: int, n: int, rng: np.random.Generator) -> np.ndarray:
    return _rejection_sample(lambda p: g.contains(p, phase), g.lobe_box(phase), n, rng)


def pair_estimate(x: np.ndarray, y: np.ndarray, weight: float) -> CoulombValue:
    """Median-of-means estimate of ``weight * E[1/|X - Y|]`` from paired rows."""
    n = x.shape[0]
    edges = np.linspace(0, n, N_BATCHES + 1).astype(int)
    means = np.empty(N_BATCHES)
    total = total_sq = 0.0
    for b in range(N_BATCHES):
        s, s2 = kernels.pair_sums(x[edges[b]:edges[b + 1]], y[edges[b]:edges[b + 1]])
        means[b] = s / (edges[b + 1] - edges[b])
        total += s
        total_sq += s2
    mean = total / n
    var = max(total_sq / n - mean * mean, 0.0)
    se = _MEDIAN_EFFICIENCY * math.sqrt(var / n)
    return CoulombValue(weight * float(np.median(means)), weight * se)


def ball_self_energy_mc(m: float, samples: int = 1_000_000, seed: int = 42) -> CoulombValue:
    """Monte-Carlo estimate of the ball self-energy (independent of KAPPA)."""
    rng = _rng(seed, 7, 1)
    r = ball_radius(1.0)
    x = sample_ball(samples, rng, r)
    y = sample_ball(samples, rng, r)
    return pair_estimate(x, y, 1.0).scaled(m ** (5.0 / 3.0))


def ball_pair_interaction_mc(m1: float, m2: float, d: float, samples: int = 1_000_000, seed: int = 42) -> CoulombValue:
    rng = _rng(seed, 7, 2)
    x = sample_ball(samples, rng, ball_radius(m1))
    y = sample_ball(samples, rng, ball_radius(m2), center=(0.0, 0.0, d))
    return pair_estimate(x, y, m1 * m2)


# -- double bubble ------------------------------------------------------------

def _unit_geometry(g: DoubleBubbleGeometry):
    total = g.m1 + g.m2
    return solve_double_bubble(g.m1 / total, g.m2 / total), total


def _degenerate_coulomb(g: DoubleBubbleGeometry, phases) -> CoulombValue:
    # one lobe is below 1e-12 of the other: treat both as balls in contact
    i, j = phases
    m = {1: g.m1, 2: g.m2}
    if i == j:
        return ball_self_energy(m[i])
    big = max(g.m1, g.m2)
    return CoulombValue(g.m1 * g.m2 / ball_radius(big), 0.0)


def bubble_coulomb(g: DoubleBubbleGeometry, phases, spec: QuadratureSpec = DEFAULT_SPEC) -> CoulombValue:
    """I(lobe_i, lobe_j) for a standard double bubble."""
    i, j = phases
    if i not in (1, 2) or j not in (1, 2):
        raise InvalidQuadrature(f"phases must be in {{1, 2}}, got {phases!r}")
    if spec.method == "analytic":
        raise InvalidQuadrature("double bubble lobes have no closed form; use monte_carlo or voxel", field="method")
    if g.degenerate:
        return _degenerate_coulomb(g, phases)
    unit, total = _unit_geometry(g)
    scale = total ** (5.0 / 3.0)
    if spec.method == "monte_carlo":
        val = _bubble_mc(unit, min(i, j), max(i, j), spec.samples, spec.seed)
        if val.std_error > MAX_REL_ERROR * val.value:
            raise ConvergenceFailure(
                f"relative std error {val.std_error / val.value:.3g} > {MAX_REL_ERROR} with {spec.samples} samples"
            )
    else:
        h_unit = spec.grid_h / total ** (1.0 / 3.0)
        val = CoulombValue(_bubble_voxel(unit, min(i, j), max(i, j), h_unit), 0.0)
    return val.scaled(scale)


@lru_cache(maxsize=256)
def _bubble_mc(unit: DoubleBubbleGeometry, i: int, j: int, n: int, seed: int) -> CoulombValue:
    rng = _rng(seed, i, j)
    x = sample_lobe(unit, i, n, rng)
    y = sample_lobe(unit, j, n, rng)
    return pair_estimate(x, y, unit.m1 if i == 1 else unit.m2) .scaled(unit.m1 if j == 1 else unit.m2)


# -- voxel --------------------------------------------------------------------

def voxel_cells(contains, box, h: float) -> np.ndarray:
    """Centres of the lattice cells (spacing h, centred at h/2 offsets) inside a region."""
    rho, lo, hi = box
    nx = int(math.ceil(rho / h)) + 1
    xs = (np.arange(-nx, nx) + 0.5) * h
    zs = (np.arange(math.floor(lo / h) - 1, math.ceil(hi / h) + 1) + 0.5) * h
    gx, gy, gz = np.meshgrid(xs, xs, zs, indexing="ij")
    pts = np.column_stack([gx.ravel(), gy.ravel(), gz.ravel()])
    return np.ascontiguousarray(pts[contains(pts)])


def voxel_integral(cells_a: np.ndarray, vol_a: float, cells_b: np.ndarray | None, vol_b: float, h: float) -> float:
    """Midpoint double sum; ``cells_b=None`` means the self integral of A.

    Cell weights are rescaled so each region carries its exact volume; the
    remaining error is the O(h) boundary discretisation bias.
    """
    na = cells_a.shape[0]
    if na == 0:
        raise ConvergenceFailure(f"grid spacing {h!r} resolves no cells")
    wa = vol_a / na
    if cells_b is None:
        off = kernels.cross_sum(cells_a, cells_a, True)
        return wa * wa * off + na * cube_self_correction(h) * (wa / h**3) ** 2
    nb = cells_b.shape[0]
    if nb == 0:
        raise ConvergenceFailure(f"grid spacing {h!r} resolves no cells")
    return wa * (vol_b / nb) * kernels.cross_sum(cells_a, cells_b, False)


def _bubble_voxel(unit: DoubleBubbleGeometry, i: int, j: int, h: float) -> float:
    vols = {1: unit.m1, 2: unit.m2}
    ca = voxel_cells(lambda p: unit.contains(p, i), unit.lobe_box(i), h)
    if i == j:
        return voxel_integral(ca, vols[i], None, 0.0, h)
    cb = voxel_cells(lambda p: unit.contains(p, j), unit.lobe_box(j), h)
    return voxel_integral(ca, vols[i], cb, vols[j], h)


def ball_self_energy_voxel(m: float, h: float) -> float:
    r = ball_radius(m)
    cells = voxel_cells(lambda p: (p**2).sum(axis=1) <= r * r, (r, -r, r), h)
    return voxel_integral(cells, m, None, 0.0, h)


def voxel_bias_bound(value: float, h: float, length: float) -> float:
    """Documented bound on the voxel discretisation bias: ``2 * (h / length) * value``."""
    return 2.0 * (h / length) * value
