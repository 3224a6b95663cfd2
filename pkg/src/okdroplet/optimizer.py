"""Search for low-energy cluster mass partitions.

Each cluster (m1, m2) is scored by ``e0``: the lowest energy over the ansatz
family (ball for pure clusters; standard double bubble or a separated ball
pair for mixed ones).  This is an upper relaxation of the true single-cluster
infimum.  Partitions are searched by simulated annealing followed by greedy
descent and a competitor self-check.

Double-bubble Coulomb integrals are homogeneous of degree 5/3 in total mass,
so the search memoises them once per quadrature spec as shape factors on a
1D table in the phase-2 volume fraction.
"""
from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.interpolate import PchipInterpolator

from .bounds import cluster_count_bound
from .competitors import actual_floor, dispatch_move, largest
from .coulomb import DEFAULT_SPEC, KAPPA, QuadratureSpec, bubble_coulomb
from .energy import cluster_energy, two_ball_upper_bound
from .errors import PreconditionViolated
from .geometry import double_bubble_area, hutchings_lower_bound, solve_double_bubble, sphere_area
from .model import (
    ClusterAnsatz,
    ClusterMasses,
    Configuration,
    ProblemParams,
    SeparatedBalls,
    StandardDoubleBubble,
    ball,
    ball_radius,
)

SEPARATION_CAP = 20.0
TABLE_NODES = tuple(float(t) for t in np.geomspace(1e-3, 0.5, 14))
TABLE_SPEC = QuadratureSpec("monte_carlo", 200_000, None, 42)
DEFAULT_BUDGET = 5000
MAX_SEARCH_CLUSTERS = 64
DESCENT_RTOL = 1e-11
DESCENT_MAX_MOVES = 20_000
COOLING = 0.95
PROPOSALS_PER_T = 100
GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def golden_section(f, lo: float, hi: float, tol: float = 1e-10, max_iter: int = 200):
    """Minimise a unimodal ``f`` on [lo, hi]; returns (x, f(x))."""
    a, b = lo, hi
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if b - a <= tol * max(1.0, abs(a) + abs(b)):
            break
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = f(d)
    # the endpoints are admissible and often optimal (monotone cross term)
    cands = [(fc, c), (fd, d), (f(lo), lo), (f(hi), hi)]
    fx, x = min(cands)
    return x, fx


def separated_balls_best(m1: float, m2: float, p: ProblemParams):
    """SeparatedBalls energy minimised over the centre distance."""
    touch = ball_radius(m1) + ball_radius(m2)
    k = p.kernel_prefactor
    base = (
        sphere_area(m1)
        + sphere_area(m2)
        + k * (p.gamma11 * KAPPA * m1 ** (5 / 3) + p.gamma22 * KAPPA * m2 ** (5 / 3))
    )
    cross = 2.0 * p.gamma12 * k * m1 * m2
    d, e = golden_section(lambda d: base + cross / d, touch, SEPARATION_CAP * touch)
    return e, d


def _separated_endpoint(m1: float, m2: float, p: ProblemParams):
    """Closed form of :func:`separated_balls_best`.

    base + cross / d is nonincreasing in d, so the golden-section search
    returns the far endpoint (or tangency when the cross term vanishes).
    """
    touch = ball_radius(m1) + ball_radius(m2)
    k = p.kernel_prefactor
    base = (
        sphere_area(m1)
        + sphere_area(m2)
        + k * (p.gamma11 * KAPPA * m1 ** (5 / 3) + p.gamma22 * KAPPA * m2 ** (5 / 3))
    )
    cross = 2.0 * p.gamma12 * k * m1 * m2
    if cross == 0:
        return base, touch
    hi = SEPARATION_CAP * touch
    return base + cross / hi, hi


def best_ansatz(m1: float, m2: float, p: ProblemParams, spec: QuadratureSpec = DEFAULT_SPEC):
    """(energy, ansatz) minimising the cluster energy over the ansatz family."""
    if m1 + m2 <= 0:
        raise ValueError("m1 + m2 must be > 0")
    if m1 == 0 or m2 == 0:
        a = ball(m1, 1) if m2 == 0 else ball(m2, 2)
        return cluster_energy(a, p, spec).total, a
    e_sep, d = separated_balls_best(m1, m2, p)
    db = ClusterAnsatz(ClusterMasses(m1, m2), StandardDoubleBubble())
    e_db = cluster_energy(db, p, spec).total
    if e_db <= e_sep:
        return e_db, db
    return e_sep, ClusterAnsatz(ClusterMasses(m1, m2), SeparatedBalls(d))


def e0_approx(m1: float, m2: float, p: ProblemParams, spec: QuadratureSpec = DEFAULT_SPEC):
    """Ansatz approximation of e0(m1, m2): returns (energy, shape tag)."""
    e, a = best_ansatz(m1, m2, p, spec)
    return e, a.shape_tag


# -- memoised double-bubble Coulomb ------------------------------------------

@dataclass(frozen=True)
class BubbleTable:
    """Lobe Coulomb shape factors of the unit-volume double bubble.

    With t the smaller lobe's volume fraction (t <= 1/2), ``big``, ``small``
    and ``cross`` are I_bb / (KAPPA (1-t)^(5/3)), I_ss / (KAPPA t^(5/3)) and
    I_bs (R(1-t) + R(t)) / ((1-t) t).  Outside the node range the end values
    are held constant.
    """

    nodes: tuple
    big: tuple
    small: tuple
    cross: tuple

    def __post_init__(self):
        x = np.log(np.asarray(self.nodes))
        y = np.column_stack([self.big, self.small, self.cross])
        pp = PchipInterpolator(x, y)
        # plain-float piecewise cubic coefficients, evaluated by Horner below
        object.__setattr__(self, "_x", [float(v) for v in pp.x])
        object.__setattr__(self, "_c", pp.c.transpose(1, 2, 0).tolist())

    def factors(self, t: float):
        x = math.log(min(max(t, self.nodes[0]), self.nodes[-1]))
        i = min(max(bisect.bisect_right(self._x, x) - 1, 0), len(self._x) - 2)
        dx = x - self._x[i]
        return tuple(((c0 * dx + c1) * dx + c2) * dx + c3 for c0, c1, c2, c3 in self._c[i])

    def coulomb(self, m1: float, m2: float):
        """(I11, I22, I12) for a double bubble with volumes m1, m2."""
        swap = m2 > m1
        mb, ms = (m2, m1) if swap else (m1, m2)
        fb, fs, fc = self.factors(ms / (mb + ms))
        i_bb = fb * KAPPA * mb ** (5 / 3)
        i_ss = fs * KAPPA * ms ** (5 / 3)
        i_bs = fc * mb * ms / (ball_radius(mb) + ball_radius(ms))
        return (i_ss, i_bb, i_bs) if swap else (i_bb, i_ss, i_bs)


@lru_cache(maxsize=8)
def bubble_table(spec: QuadratureSpec = TABLE_SPEC, nodes: tuple = TABLE_NODES) -> BubbleTable:
    big, small, cross = [], [], []
    for t in nodes:
        g = solve_double_bubble(1.0 - t, t)
        big.append(bubble_coulomb(g, (1, 1), spec).value / (KAPPA * (1 - t) ** (5 / 3)))
        small.append(bubble_coulomb(g, (2, 2), spec).value / (KAPPA * t ** (5 / 3)))
        cross.append(bubble_coulomb(g, (1, 2), spec).value * (ball_radius(1 - t) + ball_radius(t)) / ((1 - t) * t))
    return BubbleTable(tuple(nodes), tuple(big), tuple(small), tuple(cross))


class ClusterScorer:
    """Memoised ``e0`` over the ansatz family using a :class:`BubbleTable`.

    ``scorer(m1, m2)`` returns (energy, ansatz); ``scorer.value(m1, m2)``
    returns the energy alone and skips building ansatz objects.
    """

    def __init__(self, p: ProblemParams, table: BubbleTable | None = None):
        self.p = p
        self.table = table if table is not None else bubble_table()
        self._cache = {}
        self._values = {}
        k = p.kernel_prefactor
        self._ball_coef = (p.gamma11 * k, p.gamma22 * k)

    def __call__(self, m1: float, m2: float):
        key = (m1, m2)
        hit = self._cache.get(key)
        if hit is None:
            hit = self._score(m1, m2)
            self._cache[key] = hit
        return hit

    def value(self, m1: float, m2: float) -> float:
        key = (m1, m2)
        v = self._values.get(key)
        if v is None:
            if m1 == 0 or m2 == 0:
                v = self._ball(m1 if m2 == 0 else m2, 0 if m2 == 0 else 1)
            else:
                v = self(m1, m2)[0]
            self._values[key] = v
        return v

    def _ball(self, m, ph):
        # same arithmetic as cluster_energy on a SingleBall
        coef = self._ball_coef[ph]
        self_term = KAPPA * m ** (5.0 / 3.0) * coef if coef != 0 else 0.0
        return sphere_area(m) + self_term

    def _score(self, m1, m2):
        p = self.p
        if m1 == 0 or m2 == 0:
            a = ball(m1, 1) if m2 == 0 else ball(m2, 2)
            return cluster_energy(a, p).total, a
        e_sep, d = _separated_endpoint(m1, m2, p)
        i11, i22, i12 = self.table.coulomb(m1, m2)
        k = p.kernel_prefactor
        e_db = double_bubble_area(m1, m2, verify=False) + k * (p.gamma11 * i11 + p.gamma22 * i22 + 2 * p.gamma12 * i12)
        if e_db <= e_sep:
            return e_db, ClusterAnsatz(ClusterMasses(m1, m2), StandardDoubleBubble())
        return e_sep, ClusterAnsatz(ClusterMasses(m1, m2), SeparatedBalls(d))

    def energy(self, state) -> float:
        return math.fsum(self.value(m1, m2) for m1, m2 in state)


# -- e0 surface ---------------------------------------------------------------

@dataclass(frozen=True)
class E0Surface:
    """e0 tabulated on a rectilinear (m1, m2) grid, bilinear in between.

    Interpolated values are exact at nodes; ``interp_error`` is the largest
    mid-cell gap between interpolation and direct evaluation (None if not
    estimated).
    """

    m1_grid: tuple
    m2_grid: tuple
    values: np.ndarray
    ansatz_winner: tuple
    interp_error: float | None = None

    def __call__(self, m1: float, m2: float) -> float:
        x, y = np.asarray(self.m1_grid), np.asarray(self.m2_grid)
        i = int(np.clip(np.searchsorted(x, m1, side="right") - 1, 0, max(len(x) - 2, 0)))
        j = int(np.clip(np.searchsorted(y, m2, side="right") - 1, 0, max(len(y) - 2, 0)))
        if len(x) == 1 and len(y) == 1:
            return float(self.values[0, 0])
        tx = 0.0 if len(x) == 1 else (m1 - x[i]) / (x[i + 1] - x[i])
        ty = 0.0 if len(y) == 1 else (m2 - y[j]) / (y[j + 1] - y[j])
        v = self.values
        i1 = min(i + 1, len(x) - 1)
        j1 = min(j + 1, len(y) - 1)
        return float(
            (1 - tx) * (1 - ty) * v[i, j] + tx * (1 - ty) * v[i1, j] + (1 - tx) * ty * v[i, j1] + tx * ty * v[i1, j1]
        )

    def envelope_violations(self, p: ProblemParams, tol: float = 1e-9):
        """Nodes outside [Hutchings bound, two separate balls + capped cross term]."""
        bad = []
        k = p.kernel_prefactor
        for a, m1 in enumerate(self.m1_grid):
            for b, m2 in enumerate(self.m2_grid):
                if m1 + m2 == 0:
                    continue
                v = self.values[a, b]
                lo = hutchings_lower_bound(m1, m2)
                hi = envelope_upper(m1, m2, p)
                if v < lo - tol or v > hi + tol:
                    bad.append((m1, m2, v, lo, hi))
        return bad


def envelope_upper(m1: float, m2: float, p: ProblemParams) -> float:
    """Two separate balls, plus the cross term left at the capped separation."""
    k = p.kernel_prefactor
    up = sphere_area(m1) + sphere_area(m2) + k * KAPPA * (p.gamma11 * m1 ** (5 / 3) + p.gamma22 * m2 ** (5 / 3))
    if m1 > 0 and m2 > 0:
        up += 2 * p.gamma12 * k * m1 * m2 / (SEPARATION_CAP * (ball_radius(m1) + ball_radius(m2)))
    return up


def build_e0_surface(p: ProblemParams, m1_grid, m2_grid, score=None, estimate_error: bool = False) -> E0Surface:
    """Tabulate e0 on a grid.  ``score(m1, m2) -> (energy, ansatz)`` defaults
    to a table-backed :class:`ClusterScorer`."""
    m1_grid = tuple(float(v) for v in m1_grid)
    m2_grid = tuple(float(v) for v in m2_grid)
    if not m1_grid or not m2_grid:
        raise ValueError("grid must be nonempty")
    score = score if score is not None else ClusterScorer(p)
    vals = np.zeros((len(m1_grid), len(m2_grid)))
    tags = []
    for a, m1 in enumerate(m1_grid):
        row = []
        for b, m2 in enumerate(m2_grid):
            if m1 + m2 == 0:
                row.append("Empty")
                continue
            e, ans = score(m1, m2)
            vals[a, b] = e
            row.append(ans.shape_tag)
        tags.append(tuple(row))
    surf = E0Surface(m1_grid, m2_grid, vals, tuple(tags))
    if estimate_error and len(m1_grid) > 1 and len(m2_grid) > 1:
        err = 0.0
        for a in range(len(m1_grid) - 1):
            for b in range(len(m2_grid) - 1):
                x = 0.5 * (m1_grid[a] + m1_grid[a + 1])
                y = 0.5 * (m2_grid[b] + m2_grid[b + 1])
                err = max(err, abs(surf(x, y) - score(x, y)[0]))
        surf = E0Surface(m1_grid, m2_grid, vals, tuple(tags), err)
    return surf


# -- partition search ---------------------------------------------------------

@dataclass(frozen=True)
class PartitionResult:
    configuration: Configuration
    energy: float
    iterations: int
    seed: int
    K: int
    history: tuple = field(default=(), repr=False)
    competitor_moves: int = 0

    def as_dict(self) -> dict:
        from .io import configuration_to_list

        return {
            "energy": self.energy,
            "iterations": self.iterations,
            "seed": self.seed,
            "K": self.K,
            "n_clusters": len(self.configuration.clusters),
            "competitor_moves": self.competitor_moves,
            "clusters": configuration_to_list(self.configuration),
        }


def _propose(state, rng, cap):
    n = len(state)
    kind = rng.integers(4)
    s = list(state)
    if kind == 0:  # split
        if n >= cap:
            return None
        i = int(rng.integers(n))
        m1, m2 = s[i]
        f = [float(v) for v in rng.random(2)]
        for q in (0, 1):
            u = float(rng.random())
            if u < 0.15:
                f[q] = 0.0
            elif u > 0.85:
                f[q] = 1.0
        a = (m1 * f[0], m2 * f[1])
        b = (m1 - a[0], m2 - a[1])
        if a[0] + a[1] <= 0 or b[0] + b[1] <= 0:
            return None
        s[i] = a
        s.append(b)
        return s
    if n < 2:
        return None
    i, j = (int(v) for v in rng.choice(n, size=2, replace=False))
    if kind == 1:  # merge
        s[i] = (s[i][0] + s[j][0], s[i][1] + s[j][1])
        del s[j]
        return s
    ph = int(rng.integers(2))
    src, dst = list(s[i]), list(s[j])
    if kind == 2:  # transfer
        if src[ph] <= 0:
            return None
        d = src[ph] * 0.2 * (1.0 - float(rng.random()))
        src[ph] -= d
        dst[ph] += d
    else:  # rebalance one phase between two clusters
        tot = src[ph] + dst[ph]
        if tot <= 0:
            return None
        src[ph] = tot * float(rng.random())
        dst[ph] = tot - src[ph]
    s[i], s[j] = tuple(src), tuple(dst)
    return [c for c in s if c[0] + c[1] > 0]


def _pair_moves(a, b, allow_merge):
    """Candidate replacements for the cluster pair (a, b)."""
    if allow_merge:
        yield ((a[0] + b[0], a[1] + b[1]),)
    for ph in (0, 1):
        if a[ph] <= 0:
            continue
        tot = a[ph] + b[ph]
        for frac in (1.0, 0.5, 0.1, 0.01):
            src, dst = list(a), list(b)
            d = src[ph] if frac == 1.0 else src[ph] * frac
            src[ph] -= d
            dst[ph] += d
            yield tuple(src), tuple(dst)
        if b[ph] < a[ph]:
            # even out the phase between the two clusters
            src, dst = list(a), list(b)
            src[ph] = tot / 2.0
            dst[ph] = tot - src[ph]
            yield tuple(src), tuple(dst)


def _class_moves(state, cap):
    """Whole-class moves: even out the pure clusters of a phase, redistribute
    them over one ball more or fewer, even out the mixed clusters, or unmix a
    single cluster into its two pure balls."""
    for ph in (0, 1):
        idx = [i for i, c in enumerate(state) if c[1 - ph] == 0 and c[ph] > 0]
        if not idx:
            continue
        rest = [c for i, c in enumerate(state) if i not in set(idx)]
        total = math.fsum(state[i][ph] for i in idx)
        counts = [len(idx), len(idx) - 1]
        if len(state) < cap:
            counts.append(len(idx) + 1)
        for n in counts:
            if n < 1:
                continue
            m = total / n
            pure = (m, 0.0) if ph == 0 else (0.0, m)
            yield rest + [pure] * n
    mixed = [i for i, c in enumerate(state) if c[0] > 0 and c[1] > 0]
    if len(mixed) > 1:
        rest = [c for i, c in enumerate(state) if i not in set(mixed)]
        mean = tuple(math.fsum(state[i][ph] for i in mixed) / len(mixed) for ph in (0, 1))
        yield rest + [mean] * len(mixed)
    if len(state) < cap:
        for i, c in enumerate(state):
            if c[0] > 0 and c[1] > 0:
                # pull a mixed cluster apart into its two pure balls
                yield state[:i] + state[i + 1:] + [(c[0], 0.0), (0.0, c[1])]


def _descend(state, score, cap):
    """Greedy descent with whole-phase moves, pairwise merge, transfer and
    even-out moves, and halving.  A move must gain more than DESCENT_RTOL of
    the total energy; pairwise scanning resumes in place after each accepted
    move.  At most DESCENT_MAX_MOVES moves are taken."""
    state = list(state)
    e_of = [score.value(*c) for c in state]
    tol = DESCENT_RTOL * abs(math.fsum(e_of))
    moves = 0
    changed = True
    while changed and moves < DESCENT_MAX_MOVES:
        changed = False
        moved = True
        while moved:
            moved = False
            base = math.fsum(e_of)
            for cand in _class_moves(state, cap):
                e = score.energy(cand)
                if e < base - tol:
                    state, e_of = cand, [score.value(*c) for c in cand]
                    moves += 1
                    moved = moves < DESCENT_MAX_MOVES
                    break
        i = 0
        while i < len(state):
            j = 0
            while j < len(state) and i < len(state):
                if i == j:
                    j += 1
                    continue
                base = e_of[i] + e_of[j]
                for cand in _pair_moves(state[i], state[j], i < j):
                    kept = [c for c in cand if c[0] + c[1] > 0]
                    new_e = [score.value(*c) for c in kept]
                    if sum(new_e) < base - tol:
                        if len(kept) == 2:
                            state[i], state[j] = kept
                            e_of[i], e_of[j] = new_e
                        else:
                            lo, hi = min(i, j), max(i, j)
                            state[lo], e_of[lo] = kept[0], new_e[0]
                            del state[hi], e_of[hi]
                            if hi == i:
                                i = lo
                        moves += 1
                        changed = True
                        j = -1
                        break
                j += 1
            i += 1
        if not changed and len(state) < cap:
            for i, c in enumerate(state):
                half = (c[0] / 2, c[1] / 2)
                e_half = score.value(*half)
                if 2 * e_half < e_of[i] - tol:
                    rest = (c[0] - half[0], c[1] - half[1])
                    state[i], e_of[i] = half, e_half
                    state.append(rest)
                    e_of.append(score.value(*rest))
                    changed = True
                    break
    return state, math.fsum(e_of)


def _exact_masses(state, p: ProblemParams):
    """Push the float drift of the phase sums into each phase's largest cluster."""
    s = [list(c) for c in state]
    for ph, M in ((0, p.M1), (1, p.M2)):
        k = max(range(len(s)), key=lambda i: s[i][ph])
        rest = math.fsum(c[ph] for i, c in enumerate(s) if i != k)
        s[k][ph] = M - rest
    return [tuple(c) for c in s]


def _to_configuration(state, p: ProblemParams, score) -> Configuration:
    return Configuration(p, tuple(score(m1, m2)[1] for m1, m2 in state))


def _competitor_pass(state, energy, p, score):
    """Apply flagged mass-transfer competitors that the scorer confirms."""
    applied = 0
    changed = True
    while changed:
        changed = False
        conf = _to_configuration(state, p, score)
        floor = actual_floor(conf)
        for k, a in enumerate(conf.clusters):
            if not a.masses.is_mixed:
                continue
            try:
                mv = dispatch_move(conf, k)
            except PreconditionViolated:
                continue
            main = a.m1 if mv.case_tag == "Case1" else a.m2
            if main >= floor:
                continue
            cand = [(c.m1, c.m2) for c in mv.result.clusters]
            e = score.energy(cand)
            if e < energy:
                state, energy, changed = cand, e, True
                applied += 1
                break
    return state, energy, applied


def minimize_E0(p: ProblemParams, budget: int = DEFAULT_BUDGET, seed: int = 0, scorer: ClusterScorer | None = None) -> PartitionResult:
    """Simulated annealing over partitions, seeded with the two-ball state."""
    if budget < 1:
        raise ValueError(f"budget must be >= 1, got {budget!r}")
    score = scorer if scorer is not None else ClusterScorer(p)
    K = cluster_count_bound(p).K
    cap = int(min(K, MAX_SEARCH_CLUSTERS))
    rng = np.random.default_rng(seed)

    state = [(p.M1, 0.0), (0.0, p.M2)]
    energy = score.energy(state)
    best, best_e = list(state), energy
    history = [best_e]
    T = two_ball_upper_bound(p) / 10.0
    for it in range(budget):
        cand = _propose(state, rng, cap)
        if cand is not None:
            e = score.energy(cand)
            if e <= energy or rng.random() < math.exp(-(e - energy) / T):
                state, energy = cand, e
                if e < best_e:
                    best, best_e = list(cand), e
        history.append(best_e)
        if (it + 1) % PROPOSALS_PER_T == 0:
            T *= COOLING

    best, best_e = _descend(best, score, cap)
    best, best_e, applied = _competitor_pass(best, best_e, p, score)
    history.append(best_e)
    best = _exact_masses(best, p)
    conf = _to_configuration(best, p, score)
    return PartitionResult(conf, score.energy(best), budget, seed, K, tuple(history), applied)


def minimize_E0_chains(p: ProblemParams, budget: int = DEFAULT_BUDGET, seeds=(0,), scorer=None) -> PartitionResult:
    """Independent chains; lowest energy wins, lowest seed breaks ties."""
    score = scorer if scorer is not None else ClusterScorer(p)
    results = [minimize_E0(p, budget, s, score) for s in seeds]
    return min(results, key=lambda r: (r.energy, r.seed))
