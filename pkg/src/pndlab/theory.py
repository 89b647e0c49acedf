"""Self-correction of a single mispredicted node after one propagation step.

Setting: a d-regular graph where every node has a fraction h of same-class
neighbors; the teacher puts probability p on the predicted class and spreads
the rest uniformly; the star node (true class 0) puts q < 1/K on class 0; a
fraction ε of the other nodes are mispredicted, spread evenly over wrong classes.
After P <- γÃP + (1-γ)P the star row becomes [β, β', ..., β'] and the star is
corrected iff β > β'.

The propagation in this module uses Ã = D^-1/2 A D^-1/2 *without* self-loops,
so that for a d-regular graph Ã = A/d.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import lcm

import numpy as np

from .datasets import gen_regular_homophily, synth_teacher_output
from .errors import ConstructionError, InputError
from .graph import apply_operator, no_selfloop_adjacency
from .nn import make_rng


@dataclass(frozen=True)
class TheoryParams:
    h: float
    p: float
    num_classes: int
    gamma: float
    epsilon: float = 0.0
    q: float = 0.0

    def __post_init__(self):
        k = self.num_classes
        if int(k) != k or k < 2:
            raise InputError("num_classes must be an integer >= 2")
        if not 0.0 <= self.h <= 1.0:
            raise InputError("h must lie in [0, 1]")
        if not 1.0 / k < self.p <= 1.0:
            raise InputError("p must lie in (1/|Y|, 1]")
        if not 0.0 < self.gamma < 1.0:
            raise InputError("gamma must lie in (0, 1)")
        if not 0.0 <= self.epsilon < 1.0:
            raise InputError("epsilon must lie in [0, 1)")
        if not 0.0 <= self.q <= 1.0 / k:
            raise InputError("q must lie in [0, 1/|Y|]")

    def with_q(self, q) -> "TheoryParams":
        return TheoryParams(self.h, self.p, self.num_classes, self.gamma, self.epsilon, q)


def beta_exact(t: TheoryParams) -> tuple[float, float]:
    """Star-row entries (class 0, any other class) after one step, no approximations."""
    h, p, g, e, q = t.h, t.p, t.gamma, t.epsilon, t.q
    k1 = t.num_classes - 1
    # per-neighbor propagated mass on a class the neighbor's "expected" share does not predict
    mixed = e / k1 * p + (k1 - e) / k1 ** 2 * (1 - p)
    beta = ((1 - g) * q + g * h * ((1 - e) * p + e * (1 - p) / k1)
            + g * (1 - h) * mixed)
    beta_p = ((1 - g) * (1 - q) / k1 + g * h * mixed
              + g * (1 - h) / k1 * (e * (1 - p) / k1 + (1 - e) * p)
              + g * (1 - h) * (k1 - 1) / k1 * mixed)
    return beta, beta_p


def _c_term(h, p, k):
    return (1 + 1 / k) * h * p - (h + p) / k


def correction_threshold(h, p, num_classes, gamma, epsilon=0.0) -> float:
    """Smallest q for which the closed-form approximation predicts correction."""
    if not 0.0 < gamma < 1.0:
        raise InputError("gamma must lie in (0, 1); the threshold is undefined at gamma = 1")
    k = num_classes
    c = _c_term(h, p, k)
    b = (c + h * p / k) * epsilon
    return max(0.0, 1 / k - gamma / (1 - gamma) * (c - b))


def correction_threshold_raw(h, p, num_classes, gamma, epsilon=0.0) -> float:
    """Same expression without the clip at 0."""
    if not 0.0 < gamma < 1.0:
        raise InputError("gamma must lie in (0, 1)")
    k = num_classes
    c = _c_term(h, p, k)
    return 1 / k - gamma / (1 - gamma) * (c - (c + h * p / k) * epsilon)


def epsilon_bound(h, num_classes) -> float:
    """Largest mispredicted fraction for which b(ε) < C can still hold."""
    k = num_classes
    if not h > 1.0 / k:
        raise InputError("epsilon bound needs h > 1/|Y|")
    return (k * h - 1) / ((k + 1) * h - 1)


def exact_threshold(t: TheoryParams, tol=1e-13) -> float:
    """Bisection for the q in [0, 1/K] where β = β'; 0 if already corrected at q = 0,
    1/K if never corrected below 1/K."""
    gap = lambda q: np.subtract(*beta_exact(t.with_q(q)))
    lo, hi = 0.0, 1.0 / t.num_classes
    if gap(lo) > 0:
        return 0.0
    if gap(hi) <= 0:
        return hi
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if gap(mid) > 0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


# ---------------------------------------------------------------------------
# empirical check on an actual graph
# ---------------------------------------------------------------------------

def _frac(x) -> Fraction:
    return Fraction(x).limit_denominator(10_000)


def composition_degree(h, num_classes, epsilon=0.0, max_degree=4000) -> int:
    """Smallest even degree d for which the star's neighborhood can realize the
    expected composition exactly (all neighbor counts integral)."""
    k1 = num_classes - 1
    h, e = _frac(h), _frac(epsilon)
    parts = [h, (1 - h) / k1, e * h / k1, e * (1 - h) / k1 ** 2]
    d = 2
    for x in parts:
        d = lcm(d, x.denominator)
    if d > max_degree:
        raise ConstructionError(f"exact composition needs degree {d} > {max_degree}")
    return d


def _deterministic_flips(labels, star_nbrs, num_classes, epsilon):
    """Flip exactly ε of each neighbor class group, spread evenly over wrong classes."""
    k = num_classes
    flips = {}
    for c in range(k):
        group = np.sort(star_nbrs[labels[star_nbrs] == c])
        n_flip = int(round(epsilon * len(group)))
        wrong = [w for w in range(k) if w != c]
        per = n_flip // (k - 1)
        if per * (k - 1) != n_flip or abs(epsilon * len(group) - n_flip) > 1e-9:
            raise ConstructionError("neighborhood cannot be flipped evenly for this epsilon")
        for j, node in enumerate(group[:n_flip]):
            flips[int(node)] = wrong[j // per]
    return flips


@dataclass
class CorrectionCheck:
    predicted: bool
    observed: bool
    q_star_empirical: float
    margin: float        # β - β' from the exact formulas
    star_row: np.ndarray


def _one_step_star(a_norm, P, star, gamma):
    return (gamma * apply_operator(a_norm, P) + (1 - gamma) * P)[star]


def verify_correction_empirical(t: TheoryParams, degree=None, nodes_per_class=None, seed=0,
                                composition="deterministic", q_tol=1e-9) -> CorrectionCheck:
    """Propagate synthetic teacher output once on a regular graph and compare with β > β'.

    ``composition="deterministic"`` arranges the star's mispredicted neighbors exactly
    as the analysis expects; ``"random"`` flips ε(|V|-1) nodes at random.
    """
    k = t.num_classes
    d = composition_degree(t.h, k, t.epsilon) if degree is None else int(degree)
    same = int(round(t.h * d))
    if nodes_per_class is None:
        nodes_per_class = same + 2 + (same % 2)
        nodes_per_class = max(nodes_per_class, -(-(d - same) // max(k - 1, 1)) + 1)
    ds = gen_regular_homophily(d, t.h, k, nodes_per_class, seed)
    labels = ds.labels
    a_norm = no_selfloop_adjacency(ds.graph)
    star = int(np.flatnonzero(labels == 0)[0])
    rng = make_rng(seed)
    if composition == "deterministic":
        nbrs = ds.graph.neighbors(star)
        flips = _deterministic_flips(labels, nbrs, k, t.epsilon)
        # the rest of the graph: flip ε of the non-neighbors at random (does not reach the star)
        rest = np.setdiff1d(np.arange(len(labels)), np.append(nbrs, star))
        target = int(round(t.epsilon * (len(labels) - 1))) - len(flips)
        if target > 0:
            for node in rng.choice(rest, size=min(target, len(rest)), replace=False):
                flips[int(node)] = int((labels[node] + rng.integers(1, k)) % k)
    elif composition == "random":
        flips = None
    else:
        raise InputError(f"unknown composition {composition!r}")

    def star_row(q):
        P = synth_teacher_output(labels, k, t.p, t.epsilon, min(q, np.nextafter(1 / k, 0)),
                                 star, rng=make_rng(seed), flips=flips)
        return _one_step_star(a_norm, P, star, t.gamma)

    def corrected(q):
        return int(np.argmax(star_row(q))) == 0

    row = star_row(t.q)
    observed = corrected(t.q)
    lo, hi = 0.0, 1.0 / k
    if corrected(lo):
        q_emp = 0.0
    elif not corrected(hi):
        q_emp = hi
    else:
        while hi - lo > q_tol:
            mid = 0.5 * (lo + hi)
            if corrected(mid):
                hi = mid
            else:
                lo = mid
        q_emp = 0.5 * (lo + hi)
    beta, beta_p = beta_exact(t)
    return CorrectionCheck(bool(beta > beta_p), bool(observed), float(q_emp),
                           float(beta - beta_p), row)


THEORY_GRID = {
    "num_classes": (5, 7, 10),
    "h": (0.5, 0.6, 0.7, 0.8, 0.9, 1.0),
    "p": (0.5, 0.6, 0.7, 0.8, 0.9, 1.0),
    "gamma": (0.1, 0.3, 0.5, 0.7, 0.9),
    "epsilon": (0.0, 0.1, 0.2, 0.25),
}


def sample_tuples(count=50, seed=0, grid=None, max_degree=400, min_margin=1e-3) -> list[TheoryParams]:
    """Seeded draw of parameter tuples from ``grid`` with q uniform in [0, 1/K).

    Tuples whose exact neighborhood composition needs a degree above ``max_degree``
    or whose |β - β'| is at most ``min_margin`` are skipped.
    """
    grid = THEORY_GRID if grid is None else grid
    keys = ("num_classes", "h", "p", "gamma", "epsilon")
    rng = make_rng(seed)
    out = []
    for _ in range(100 * count):
        if len(out) == count:
            break
        v = {k: grid[k][rng.integers(len(grid[k]))] for k in keys}
        k = v["num_classes"]
        if v["p"] <= 1 / k:
            continue
        try:
            composition_degree(v["h"], k, v["epsilon"], max_degree)
        except ConstructionError:
            continue
        t = TheoryParams(v["h"], v["p"], k, v["gamma"], v["epsilon"], float(rng.uniform(0, 1 / k)))
        b, bp = beta_exact(t)
        if abs(b - bp) > min_margin:
            out.append(t)
    if len(out) < count:
        raise ConstructionError(f"only {len(out)} admissible tuples found")
    return out
