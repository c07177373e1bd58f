"""Degree-distribution design via Gaussian-approximation density evolution.

Distributions are in edge perspective: ``lam[i]`` is the fraction of edges
attached to degree-``i`` variable nodes, ``rho[j]`` likewise for checks.
Threshold computation follows the mean-tracking recursion of Chung,
Richardson and Urbanke with the usual two-regime closed form for phi.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

__all__ = [
    "DegreeDistribution",
    "phi",
    "phi_inv",
    "ga_converges",
    "evaluate_threshold",
    "ga_threshold",
    "concentrated_rho",
    "optimize_degree_distribution",
    "read_distribution",
    "write_distribution",
]

_SUM_TOL = 1e-9
_PHI_SPLIT = 10.0
# mean-LLR beyond which the recursion is declared divergent (phi < 1e-10 there)
_MEAN_DONE = 100.0


@dataclass(frozen=True)
class DegreeDistribution:
    """Edge-perspective variable/check degree distribution.

    Parameters
    ----------
    lam : dict
        ``{degree: fraction}`` for variable nodes.
    rho : dict
        ``{degree: fraction}`` for check nodes.
    """

    lam: dict = field(default_factory=dict)
    rho: dict = field(default_factory=dict)

    def __post_init__(self):
        for name, dist in (("lambda", self.lam), ("rho", self.rho)):
            if not dist:
                raise ValueError(f"{name} is empty")
            for deg, frac in dist.items():
                if int(deg) != deg or deg < 2:
                    raise ValueError(f"{name}: degree {deg} must be an integer >= 2")
                if not 0.0 <= frac <= 1.0:
                    raise ValueError(f"{name}: fraction {frac} for degree {deg} outside [0, 1]")
            total = sum(dist.values())
            if abs(total - 1.0) > _SUM_TOL:
                raise ValueError(f"{name} fractions sum to {total!r}, expected 1")
        rate = self.rate
        if not 0.0 < rate < 1.0:
            raise ValueError(f"design rate {rate} outside (0, 1)")

    @classmethod
    def regular(cls, dv: int, dc: int) -> "DegreeDistribution":
        return cls({dv: 1.0}, {dc: 1.0})

    @property
    def rate(self) -> float:
        """Design rate ``1 - int(rho)/int(lambda)``."""
        return 1.0 - _inv_moment(self.rho) / _inv_moment(self.lam)

    def node_fractions(self, side: str = "v") -> dict:
        """Convert to node perspective (fraction of nodes of each degree)."""
        dist = self.lam if side == "v" else self.rho
        norm = _inv_moment(dist)
        return {d: (f / d) / norm for d, f in sorted(dist.items())}

    def pruned(self) -> "DegreeDistribution":
        """Copy with zero-fraction degrees dropped."""
        return DegreeDistribution(
            {d: f for d, f in self.lam.items() if f > 0},
            {d: f for d, f in self.rho.items() if f > 0},
        )


def _inv_moment(dist: dict) -> float:
    return sum(f / d for d, f in dist.items())


def phi(x: float) -> float:
    """Chung's phi function, two-regime closed-form approximation."""
    if x <= 0.0:
        return 1.0
    if x < _PHI_SPLIT:
        return min(1.0, math.exp(-0.4527 * x**0.86 + 0.0218))
    return math.sqrt(math.pi / x) * math.exp(-x / 4.0) * (1.0 - 10.0 / (7.0 * x))


_PHI_AT_SPLIT = math.exp(-0.4527 * _PHI_SPLIT**0.86 + 0.0218)


def phi_inv(y: float) -> float:
    """Inverse of :func:`phi` on (0, 1]."""
    if y >= 1.0:
        return 0.0
    if y <= 0.0:
        return math.inf
    if y > _PHI_AT_SPLIT:
        return max(0.0, (0.0218 - math.log(y)) / 0.4527) ** (1.0 / 0.86)
    # Newton on log(phi(x)) - log(y) in the asymptotic regime
    ly = math.log(y)
    x = max(_PHI_SPLIT, -4.0 * ly)
    for _ in range(50):
        t = 1.0 - 10.0 / (7.0 * x)
        g = 0.5 * math.log(math.pi / x) - x / 4.0 + math.log(t) - ly
        dg = -0.5 / x - 0.25 + (10.0 / (7.0 * x * x)) / t
        step = g / dg
        x -= step
        if x < _PHI_SPLIT:
            x = _PHI_SPLIT
        if abs(step) < 1e-12 * x:
            break
    return x


def ga_converges(dist: DegreeDistribution, sigma: float, max_iters: int = 2000) -> bool:
    """Run GA density evolution on the BI-AWGN channel with noise std ``sigma``.

    Returns True when the mean check-to-variable LLR diverges within
    ``max_iters`` iterations.
    """
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    m0 = 2.0 / sigma**2
    lam = [(d, f) for d, f in dist.lam.items() if f > 0]
    rho = [(d, f) for d, f in dist.rho.items() if f > 0]
    # stability at the zero-error fixed point
    lam2 = dist.lam.get(2, 0.0)
    rho_prime = sum(f * (d - 1) for d, f in rho)
    if lam2 * rho_prime >= math.exp(min(700.0, 1.0 / (2.0 * sigma**2))):
        return False
    if m0 >= _MEAN_DONE:
        return True
    mu = 0.0
    for _ in range(max_iters):
        s = sum(f * phi(m0 + (d - 1) * mu) for d, f in lam)
        new = sum(f * phi_inv(1.0 - (1.0 - s) ** (d - 1)) for d, f in rho)
        if new >= _MEAN_DONE:
            return True
        if new <= mu * (1.0 + 1e-12):
            # stuck at a fixed point
            return False
        mu = new
    return False


def evaluate_threshold(dist: DegreeDistribution, sigma: float, max_iters: int = 2000) -> bool:
    """Convergence test at a single channel parameter (see :func:`ga_converges`)."""
    return ga_converges(dist, sigma, max_iters)


def ga_threshold(dist: DegreeDistribution, lo: float = 0.05, hi: float = 4.0,
                 tol: float = 1e-3, max_iters: int = 2000) -> float:
    """Bisect on sigma for the GA-DE decoding threshold."""
    if not ga_converges(dist, lo, max_iters):
        return lo
    if ga_converges(dist, hi, max_iters):
        return hi
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if ga_converges(dist, mid, max_iters):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def concentrated_rho(lam: dict, rate: float) -> dict | None:
    """Two-consecutive-degree check distribution giving ``rate`` with ``lam``.

    Returns None when no check degree >= 2 realizes the rate.
    """
    target = (1.0 - rate) * _inv_moment(lam)  # required sum rho_j / j
    if target <= 0:
        return None
    dbar = 1.0 / target
    if dbar < 2.0 - 1e-12:
        return None
    j = int(math.floor(dbar + 1e-12))
    wj = j * (j + 1) / dbar - j
    wj = min(1.0, max(0.0, wj))
    if wj >= 1.0 - 1e-12:
        return {j: 1.0}
    if wj <= 1e-12:
        return {j + 1: 1.0}
    return {j: wj, j + 1: 1.0 - wj}


def _project(vec: np.ndarray) -> np.ndarray:
    vec = np.clip(vec, 0.0, None)
    total = vec.sum()
    if total <= 0:
        vec = np.ones_like(vec)
        total = vec.sum()
    vec = vec / total
    # drop dust so the realized code does not round tiny fractions
    vec[vec < 1e-4] = 0.0
    return vec / vec.sum()


def _make_dist(vec: np.ndarray, degrees: np.ndarray, rate: float) -> DegreeDistribution | None:
    lam = {int(d): float(f) for d, f in zip(degrees, vec) if f > 0}
    rho = concentrated_rho(lam, rate)
    if rho is None:
        return None
    # renormalise against float drift before validation
    tot = sum(lam.values())
    lam = {d: f / tot for d, f in lam.items()}
    try:
        return DegreeDistribution(lam, rho)
    except ValueError:
        return None


def optimize_degree_distribution(target_rate: float, max_var_degree: int, seed: int,
                                 population: int = 20, generations: int = 40,
                                 mutation: float = 0.5, crossover: float = 0.7,
                                 tol: float = 2e-3, min_var_degree: int = 2) -> DegreeDistribution:
    """Differential-evolution search over lambda with concentrated rho.

    Variable degrees range over ``min_var_degree..max_var_degree``.  The
    regular degree-3 point (clamped into that range) seeds the population,
    and selection is elitist, so the result is never worse than that regular
    baseline.  With ``min_var_degree == max_var_degree`` the search space is
    a single regular point.  Deterministic given ``seed``.
    """
    if not 0.0 < target_rate < 1.0:
        raise ValueError(f"target_rate {target_rate} outside (0, 1)")
    if max_var_degree < 2:
        raise ValueError(f"max_var_degree {max_var_degree} < 2 leaves no feasible distribution")
    if not 2 <= min_var_degree <= max_var_degree:
        raise ValueError(f"min_var_degree {min_var_degree} must lie in [2, {max_var_degree}]")
    degrees = np.arange(min_var_degree, max_var_degree + 1)
    dim = degrees.size
    rng = np.random.default_rng(seed)

    def fitness(vec):
        dist = _make_dist(vec, degrees, target_rate)
        if dist is None:
            return -math.inf, None
        return ga_threshold(dist, tol=tol), dist

    base = np.zeros(dim)
    base[min(max(3, min_var_degree), max_var_degree) - min_var_degree] = 1.0
    pop = [base] + [_project(rng.dirichlet(np.ones(dim))) for _ in range(max(population, 4) - 1)]
    scored = [fitness(v) for v in pop]
    if dim == 1:
        if scored[0][1] is None:
            raise ValueError(f"rate {target_rate} is infeasible with max variable degree {max_var_degree}")
        return scored[0][1].pruned()

    n = len(pop)
    for _ in range(generations):
        for i in range(n):
            choices = [k for k in range(n) if k != i]
            a, b, c = rng.choice(choices, size=3, replace=False)
            trial = pop[a] + mutation * (pop[b] - pop[c])
            mask = rng.random(dim) < crossover
            mask[rng.integers(dim)] = True
            trial = _project(np.where(mask, trial, pop[i]))
            score = fitness(trial)
            if score[0] > scored[i][0]:
                pop[i], scored[i] = trial, score

    best = max(range(n), key=lambda k: (scored[k][0], -k))
    if scored[best][1] is None:
        raise ValueError(f"rate {target_rate} is infeasible with max variable degree {max_var_degree}")
    return scored[best][1].pruned()


def write_distribution(dist: DegreeDistribution, path) -> None:
    """Write ``v <degree> <fraction>`` / ``c <degree> <fraction>`` lines."""
    lines = [f"v {d} {f!r}" for d, f in sorted(dist.lam.items())]
    lines += [f"c {d} {f!r}" for d, f in sorted(dist.rho.items())]
    Path(path).write_text("\n".join(lines) + "\n")


def read_distribution(path) -> DegreeDistribution:
    lam, rho = {}, {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 3 or parts[0] not in ("v", "c"):
            raise ValueError(f"{path}:{lineno}: expected 'v|c <degree> <fraction>', got {line!r}")
        target = lam if parts[0] == "v" else rho
        target[int(parts[1])] = float(parts[2])
    return DegreeDistribution(lam, rho)
