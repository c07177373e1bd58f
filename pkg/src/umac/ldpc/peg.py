"""Progressive edge growth (Hu, Eleftheriou, Arnold) Tanner-graph construction."""

from __future__ import annotations

import numpy as np

from .code import LdpcCode, RankDeficientError
from .design import DegreeDistribution

__all__ = ["largest_remainder", "node_degree_counts", "check_degree_targets", "peg_construct"]

MAX_SEED_RETRIES = 64


def largest_remainder(weights, total: int) -> np.ndarray:
    """Round ``total * weights`` to integers summing exactly to ``total``.

    Ties in the fractional part go to the earlier entry.
    """
    w = np.asarray(weights, dtype=float)
    raw = total * w / w.sum()
    counts = np.floor(raw).astype(np.int64)
    short = total - counts.sum()
    order = np.argsort(-(raw - counts), kind="stable")
    counts[order[:short]] += 1
    return counts


def node_degree_counts(dist_side: dict, num_nodes: int) -> dict:
    """Node-perspective degree counts for one side of the graph."""
    degrees = sorted(d for d, f in dist_side.items() if f > 0)
    node_frac = np.array([dist_side[d] / d for d in degrees])
    counts = largest_remainder(node_frac, num_nodes)
    return {d: int(c) for d, c in zip(degrees, counts)}


def check_degree_targets(dist: DegreeDistribution, num_checks: int, num_edges: int) -> np.ndarray:
    """Per-check target degrees whose sum equals ``num_edges``.

    Residual edges after rounding go to the lowest-degree checks (or are
    removed from the highest-degree ones).
    """
    counts = node_degree_counts(dist.rho, num_checks)
    targets = np.concatenate([np.full(c, d) for d, c in counts.items()]).astype(np.int64)
    diff = num_edges - targets.sum()
    while diff != 0:
        if diff > 0:
            idx = np.argmin(targets)
            targets[idx] += 1
            diff -= 1
        else:
            idx = np.argmax(targets)
            targets[idx] -= 1
            diff += 1
    return np.sort(targets)


def _bfs_depths(v, var_adj, chk_adj, num_checks):
    """Checks reached at each depth of the tree spanned from variable ``v``."""
    seen_c = np.zeros(num_checks, dtype=bool)
    seen_v = {v}
    frontier_v = [v]
    levels = []
    while True:
        new_c = []
        for u in frontier_v:
            for c in var_adj[u]:
                if not seen_c[c]:
                    seen_c[c] = True
                    new_c.append(c)
        if not new_c:
            return levels, seen_c
        levels.append(seen_c.copy())
        frontier_v = []
        for c in new_c:
            for u in chk_adj[c]:
                if u not in seen_v:
                    seen_v.add(u)
                    frontier_v.append(u)


def _peg_once(var_degrees, targets, rng):
    n = len(var_degrees)
    m = len(targets)
    var_adj = [[] for _ in range(n)]
    chk_adj = [[] for _ in range(m)]
    cur = np.zeros(m, dtype=np.int64)

    def pick(candidates):
        idx = np.nonzero(candidates)[0]
        slack = cur[idx] - targets[idx]
        deg = cur[idx]
        best = slack == slack.min()
        best &= deg == deg[best].min()
        return int(rng.choice(idx[best]))

    for v in range(n):
        for k in range(var_degrees[v]):
            allowed = np.ones(m, dtype=bool)
            allowed[var_adj[v]] = False
            if k == 0:
                c = pick(allowed)
            else:
                levels, reached = _bfs_depths(v, var_adj, chk_adj, m)
                outside = allowed & ~reached
                if outside.any():
                    c = pick(outside)
                else:
                    # all checks reachable: take those first reached at the deepest level
                    cand = None
                    for prev, lev in zip(levels, levels[1:]):
                        if (allowed & ~prev).any() and not (allowed & ~lev).any():
                            cand = allowed & ~prev
                            break
                    if cand is None:
                        cand = allowed & ~levels[0] if len(levels) > 1 else allowed
                    c = pick(cand)
            var_adj[v].append(c)
            chk_adj[c].append(v)
            cur[c] += 1
    return chk_adj


def peg_construct(dist: DegreeDistribution, n: int, k: int, seed: int) -> LdpcCode:
    """Build an ``(n, k)`` LDPC code with PEG placement.

    Variable-node degree counts come from largest-remainder rounding of the
    node-perspective ``lambda``; check degrees follow ``rho`` with the edge
    count balanced to match.  Rank-deficient draws are retried with the next
    seed, so the result is deterministic in ``seed``.
    """
    if not n > k > 0:
        raise ValueError(f"need n > k > 0, got n={n}, k={k}")
    m = n - k
    vcounts = node_degree_counts(dist.lam, n)
    for d, c in vcounts.items():
        if c and d > m:
            raise ValueError(f"variable degree {d} exceeds the number of checks ({m})")
    var_degrees = np.concatenate([np.full(c, d) for d, c in vcounts.items()]).astype(np.int64)
    num_edges = int(var_degrees.sum())
    targets = check_degree_targets(dist, m, num_edges)
    if targets.min() < 2:
        raise ValueError(f"check degree {int(targets.min())} < 2: lambda at n={n} "
                         f"leaves too few edges ({num_edges}) for {m} checks")
    if targets.max() > n:
        raise ValueError(f"check degree {int(targets.max())} exceeds blocklength {n}")

    for attempt in range(MAX_SEED_RETRIES):
        rng = np.random.default_rng([seed, attempt])
        chk_adj = _peg_once(var_degrees, targets, rng)
        try:
            return LdpcCode(n, chk_adj)
        except RankDeficientError:
            continue
    raise RankDeficientError(f"no full-rank code after {MAX_SEED_RETRIES} seeds starting at {seed}")
