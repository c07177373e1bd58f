"""Parity-check structure, GF(2) systematic encoder and alist I/O."""

from __future__ import annotations

from pathlib import Path

import numpy as np
import scipy.sparse as sp

__all__ = ["LdpcCode", "RankDeficientError", "read_alist", "write_alist"]


class RankDeficientError(ValueError):
    """Parity-check matrix does not have full row rank."""


def _gf2_rref(H: np.ndarray):
    """Reduced row echelon form over GF(2).

    Returns ``(R, pivots)``; ``R`` has ``len(pivots)`` rows.
    """
    R = H.copy().astype(np.uint8)
    m, n = R.shape
    pivots = []
    row = 0
    for col in range(n):
        if row == m:
            break
        hits = np.nonzero(R[row:, col])[0]
        if hits.size == 0:
            continue
        p = row + hits[0]
        if p != row:
            R[[row, p]] = R[[p, row]]
        others = np.nonzero(R[:, col])[0]
        others = others[others != row]
        if others.size:
            R[others] ^= R[row]
        pivots.append(col)
        row += 1
    return R[:row], pivots


class LdpcCode:
    """Binary LDPC code given by the adjacency of its Tanner graph.

    Parameters
    ----------
    n : int
        Blocklength (variable nodes).
    check_adj : sequence of sequences
        ``check_adj[c]`` lists the (0-based) variable nodes of check ``c``.

    Edges are stored check-major: edge ``e`` joins ``edge_chk[e]`` and
    ``edge_var[e]``, and edges of a check are contiguous starting at
    ``chk_start[c]``.
    """

    def __init__(self, n: int, check_adj):
        self.n = int(n)
        self.check_adj = [sorted(int(v) for v in row) for row in check_adj]
        self.m = len(self.check_adj)
        for c, row in enumerate(self.check_adj):
            if len(set(row)) != len(row):
                raise ValueError(f"check {c} has parallel edges")
            if not row:
                raise ValueError(f"check {c} has no edges")
            if row[0] < 0 or row[-1] >= self.n:
                raise ValueError(f"check {c} references variable outside [0, {self.n})")

        self.edge_chk = np.repeat(np.arange(self.m), [len(r) for r in self.check_adj])
        self.edge_var = np.fromiter((v for r in self.check_adj for v in r), dtype=np.int64,
                                    count=self.edge_chk.size)
        self.num_edges = self.edge_var.size
        counts = np.array([len(r) for r in self.check_adj])
        self.chk_start = np.concatenate(([0], np.cumsum(counts)[:-1]))
        self.chk_degree = counts
        self.var_degree = np.bincount(self.edge_var, minlength=self.n)
        # E x n incidence, used to sum edge messages per variable node
        self.edge_to_var = sp.csr_matrix(
            (np.ones(self.num_edges), (np.arange(self.num_edges), self.edge_var)),
            shape=(self.num_edges, self.n))
        self.H = sp.csr_matrix(
            (np.ones(self.num_edges, dtype=np.uint8), (self.edge_chk, self.edge_var)),
            shape=(self.m, self.n))

        R, pivots = _gf2_rref(self.H.toarray())
        if len(pivots) < self.m:
            raise RankDeficientError(f"parity-check matrix has rank {len(pivots)} < {self.m}")
        self.parity_pos = np.array(pivots, dtype=np.int64)
        self.info_pos = np.setdiff1d(np.arange(self.n), self.parity_pos)
        self._parity_map = R[:, self.info_pos]
        self.k = self.n - self.m

    @property
    def rate(self) -> float:
        return self.k / self.n

    @property
    def var_adj(self):
        adj = [[] for _ in range(self.n)]
        for c, row in enumerate(self.check_adj):
            for v in row:
                adj[v].append(c)
        return adj

    def encode(self, message) -> np.ndarray:
        """Systematic encoding; message bits sit at ``info_pos``."""
        msg = np.asarray(message, dtype=np.uint8)
        if msg.shape[-1] != self.k:
            raise ValueError(f"message length {msg.shape[-1]} != k = {self.k}")
        out = np.zeros(msg.shape[:-1] + (self.n,), dtype=np.uint8)
        out[..., self.info_pos] = msg
        out[..., self.parity_pos] = (msg.astype(np.int64) @ self._parity_map.T.astype(np.int64)) & 1
        return out

    def extract_message(self, codeword) -> np.ndarray:
        return np.asarray(codeword, dtype=np.uint8)[..., self.info_pos]

    def syndrome(self, bits) -> np.ndarray:
        """Parity of every check; works on ``(..., n)`` arrays."""
        b = np.asarray(bits, dtype=np.int64)
        flat = b.reshape(-1, self.n)
        s = (self.H @ flat.T).T.astype(np.int64) & 1
        return s.reshape(b.shape[:-1] + (self.m,)).astype(np.uint8)

    def is_codeword(self, bits) -> np.ndarray:
        return ~self.syndrome(bits).any(axis=-1)

    def girth(self) -> float:
        """Length of the shortest cycle of the Tanner graph (inf if acyclic)."""
        var_adj = self.var_adj
        best = np.inf
        # BFS from each variable node over the bipartite graph
        for root in range(self.n):
            dist = {("v", root): 0}
            parent = {("v", root): None}
            queue = [("v", root)]
            head = 0
            while head < len(queue):
                node = queue[head]
                head += 1
                d = dist[node]
                if 2 * d >= best:
                    break
                kind, idx = node
                nbrs = [("c", c) for c in var_adj[idx]] if kind == "v" else \
                       [("v", v) for v in self.check_adj[idx]]
                for nb in nbrs:
                    if nb == parent[node]:
                        continue
                    if nb in dist:
                        best = min(best, d + dist[nb] + 1)
                    else:
                        dist[nb] = d + 1
                        parent[nb] = node
                        queue.append(nb)
        return best


def write_alist(code: LdpcCode, path) -> None:
    """Write the parity-check matrix in MacKay's alist format."""
    var_adj = code.var_adj
    max_v = max(len(a) for a in var_adj)
    max_c = max(len(a) for a in code.check_adj)
    lines = [f"{code.n} {code.m}", f"{max_v} {max_c}",
             " ".join(str(len(a)) for a in var_adj),
             " ".join(str(len(a)) for a in code.check_adj)]
    for adj, width in ((var_adj, max_v), (code.check_adj, max_c)):
        for a in adj:
            row = [x + 1 for x in a] + [0] * (width - len(a))
            lines.append(" ".join(map(str, row)))
    Path(path).write_text("\n".join(lines) + "\n")


def read_alist(path) -> LdpcCode:
    """Parse an alist file (0-padding tolerated)."""
    try:
        vals = [int(t) for t in Path(path).read_text().split()]
    except ValueError as exc:
        raise ValueError(f"{path}: non-integer token in alist file") from exc
    pos = 0

    def take(count):
        nonlocal pos
        if pos + count > len(vals):
            raise ValueError(f"{path}: truncated alist file")
        out = vals[pos:pos + count]
        pos += count
        return out

    def take_list(degree):
        nonlocal pos
        entries = take(degree)
        if any(e <= 0 for e in entries):
            raise ValueError(f"{path}: zero or negative index inside a degree list")
        while pos < len(vals) and vals[pos] == 0:
            pos += 1
        return entries

    n, m = take(2)
    take(2)  # max degrees, implied by the lists
    col_deg = take(n)
    row_deg = take(m)
    col_lists = [take_list(d) for d in col_deg]
    row_lists = [take_list(d) for d in row_deg]
    code = LdpcCode(n, [[v - 1 for v in row] for row in row_lists])
    var_adj = code.var_adj
    for v, col in enumerate(col_lists):
        if sorted(c - 1 for c in col) != sorted(var_adj[v]):
            raise ValueError(f"{path}: column {v + 1} disagrees with row lists")
    return code
