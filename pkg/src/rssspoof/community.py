"""Frame graphs and Louvain community detection.

Nodes are frames; an edge joins two frames the position-change detector
judged to come from the same location. Louvain gains are evaluated in
integer arithmetic (edge weights stay integral under aggregation), so ties
are exact and the result is a pure function of the graph and the seed.
"""

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class FrameGraph:
    adjacency: np.ndarray  # (T, T) bool, symmetric, zero diagonal

    @property
    def node_count(self):
        return self.adjacency.shape[0]

    @property
    def edge_count(self):
        return int(np.triu(self.adjacency, 1).sum())

    def edges(self):
        i, j = np.nonzero(np.triu(self.adjacency, 1))
        return list(zip(i.tolist(), j.tolist()))


def build_graph(decisions):
    """Frame graph from a symmetric SAME-decision matrix (diagonal ignored)."""
    A = np.asarray(decisions, bool)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] < 1:
        raise ValueError("decisions must be a non-empty square matrix")
    if not np.array_equal(A, A.T):
        raise ValueError("decision matrix must be symmetric")
    A = A.copy()
    np.fill_diagonal(A, False)
    A.setflags(write=False)
    return FrameGraph(A)


def graph_from_edges(n, edges):
    A = np.zeros((n, n), bool)
    for a, b in edges:
        if a != b:
            A[a, b] = A[b, a] = True
    return FrameGraph(A)


def write_edgelist(graph, path):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for a, b in graph.edges():
            fh.write(f"{a} {b}\n")


@dataclass(frozen=True)
class Partition:
    community_of: np.ndarray

    def __post_init__(self):
        c = np.array(self.community_of, int)
        c.setflags(write=False)
        object.__setattr__(self, "community_of", c)

    @property
    def community_count(self):
        return len(np.unique(self.community_of))

    def communities(self):
        return [np.flatnonzero(self.community_of == c).tolist() for c in np.unique(self.community_of)]


def _labels(partition):
    return partition.community_of if isinstance(partition, Partition) else np.asarray(partition, int)


def modularity(graph, partition):
    """Newman modularity at resolution 1; 0 for an edgeless graph."""
    A = graph.adjacency.astype(float)
    c = _labels(partition)
    if c.shape != (graph.node_count,):
        raise ValueError("partition must assign every node")
    two_m = A.sum()
    if two_m == 0:
        return 0.0
    k = A.sum(axis=1)
    q = 0.0
    for comm in np.unique(c):
        mask = c == comm
        q += A[np.ix_(mask, mask)].sum() / two_m - (k[mask].sum() / two_m) ** 2
    return float(q)


def _local_moving(W, rng):
    """One Louvain level on an integer weight matrix (self-loops allowed).

    Returns the community of each node and whether any node moved.
    """
    n = W.shape[0]
    k = W.sum(axis=1)
    two_m = int(k.sum())
    comm = np.arange(n)
    tot = k.copy()
    moved_any = False
    while True:
        moved = False
        for i in rng.permutation(n):
            ci = comm[i]
            nbrs = np.flatnonzero(W[i])
            nbrs = nbrs[nbrs != i]
            # Links from i into each neighbouring community.
            links = {}
            for j in nbrs:
                links[comm[j]] = links.get(comm[j], 0) + int(W[i, j])
            tot[ci] -= k[i]
            # Gain of joining c from isolation, times 2m^2; a move must beat
            # returning to ci strictly, ties go to the smallest id.
            stay = two_m * links.get(ci, 0) - int(tot[ci]) * int(k[i])
            best_c, best_gain = ci, stay
            for c in sorted(links):
                if c == ci:
                    continue
                gain = two_m * links[c] - int(tot[c]) * int(k[i])
                if gain > best_gain:
                    best_c, best_gain = c, gain
            tot[best_c] += k[i]
            if best_c != ci:
                comm[i] = best_c
                moved = True
                moved_any = True
        if not moved:
            break
    return comm, moved_any


def _canonical(labels):
    seen = {}
    out = np.empty(len(labels), int)
    for i, c in enumerate(labels):
        if c not in seen:
            seen[c] = len(seen)
        out[i] = seen[c]
    return out


def louvain_levels(graph, seed=0):
    """Partitions of the original nodes after each Louvain level.

    Entry 0 is the all-singletons partition; the last entry is the result.
    """
    rng = np.random.default_rng(seed)
    n = graph.node_count
    membership = np.arange(n)
    levels = [Partition(membership)]
    if graph.edge_count == 0:
        return levels
    W = graph.adjacency.astype(np.int64)
    while True:
        comm, moved = _local_moving(W, rng)
        if not moved:
            break
        comm = _canonical(comm)
        membership = comm[membership]
        levels.append(Partition(_canonical(membership)))
        size = comm.max() + 1
        P = np.zeros((W.shape[0], size), np.int64)
        P[np.arange(W.shape[0]), comm] = 1
        # Aggregated self-loops carry twice the internal edge weight.
        W = P.T @ W @ P
        if size == 1:
            break
    return levels


def louvain(graph, seed=0):
    """Two-phase Louvain: greedy local moves, then community aggregation.

    Nodes are visited in a seeded random order each pass; a node moves to
    the neighbouring community with the largest strictly better gain (ties
    go to the smallest community id). Stops when a level makes no move.
    Isolated nodes stay singletons.
    """
    return louvain_levels(graph, seed)[-1]


@dataclass(frozen=True)
class RegionSequence:
    c: np.ndarray

    def __len__(self):
        return len(self.c)


def region_sequence(partition):
    """Relabel community ids in order of first appearance along the frames."""
    seq = _canonical(_labels(partition).tolist())
    seq.setflags(write=False)
    return RegionSequence(seq)
