"""Graph topology, incidence matrices, spanning trees and bipartite matching.

Node indices are 1-based at the public surface (``Graph.edges`` holds
``(tail, head)`` pairs in ``1..N``); edge indices and bipartite vertex
indices are 0-based positions.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from itertools import combinations
from typing import Optional

import numpy as np

from .errors import DisconnectedGraph

INF = float("inf")


@dataclass(frozen=True)
class Graph:
    num_nodes: int
    edges: tuple[tuple[int, int], ...] = ()

    def __post_init__(self):
        if int(self.num_nodes) < 1:
            raise ValueError("num_nodes must be positive")
        edges = tuple((int(i), int(j)) for i, j in self.edges)
        seen = set()
        for k, (i, j) in enumerate(edges):
            if not (1 <= i <= self.num_nodes and 1 <= j <= self.num_nodes):
                raise ValueError(f"edge {k} = ({i}, {j}) references unknown node")
            if i == j:
                raise ValueError(f"edge {k} is a self-loop at node {i}")
            key = frozenset((i, j))
            if key in seen:
                raise ValueError(f"edge {k} = ({i}, {j}) duplicates an earlier edge")
            seen.add(key)
        object.__setattr__(self, "num_nodes", int(self.num_nodes))
        object.__setattr__(self, "edges", edges)

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    def neighbors(self, node: int) -> list[int]:
        """Undirected neighbors of a 1-based node."""
        out = []
        for i, j in self.edges:
            if i == node:
                out.append(j)
            elif j == node:
                out.append(i)
        return out

    def subgraph_edges(self, edge_ids) -> "Graph":
        return Graph(self.num_nodes, tuple(self.edges[e] for e in edge_ids))


def path_graph(n: int) -> Graph:
    return Graph(n, tuple((i, i + 1) for i in range(1, n)))


def cycle_graph(n: int) -> Graph:
    return Graph(n, tuple((i, i % n + 1) for i in range(1, n + 1)))


def complete_graph(n: int) -> Graph:
    return Graph(n, tuple(combinations(range(1, n + 1), 2)))


def incidence_matrix(graph: Graph) -> np.ndarray:
    """N x m incidence matrix: column e has -1 at the tail and +1 at the head."""
    B = np.zeros((graph.num_nodes, graph.num_edges))
    for e, (i, j) in enumerate(graph.edges):
        B[i - 1, e] = -1.0
        B[j - 1, e] = 1.0
    return B


def laplacian(graph: Graph) -> np.ndarray:
    B = incidence_matrix(graph)
    return B @ B.T


def _adjacency(graph: Graph):
    adj = [[] for _ in range(graph.num_nodes)]
    for e, (i, j) in enumerate(graph.edges):
        adj[i - 1].append((e, j - 1))
        adj[j - 1].append((e, i - 1))
    for lst in adj:
        lst.sort()
    return adj


def is_connected(graph: Graph) -> bool:
    adj = _adjacency(graph)
    seen = {0}
    stack = [0]
    while stack:
        v = stack.pop()
        for _, w in adj[v]:
            if w not in seen:
                seen.add(w)
                stack.append(w)
    return len(seen) == graph.num_nodes


def spanning_tree(graph: Graph) -> list[int]:
    """Deterministic BFS spanning tree rooted at node 1.

    Each visited node scans its incident edges in ascending edge index.
    Returns the sorted list of tree edge indices.
    """
    if not is_connected(graph):
        raise DisconnectedGraph(f"graph with {graph.num_nodes} nodes is not connected")
    adj = _adjacency(graph)
    visited = [False] * graph.num_nodes
    visited[0] = True
    queue = deque([0])
    tree = []
    while queue:
        v = queue.popleft()
        for e, w in adj[v]:
            if not visited[w]:
                visited[w] = True
                tree.append(e)
                queue.append(w)
    return sorted(tree)


@dataclass(frozen=True)
class TreeEnumeration:
    trees: list[list[int]]
    truncated: bool

    def __iter__(self):
        return iter(self.trees)

    def __len__(self):
        return len(self.trees)


def all_spanning_trees(graph: Graph, cap: int = 1000) -> TreeEnumeration:
    """Enumerate distinct spanning trees, stopping after ``cap`` of them.

    Backtracking over edges in ascending index: each edge is either included
    (if it joins two components) or excluded (if the rest can still connect).
    The BFS tree from :func:`spanning_tree` is tried first so that the
    deterministic tree leads the enumeration.
    """
    if cap < 1:
        raise ValueError("cap must be >= 1")
    if not is_connected(graph):
        raise DisconnectedGraph(f"graph with {graph.num_nodes} nodes is not connected")
    n, m = graph.num_nodes, graph.num_edges
    edges = [(i - 1, j - 1) for i, j in graph.edges]
    first = spanning_tree(graph)
    trees = [first]
    found = {tuple(first)}
    truncated = False

    def find(parent, a):
        while parent[a] != a:
            a = parent[a]
        return a

    def connectable(k, parent):
        # Can edges k.. still join every current component?
        p = list(parent)
        for e in range(k, m):
            a, b = find(p, edges[e][0]), find(p, edges[e][1])
            if a != b:
                p[a] = b
        root = find(p, 0)
        return all(find(p, v) == root for v in range(n))

    def rec(k, chosen, parent):
        nonlocal truncated
        if truncated:
            return
        if len(chosen) == n - 1:
            key = tuple(chosen)
            if key not in found:
                if len(trees) >= cap:
                    truncated = True
                    return
                found.add(key)
                trees.append(list(chosen))
            return
        if k == m:
            return
        a, b = find(parent, edges[k][0]), find(parent, edges[k][1])
        if a != b:
            p = list(parent)
            p[a] = b
            rec(k + 1, chosen + [k], p)
        if connectable(k + 1, parent):
            rec(k + 1, chosen, parent)

    rec(0, [], list(range(n)))
    return TreeEnumeration(trees, truncated)


# ----------------------------------------------------------------------------
# Bipartite structures and matchings


@dataclass(frozen=True)
class BipartiteStructure:
    """Bipartite graph with labelled sides and 0-based (left, right) adjacency."""

    left: tuple
    right: tuple
    adjacency: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        object.__setattr__(self, "left", tuple(self.left))
        object.__setattr__(self, "right", tuple(self.right))
        adj = frozenset((int(a), int(b)) for a, b in self.adjacency)
        for a, b in adj:
            if not (0 <= a < len(self.left) and 0 <= b < len(self.right)):
                raise ValueError(f"adjacency pair ({a}, {b}) out of range")
        object.__setattr__(self, "adjacency", adj)

    @classmethod
    def from_pattern(cls, pattern, left=None, right=None) -> "BipartiteStructure":
        """Build from a boolean matrix whose rows are left vertices."""
        pattern = np.asarray(pattern, dtype=bool)
        rows, cols = pattern.shape
        left = tuple(range(rows)) if left is None else left
        right = tuple(range(cols)) if right is None else right
        adj = frozenset(zip(*map(lambda a: a.tolist(), np.nonzero(pattern))))
        return cls(left, right, adj)

    def neighbors_of_left(self) -> list[list[int]]:
        nbrs = [[] for _ in self.left]
        for a, b in sorted(self.adjacency):
            nbrs[a].append(b)
        return nbrs

    def gamma(self, subset) -> set[int]:
        """Right-side neighbor set of a set of left indices."""
        subset = set(subset)
        return {b for a, b in self.adjacency if a in subset}

    def to_pattern(self) -> np.ndarray:
        P = np.zeros((len(self.left), len(self.right)), dtype=bool)
        for a, b in self.adjacency:
            P[a, b] = True
        return P


@dataclass(frozen=True)
class MatchingResult:
    size: int
    pairs: tuple[tuple[int, int], ...]
    deficiency_witness: Optional[tuple[int, ...]] = None

    @property
    def left_perfect(self) -> bool:
        return self.deficiency_witness is None


def _hopcroft_karp(nbrs, n_left, n_right):
    match_l = [-1] * n_left
    match_r = [-1] * n_right
    dist = [INF] * n_left

    def bfs():
        queue = deque()
        for u in range(n_left):
            if match_l[u] == -1:
                dist[u] = 0
                queue.append(u)
            else:
                dist[u] = INF
        found = False
        while queue:
            u = queue.popleft()
            for v in nbrs[u]:
                w = match_r[v]
                if w == -1:
                    found = True
                elif dist[w] == INF:
                    dist[w] = dist[u] + 1
                    queue.append(w)
        return found

    def dfs(u):
        for v in nbrs[u]:
            w = match_r[v]
            if w == -1 or (dist[w] == dist[u] + 1 and dfs(w)):
                match_l[u] = v
                match_r[v] = u
                return True
        dist[u] = INF
        return False

    while bfs():
        for u in range(n_left):
            if match_l[u] == -1:
                dfs(u)
    return match_l, match_r


def max_matching(bip: BipartiteStructure) -> MatchingResult:
    """Maximum-cardinality matching by Hopcroft-Karp.

    When the matching does not saturate the left side, the witness is the set
    of left vertices reachable by alternating paths from unmatched left
    vertices. That set S has Gamma(S) equal to the matched partners of
    S minus the unmatched roots, so |Gamma(S)| < |S|.
    """
    n_left, n_right = len(bip.left), len(bip.right)
    nbrs = bip.neighbors_of_left()
    match_l, match_r = _hopcroft_karp(nbrs, n_left, n_right)
    pairs = tuple((u, v) for u, v in enumerate(match_l) if v != -1)

    witness = None
    if len(pairs) < n_left:
        reached = set()
        queue = deque(u for u in range(n_left) if match_l[u] == -1)
        reached.update(queue)
        while queue:
            u = queue.popleft()
            for v in nbrs[u]:
                w = match_r[v]
                # v is matched, otherwise the matching would not be maximum
                if w not in reached:
                    reached.add(w)
                    queue.append(w)
        witness = tuple(sorted(reached))
    return MatchingResult(len(pairs), pairs, witness)


def brute_force_matching_number(bip: BipartiteStructure) -> int:
    """Exhaustive maximum matching size; exponential, for testing only."""
    nbrs = bip.neighbors_of_left()
    best = 0

    def rec(u, used, size):
        nonlocal best
        if size + (len(nbrs) - u) <= best:
            return
        if u == len(nbrs):
            best = max(best, size)
            return
        for v in nbrs[u]:
            if v not in used:
                used.add(v)
                rec(u + 1, used, size + 1)
                used.remove(v)
        rec(u + 1, used, size)

    rec(0, set(), 0)
    return best


def _quote(label) -> str:
    s = str(label).replace('"', r"\"")
    return f'"{s}"'


def bipartite_to_dot(bip: BipartiteStructure, matching: Optional[MatchingResult] = None,
                     name: str = "H_T", left_label=str, right_label=str) -> str:
    """Render a bipartite structure as DOT.

    Structural edges are gray; matched edges are blue and bold. Left vertices
    sit in one rank on the left, right vertices in another.
    """
    matched = set(matching.pairs) if matching is not None else set()
    lines = [f"graph {_quote(name)} {{", "  rankdir=LR;", "  node [shape=point];"]
    lines.append("  subgraph cluster_left { rank=same; color=white;")
    for a, lab in enumerate(bip.left):
        lines.append(f"    L{a} [xlabel={_quote(left_label(lab))}];")
    lines.append("  }")
    lines.append("  subgraph cluster_right { rank=same; color=white;")
    for b, lab in enumerate(bip.right):
        lines.append(f"    R{b} [xlabel={_quote(right_label(lab))}];")
    lines.append("  }")
    for a, b in sorted(bip.adjacency):
        if (a, b) in matched:
            lines.append(f"  L{a} -- R{b} [color=blue, penwidth=2.0];")
        else:
            lines.append(f"  L{a} -- R{b} [color=gray60, penwidth=0.5];")
    lines.append("}")
    return "\n".join(lines) + "\n"
