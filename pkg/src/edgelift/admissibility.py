"""Pointwise, sampled and combinatorial admissibility checks.

The system is admissible at x when the lift matrix A = J G has the same
image as the edge Jacobian J. Because Im A is always contained in Im J, this
reduces to comparing numerical ranks. The combinatorial route builds, for a
spanning tree T, the bipartite graph between tree-edge output coordinates and
input channels given by the sparsity of A_T, and asks for a matching that
saturates all (N - 1) d tree coordinates.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .edge_space import NetworkSystem, edge_jacobian
from .graph import (BipartiteStructure, MatchingResult, all_spanning_trees,
                    is_connected, max_matching)
from .errors import DisconnectedGraph
from .numlin import DEFAULT_TOL, ToleranceParams, numerical_rank

CERTIFIED = "certified_generic"
REFUTED = "refuted_structurally"
INCONCLUSIVE = "inconclusive"

DEFAULT_THRESHOLD = 1e-9
DEFAULT_PATTERN_SAMPLES = 5

Sampler = Callable[[np.random.Generator], np.ndarray]


def default_sampler(sys: NetworkSystem, boxes=None) -> Sampler:
    """Uniform draws from each agent's sampling box."""
    return lambda rng: sys.sample_state(rng, boxes)


def exact_admissibility_at(sys: NetworkSystem, x, tol: ToleranceParams = DEFAULT_TOL) -> dict:
    J = edge_jacobian(sys, x)
    A = J @ sys.input_matrix(x)
    rank_A = numerical_rank(A, tol)
    rank_J = numerical_rank(J, tol)
    return {"rank_A": rank_A, "rank_J": rank_J, "admissible": rank_A == rank_J}


@dataclass
class AdmissibilityReport:
    ranks_A: list[int] = field(default_factory=list)
    ranks_J: list[int] = field(default_factory=list)
    modal_rank_A: Optional[int] = None
    modal_rank_J: Optional[int] = None
    exact_admissible_fraction: Optional[float] = None
    rank_J_jumps: bool = False
    target_rank: Optional[int] = None
    trees: list[list[int]] = field(default_factory=list)
    matchings: list[MatchingResult] = field(default_factory=list)
    structures: list[BipartiteStructure] = field(default_factory=list)
    patterns: list["SparsityPattern"] = field(default_factory=list)
    certified: Optional[str] = None
    certifying_tree: Optional[int] = None
    trees_truncated: bool = False
    rank_vs_matching_discrepancies: int = 0

    @property
    def nu(self) -> Optional[int]:
        """Matching number of the certifying tree, else the best one seen."""
        if not self.matchings:
            return None
        if self.certifying_tree is not None:
            return self.matchings[self.certifying_tree].size
        return max(m.size for m in self.matchings)

    def to_dict(self) -> dict:
        out = {
            "verdict": self.certified,
            "verdict_note": (
                "sufficient-condition failure: no examined spanning tree admits a "
                "matching saturating all tree-edge coordinates"
                if self.certified == REFUTED else None),
            "target_rank": self.target_rank,
            "nu": self.nu,
            "numeric": {
                "num_samples": len(self.ranks_A),
                "ranks_A": self.ranks_A,
                "ranks_J": self.ranks_J,
                "modal_rank_A": self.modal_rank_A,
                "modal_rank_J": self.modal_rank_J,
                "exact_admissible_fraction": self.exact_admissible_fraction,
                "rank_J_jumps": self.rank_J_jumps,
            },
            "trees_examined": len(self.trees),
            "trees_truncated": self.trees_truncated,
            "certifying_tree": (self.trees[self.certifying_tree]
                                if self.certifying_tree is not None else None),
            "rank_vs_matching_discrepancies": self.rank_vs_matching_discrepancies,
            "trees": [],
        }
        for tree, match, bip, pat in zip(self.trees, self.matchings, self.structures,
                                         self.patterns):
            witness = None
            if match.deficiency_witness is not None:
                S = list(match.deficiency_witness)
                gamma = sorted(bip.gamma(S))
                witness = {
                    "S": [list(bip.left[a]) for a in S],
                    "gamma_S": [list(bip.right[b]) for b in gamma],
                    "size_S": len(S),
                    "size_gamma_S": len(gamma),
                }
            out["trees"].append({
                "edges": tree,
                "nu": match.size,
                "left": [list(lab) for lab in bip.left],
                "right": [list(lab) for lab in bip.right],
                "matching": [[list(bip.left[a]), list(bip.right[b])] for a, b in match.pairs],
                "hall_witness": witness,
                "pattern": pat.bitmask_rows(),
            })
        return out


def sampled_generic_admissibility(sys: NetworkSystem, num_samples: int = 100,
                                  sampler: Optional[Sampler] = None,
                                  tol: ToleranceParams = DEFAULT_TOL,
                                  seed: int = 0) -> AdmissibilityReport:
    """Rank test of A against J at ``num_samples`` seeded random states."""
    if num_samples < 1:
        raise ValueError("num_samples must be >= 1")
    sampler = sampler or default_sampler(sys)
    rng = np.random.default_rng(seed)
    report = AdmissibilityReport()
    for _ in range(num_samples):
        res = exact_admissibility_at(sys, sampler(rng), tol)
        report.ranks_A.append(res["rank_A"])
        report.ranks_J.append(res["rank_J"])
    report.modal_rank_A = Counter(report.ranks_A).most_common(1)[0][0]
    report.modal_rank_J = Counter(report.ranks_J).most_common(1)[0][0]
    hits = sum(a == j for a, j in zip(report.ranks_A, report.ranks_J))
    report.exact_admissible_fraction = hits / num_samples
    report.rank_J_jumps = len(set(report.ranks_J)) > 1
    return report


@dataclass(frozen=True)
class SparsityPattern:
    """Structural nonzeros of A_T: rows (tree edge, k), columns (agent, channel)."""

    mask: np.ndarray
    tree: tuple[int, ...]
    num_samples: int
    threshold: float

    @property
    def shape(self):
        return self.mask.shape

    def bitmask_rows(self) -> list[str]:
        return ["".join("1" if v else "0" for v in row) for row in self.mask]


def tree_lift_matrix(sys: NetworkSystem, tree, x) -> np.ndarray:
    """A_T(x): rows of J G belonging to the tree edges."""
    d = sys.d
    rows = np.concatenate([np.arange(e * d, (e + 1) * d) for e in tree]) if len(tree) else \
        np.zeros(0, dtype=int)
    A = edge_jacobian(sys, x) @ sys.input_matrix(x)
    return A[rows]


def structural_pattern(sys: NetworkSystem, tree, num_samples: int = DEFAULT_PATTERN_SAMPLES,
                       threshold: float = DEFAULT_THRESHOLD, seed: int = 0,
                       sampler: Optional[Sampler] = None) -> SparsityPattern:
    """Union over sampled states of the entries of A_T exceeding ``threshold``."""
    tree = tuple(int(e) for e in tree)
    if len(tree) != sys.N - 1 or not is_connected(sys.graph.subgraph_edges(tree)):
        raise ValueError(f"edges {list(tree)} do not form a spanning tree")
    sampler = sampler or default_sampler(sys)
    rng = np.random.default_rng(seed)
    mask = np.zeros((len(tree) * sys.d, sys.p), dtype=bool)
    for _ in range(num_samples):
        mask |= np.abs(tree_lift_matrix(sys, tree, sampler(rng))) > threshold
    mask.setflags(write=False)
    return SparsityPattern(mask, tree, num_samples, threshold)


def _labels(sys: NetworkSystem, tree):
    left = tuple((int(e), k) for e in tree for k in range(1, sys.d + 1))
    right = tuple((i + 1, l) for i, a in enumerate(sys.agents)
                  for l in range(1, a.input_dim + 1))
    return left, right


def bipartite_from_pattern(sys: NetworkSystem, pattern: SparsityPattern) -> BipartiteStructure:
    """H_T with left labels (edge index, k) and right labels (agent, channel)."""
    left, right = _labels(sys, pattern.tree)
    return BipartiteStructure.from_pattern(pattern.mask, left, right)


def matching_certificate(sys: NetworkSystem, tol: ToleranceParams = DEFAULT_TOL,
                         tree_cap: int = 1000, seed: int = 0, *,
                         num_samples: int = 100,
                         pattern_samples: int = DEFAULT_PATTERN_SAMPLES,
                         threshold: float = DEFAULT_THRESHOLD,
                         sampler: Optional[Sampler] = None) -> AdmissibilityReport:
    """Search spanning trees for a matching of size (N - 1) d in H_T.

    The first tree that succeeds certifies generic admissibility. If every
    enumerated tree fails and the enumeration was complete, the verdict is
    ``refuted_structurally`` (failure of a sufficient condition); if the
    enumeration was truncated it is ``inconclusive``. Sampled numeric ranks are
    reported alongside in every case.
    """
    if not is_connected(sys.graph):
        raise DisconnectedGraph(f"graph with {sys.N} nodes is not connected")
    report = sampled_generic_admissibility(sys, num_samples, sampler, tol, seed)
    target = (sys.N - 1) * sys.d
    report.target_rank = target
    enumeration = all_spanning_trees(sys.graph, tree_cap)
    report.trees_truncated = enumeration.truncated
    check_rng = np.random.default_rng([seed, 1])
    sampler = sampler or default_sampler(sys)
    for idx, tree in enumerate(enumeration):
        pattern = structural_pattern(sys, tree, pattern_samples, threshold, seed, sampler)
        bip = bipartite_from_pattern(sys, pattern)
        match = max_matching(bip)
        report.trees.append(list(tree))
        report.patterns.append(pattern)
        report.structures.append(bip)
        report.matchings.append(match)
        # numeric cross-check of structured rank against the matching number
        if numerical_rank(tree_lift_matrix(sys, tree, sampler(check_rng)), tol) != match.size:
            report.rank_vs_matching_discrepancies += 1
        if match.size == target:
            report.certified = CERTIFIED
            report.certifying_tree = idx
            return report
    report.certified = INCONCLUSIVE if enumeration.truncated else REFUTED
    return report
