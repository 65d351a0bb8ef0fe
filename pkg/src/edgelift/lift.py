"""Controllers that lift a prescribed edge velocity to node inputs.

Three kinds share one closure interface (``x -> u``):

* ``model_lift``: u* = pinv(J G) (v* - J f), the minimum-norm lift;
* ``family``: u* plus a kernel-projected free term w(x);
* ``distributed``: per-agent right inversion of the output channel driven by
  a diffusive outer loop on neighbor output differences.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .agents import output_dynamics
from .edge_space import EdgeOperators, NetworkSystem, assemble_edge_operators
from .errors import RankDeficientOutputChannel
from .numlin import DEFAULT_TOL, ToleranceParams, kernel_projector, numerical_rank, pinv

log = logging.getLogger(__name__)

CONTROLLER_KINDS = ("model_lift", "family", "distributed", "zero")


@dataclass(frozen=True)
class LiftResult:
    u_star: np.ndarray
    residual_norm: float
    feasible: bool
    realized_edge_velocity: np.ndarray


def min_norm_lift(ops: EdgeOperators, tol: ToleranceParams = DEFAULT_TOL) -> LiftResult:
    """Minimum-norm least-squares solution of A u = b.

    An inconsistent system is not an error: u* then realizes the orthogonal
    projection of b onto Im A and ``feasible`` is False.
    """
    u = pinv(ops.A, tol) @ ops.b if ops.A.size else np.zeros(ops.A.shape[1])
    Au = ops.A @ u
    residual = float(np.linalg.norm(Au - ops.b))
    feasible = residual <= tol.residual_atol * (1.0 + float(np.linalg.norm(ops.b)))
    return LiftResult(u, residual, feasible, ops.drift_edge_velocity + Au)


def family_lift(ops: EdgeOperators, w, tol: ToleranceParams = DEFAULT_TOL) -> np.ndarray:
    """u* + (I - A^+ A) w; every member realizes the same edge velocity."""
    w = np.asarray(w, dtype=float)
    return min_norm_lift(ops, tol).u_star + kernel_projector(ops.A, tol) @ w


@dataclass(frozen=True)
class DiffusiveWeights:
    """Outer-loop weights; w[i, j] couples agent i to agent j (0-based)."""

    w: np.ndarray

    def __post_init__(self):
        w = np.array(self.w, dtype=float)
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise ValueError(f"weights must be square, got shape {w.shape}")
        if np.any(w < 0):
            raise ValueError("weights must be nonnegative")
        if np.any(np.diag(w) != 0):
            raise ValueError("weights must have a zero diagonal")
        w.setflags(write=False)
        object.__setattr__(self, "w", w)

    @classmethod
    def from_graph(cls, graph, weight: float = 1.0) -> "DiffusiveWeights":
        """Symmetric weights on the undirected edges of ``graph``."""
        w = np.zeros((graph.num_nodes, graph.num_nodes))
        for i, j in graph.edges:
            w[i - 1, j - 1] = w[j - 1, i - 1] = weight
        return cls(w)

    def laplacian(self) -> np.ndarray:
        return np.diag(self.w.sum(axis=1)) - self.w

    def has_spanning_tree(self) -> bool:
        """True when some node reaches every other node along j -> i links.

        Agent i listens to j when w[i, j] > 0, so information flows j -> i.
        """
        N = self.w.shape[0]
        for root in range(N):
            seen = {root}
            stack = [root]
            while stack:
                j = stack.pop()
                for i in np.nonzero(self.w[:, j] > 0)[0]:
                    if i not in seen:
                        seen.add(int(i))
                        stack.append(int(i))
            if len(seen) == N:
                return True
        return False


def distributed_control(sys: NetworkSystem, x, weights: DiffusiveWeights,
                        tol: ToleranceParams = DEFAULT_TOL) -> np.ndarray:
    """Local right inversion u_i = H_i^+ (v_i - a_i) with v_i = -sum_j w_ij (y_i - y_j).

    Agent i uses only its own state and the outputs of agents j with w_ij > 0.
    """
    if weights.w.shape != (sys.N, sys.N):
        raise ValueError(f"weights shape {weights.w.shape} does not match N={sys.N}")
    xs = sys.split_state(x)
    ys = [a.h(xi) for a, xi in zip(sys.agents, xs)]
    parts = []
    for i, (agent, xi) in enumerate(zip(sys.agents, xs)):
        a_i, H_i = output_dynamics(agent, xi)
        rank = numerical_rank(H_i, tol)
        if rank < agent.output_dim:
            raise RankDeficientOutputChannel(i + 1, rank, agent.output_dim)
        v_i = np.zeros(agent.output_dim)
        for j in np.nonzero(weights.w[i])[0]:
            v_i -= weights.w[i, j] * (ys[i] - ys[j])
        parts.append(pinv(H_i, tol) @ (v_i - a_i))
    return np.concatenate(parts)


def controller_closure(kind: str, sys: NetworkSystem, *, k: float = 1.0,
                       tol: ToleranceParams = DEFAULT_TOL,
                       weights: Optional[DiffusiveWeights] = None,
                       w_policy: Optional[Callable[[np.ndarray], np.ndarray]] = None):
    """Return a state feedback ``x -> u`` for the requested controller kind."""
    if kind == "model_lift":
        def control(x):
            return min_norm_lift(assemble_edge_operators(sys, x, k, tol), tol).u_star
    elif kind == "family":
        policy = w_policy if w_policy is not None else (lambda x: np.zeros(sys.p))

        def control(x):
            return family_lift(assemble_edge_operators(sys, x, k, tol), policy(x), tol)
    elif kind == "distributed":
        if weights is None:
            weights = DiffusiveWeights.from_graph(sys.graph)
        if not weights.has_spanning_tree():
            log.warning("diffusive weight graph has no spanning tree; consensus is not guaranteed")

        def control(x):
            return distributed_control(sys, x, weights, tol)
    elif kind == "zero":
        def control(x):
            return np.zeros(sys.p)
    else:
        raise ValueError(f"unknown controller kind {kind!r}; expected one of {CONTROLLER_KINDS}")
    control.kind = kind
    return control
