"""Stacked network operators: edge map, its Jacobian, tangent projector and
the prescribed projected gradient flow on edge space."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from .agents import AgentModel
from .graph import Graph, incidence_matrix
from .numlin import DEFAULT_TOL, ToleranceParams, range_projector


def _block_diag(blocks) -> np.ndarray:
    rows = sum(b.shape[0] for b in blocks)
    cols = sum(b.shape[1] for b in blocks)
    out = np.zeros((rows, cols))
    r = c = 0
    for b in blocks:
        out[r:r + b.shape[0], c:c + b.shape[1]] = b
        r += b.shape[0]
        c += b.shape[1]
    return out


@dataclass(frozen=True)
class NetworkSystem:
    graph: Graph
    agents: tuple[AgentModel, ...]

    def __post_init__(self):
        agents = tuple(self.agents)
        object.__setattr__(self, "agents", agents)
        if len(agents) != self.graph.num_nodes:
            raise ValueError(
                f"{len(agents)} agents given for a graph with {self.graph.num_nodes} nodes")
        dims = {a.output_dim for a in agents}
        if len(dims) != 1:
            raise ValueError(f"agents disagree on output dimension: {sorted(dims)}")

    @property
    def d(self) -> int:
        return self.agents[0].output_dim

    @property
    def N(self) -> int:
        return self.graph.num_nodes

    @property
    def m(self) -> int:
        return self.graph.num_edges

    @property
    def n(self) -> int:
        return sum(a.state_dim for a in self.agents)

    @property
    def p(self) -> int:
        return sum(a.input_dim for a in self.agents)

    @cached_property
    def state_offsets(self) -> np.ndarray:
        return np.concatenate([[0], np.cumsum([a.state_dim for a in self.agents])])

    @cached_property
    def input_offsets(self) -> np.ndarray:
        return np.concatenate([[0], np.cumsum([a.input_dim for a in self.agents])])

    @cached_property
    def edge_operator(self) -> np.ndarray:
        """B^T kron I_d, mapping stacked outputs to stacked edge differences."""
        return np.kron(incidence_matrix(self.graph).T, np.eye(self.d))

    def split_state(self, x) -> list[np.ndarray]:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.n,):
            raise ValueError(f"state has shape {x.shape}, expected ({self.n},)")
        o = self.state_offsets
        return [x[o[i]:o[i + 1]] for i in range(self.N)]

    def split_input(self, u) -> list[np.ndarray]:
        o = self.input_offsets
        return [u[o[i]:o[i + 1]] for i in range(self.N)]

    def outputs(self, x) -> np.ndarray:
        return np.concatenate([a.h(xi) for a, xi in zip(self.agents, self.split_state(x))])

    def drift(self, x) -> np.ndarray:
        return np.concatenate([a.f(xi) for a, xi in zip(self.agents, self.split_state(x))])

    def input_matrix(self, x) -> np.ndarray:
        return _block_diag([a.G(xi) for a, xi in zip(self.agents, self.split_state(x))])

    def output_jacobian(self, x) -> np.ndarray:
        return _block_diag([a.Dh(xi) for a, xi in zip(self.agents, self.split_state(x))])

    def dynamics(self, x, u) -> np.ndarray:
        return self.drift(x) + self.input_matrix(x) @ u

    def sample_state(self, rng, boxes=None) -> np.ndarray:
        boxes = boxes or [None] * self.N
        return np.concatenate([a.sample_state(rng, b) for a, b in zip(self.agents, boxes)])


def edge_map(sys: NetworkSystem, x) -> np.ndarray:
    """Stacked y_head - y_tail over the oriented edges."""
    return sys.edge_operator @ sys.outputs(x)


def edge_jacobian(sys: NetworkSystem, x) -> np.ndarray:
    return sys.edge_operator @ sys.output_jacobian(x)


def tangent_projector(sys: NetworkSystem, x, tol: ToleranceParams = DEFAULT_TOL) -> np.ndarray:
    return range_projector(edge_jacobian(sys, x), tol)


def edge_flow(sys: NetworkSystem, x, k: float = 1.0,
              tol: ToleranceParams = DEFAULT_TOL) -> np.ndarray:
    """Prescribed edge velocity -k Pi(x) F(x)."""
    if not k > 0:
        raise ValueError(f"gain k must be positive, got {k!r}")
    return -k * (tangent_projector(sys, x, tol) @ edge_map(sys, x))


@dataclass(frozen=True)
class EdgeOperators:
    x: np.ndarray
    F_val: np.ndarray
    J: np.ndarray
    Pi: np.ndarray
    A: np.ndarray
    b: np.ndarray
    v_star: np.ndarray
    f_val: np.ndarray
    G: np.ndarray

    @property
    def drift_edge_velocity(self) -> np.ndarray:
        """J f: edge velocity produced by the drift alone."""
        return self.J @ self.f_val


def assemble_edge_operators(sys: NetworkSystem, x, k: float = 1.0,
                            tol: ToleranceParams = DEFAULT_TOL) -> EdgeOperators:
    if not k > 0:
        raise ValueError(f"gain k must be positive, got {k!r}")
    x = np.asarray(x, dtype=float)
    F_val = edge_map(sys, x)
    J = edge_jacobian(sys, x)
    Pi = range_projector(J, tol)
    f_val = sys.drift(x)
    G = sys.input_matrix(x)
    v_star = -k * (Pi @ F_val)
    A = J @ G
    b = v_star - J @ f_val
    return EdgeOperators(x=x, F_val=F_val, J=J, Pi=Pi, A=A, b=b, v_star=v_star,
                         f_val=f_val, G=G)
