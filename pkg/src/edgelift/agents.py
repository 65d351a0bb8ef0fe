"""Control-affine agent models x' = f(x) + G(x) u, y = h(x).

Every model carries an analytic output Jacobian ``Dh``; finite differences
are used only by :func:`validate_jacobian`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import DomainError

# Polar models are guarded away from the coordinate singularity at r = 0.
HOPF_MIN_RADIUS = 1e-6

ACTUATIONS = ("full", "radial_only")


@dataclass(frozen=True)
class AgentModel:
    state_dim: int
    input_dim: int
    output_dim: int
    f: Callable[[np.ndarray], np.ndarray]
    G: Callable[[np.ndarray], np.ndarray]
    h: Callable[[np.ndarray], np.ndarray]
    Dh: Callable[[np.ndarray], np.ndarray]
    kind: str = "custom"
    params: dict = field(default_factory=dict)
    # default sampling box per state coordinate, (low, high)
    box: tuple = ()

    def sample_state(self, rng: np.random.Generator, box=None) -> np.ndarray:
        box = box if box is not None else self.box
        if not box:
            return rng.uniform(-1.0, 1.0, self.state_dim)
        lo, hi = np.asarray(box, dtype=float).T
        return rng.uniform(lo, hi)

    def spec(self) -> dict:
        """JSON-compatible description used by scenario files."""
        return {"kind": self.kind, "params": dict(self.params)}


@dataclass(frozen=True)
class HopfOscillatorParams:
    omega: float = 1.0
    actuation: str = "full"

    def __post_init__(self):
        if not self.omega > 0:
            raise ValueError(f"omega must be positive, got {self.omega!r}")
        if self.actuation not in ACTUATIONS:
            raise ValueError(f"actuation must be one of {ACTUATIONS}, got {self.actuation!r}")


def make_single_integrator(dim: int) -> AgentModel:
    if dim < 1:
        raise ValueError("dim must be >= 1")
    eye = np.eye(dim)
    return AgentModel(
        state_dim=dim, input_dim=dim, output_dim=dim,
        f=lambda x: np.zeros(dim),
        G=lambda x: eye.copy(),
        h=lambda x: np.array(x, dtype=float),
        Dh=lambda x: eye.copy(),
        kind="single_integrator", params={"dim": dim},
        box=((-1.0, 1.0),) * dim,
    )


def make_hopf_oscillator(params: HopfOscillatorParams = HopfOscillatorParams()) -> AgentModel:
    """Polar-coordinate oscillator with state (r, theta) and a unit limit cycle.

    Output is the Cartesian position (r cos theta, r sin theta). With
    ``radial_only`` actuation the angular input column of G is zero.
    """
    omega = float(params.omega)
    G_mat = np.eye(2) if params.actuation == "full" else np.diag([1.0, 0.0])

    def check(x):
        if x[0] <= HOPF_MIN_RADIUS:
            raise DomainError(f"Hopf oscillator evaluated at r={x[0]:g} <= {HOPF_MIN_RADIUS:g}")

    def f(x):
        check(x)
        r = x[0]
        return np.array([(1.0 - r * r) * r, omega])

    def G(x):
        check(x)
        return G_mat.copy()

    def h(x):
        check(x)
        r, th = x
        return np.array([r * np.cos(th), r * np.sin(th)])

    def Dh(x):
        check(x)
        r, th = x
        c, s = np.cos(th), np.sin(th)
        return np.array([[c, -r * s], [s, r * c]])

    return AgentModel(
        state_dim=2, input_dim=2, output_dim=2, f=f, G=G, h=h, Dh=Dh,
        kind="hopf", params={"omega": omega, "actuation": params.actuation},
        box=((0.5, 1.5), (0.0, 2.0 * np.pi)),
    )


def make_linear_agent(A, B, C) -> AgentModel:
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.asarray(B, dtype=float)
    C = np.atleast_2d(np.asarray(C, dtype=float))
    n = A.shape[0]
    if B.ndim == 1:
        B = B.reshape(n, 1)
    if A.shape != (n, n):
        raise ValueError(f"A must be square, got {A.shape}")
    if B.shape[0] != n:
        raise ValueError(f"B has {B.shape[0]} rows, expected {n}")
    if C.shape[1] != n:
        raise ValueError(f"C has {C.shape[1]} columns, expected {n}")
    return AgentModel(
        state_dim=n, input_dim=B.shape[1], output_dim=C.shape[0],
        f=lambda x: A @ x,
        G=lambda x: B.copy(),
        h=lambda x: C @ x,
        Dh=lambda x: C.copy(),
        kind="linear", params={"A": A.tolist(), "B": B.tolist(), "C": C.tolist()},
        box=((-1.0, 1.0),) * n,
    )


def make_agent(kind: str, params: dict | None = None) -> AgentModel:
    """Construct a model from its scenario-file kind tag and parameters."""
    params = dict(params or {})
    if kind == "single_integrator":
        return make_single_integrator(int(params.get("dim", 1)))
    if kind == "hopf":
        return make_hopf_oscillator(HopfOscillatorParams(
            omega=float(params.get("omega", 1.0)),
            actuation=params.get("actuation", "full"),
        ))
    if kind == "linear":
        return make_linear_agent(params["A"], params["B"], params["C"])
    raise ValueError(f"unknown agent kind {kind!r}")


AGENT_KINDS = ("single_integrator", "hopf", "linear")


def output_dynamics(model: AgentModel, x_i) -> tuple[np.ndarray, np.ndarray]:
    """Return (a_i, H_i) with y_i' = a_i + H_i u_i."""
    x_i = np.asarray(x_i, dtype=float)
    Dh = model.Dh(x_i)
    return Dh @ model.f(x_i), Dh @ model.G(x_i)


def validate_jacobian(model: AgentModel, sample_states, step: float = 1e-6) -> float:
    """Max relative error between analytic Dh and central differences of h.

    The error at each state is ||Dh - Dh_fd||_max / max(1, ||Dh||_max).
    """
    worst = 0.0
    for x in sample_states:
        x = np.asarray(x, dtype=float)
        analytic = model.Dh(x)
        fd = np.empty_like(analytic)
        for k in range(model.state_dim):
            e = np.zeros_like(x)
            e[k] = step
            fd[:, k] = (model.h(x + e) - model.h(x - e)) / (2.0 * step)
        scale = max(1.0, float(np.max(np.abs(analytic), initial=0.0)))
        worst = max(worst, float(np.max(np.abs(analytic - fd), initial=0.0)) / scale)
    return worst
