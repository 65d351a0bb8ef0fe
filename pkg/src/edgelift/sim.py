"""Fixed-step RK4 closed-loop simulation and synchronization metrics."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .edge_space import NetworkSystem, assemble_edge_operators
from .errors import DegenerateWindow, DomainError, NonFiniteState
from .numlin import DEFAULT_TOL, ToleranceParams

# V_e values at or below this are excluded from the log-linear rate fit.
LOG_FLOOR = 1e-14


def rk4_step(derivative: Callable[[float, np.ndarray], np.ndarray], t: float,
             x: np.ndarray, dt: float, k1: Optional[np.ndarray] = None) -> np.ndarray:
    """One classical Runge-Kutta step; ``k1`` may be passed if already known."""
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt!r}")
    if k1 is None:
        k1 = derivative(t, x)
    k2 = derivative(t + dt / 2, x + dt / 2 * k1)
    k3 = derivative(t + dt / 2, x + dt / 2 * k2)
    k4 = derivative(t + dt, x + dt * k3)
    x_next = x + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    if not np.all(np.isfinite(x_next)):
        raise NonFiniteState("RK4 produced a non-finite state", time=t + dt)
    return x_next


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    inputs: np.ndarray
    edges: np.ndarray
    lyapunov: np.ndarray
    lift_residuals: np.ndarray
    v_star_norms: np.ndarray
    dt: float
    angle_columns: tuple[int, ...] = ()

    @property
    def edge_norms(self) -> np.ndarray:
        return np.linalg.norm(self.edges, axis=1)

    @property
    def relative_realization_error(self) -> np.ndarray:
        """||J f + A u - v*|| / (1 + ||v*||) at each grid point."""
        return self.lift_residuals / (1.0 + self.v_star_norms)

    def to_csv(self) -> str:
        n, p, md = self.states.shape[1], self.inputs.shape[1], self.edges.shape[1]
        header = (["t"] + [f"x_{i}" for i in range(1, n + 1)]
                  + [f"u_{i}" for i in range(1, p + 1)]
                  + [f"z_{i}" for i in range(1, md + 1)] + ["V_e", "lift_residual"])
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(header)
        table = np.column_stack([self.times, self.states, self.inputs, self.edges,
                                 self.lyapunov, self.lift_residuals])
        for row in table:
            writer.writerow([f"{v:.17g}" for v in row])
        return buf.getvalue()


def simulate(sys: NetworkSystem, controller: Callable[[np.ndarray], np.ndarray], x0,
             t_final: float = 10.0, dt: float = 1e-3, *, k: float = 1.0,
             tol: ToleranceParams = DEFAULT_TOL, zoh: bool = False) -> Trajectory:
    """Integrate x' = f(x) + G(x) u(x) on a uniform grid.

    The controller is re-evaluated at every RK4 stage unless ``zoh`` is set,
    in which case the input computed at the grid point is held over the step.
    Recorded per grid point: state, applied input, edge values z, V_e, and
    ||A u - b|| (the gap between realized and prescribed edge velocity).
    """
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt!r}")
    if not t_final > 0:
        raise ValueError(f"t_final must be positive, got {t_final!r}")
    steps = int(round(t_final / dt))
    if not np.isclose(steps * dt, t_final, rtol=1e-9, atol=0.0):
        raise ValueError(f"t_final={t_final} is not a multiple of dt={dt}")
    x = np.array(x0, dtype=float)
    if x.shape != (sys.n,):
        raise ValueError(f"x0 has shape {x.shape}, expected ({sys.n},)")

    times = np.arange(steps + 1) * dt
    X = np.empty((steps + 1, sys.n))
    U = np.empty((steps + 1, sys.p))
    Z = np.empty((steps + 1, sys.m * sys.d))
    residuals = np.empty(steps + 1)
    vnorms = np.empty(steps + 1)

    t = 0.0
    recorded = 0
    for step in range(steps + 1):
        t = times[step]
        try:
            ops = assemble_edge_operators(sys, x, k, tol)
            u = np.asarray(controller(x), dtype=float)
            X[step], U[step], Z[step] = x, u, ops.F_val
            residuals[step] = np.linalg.norm(ops.A @ u - ops.b)
            vnorms[step] = np.linalg.norm(ops.v_star)
            recorded = step + 1
            if step == steps:
                break
            if zoh:
                def rhs(_, xs, u=u):
                    return sys.dynamics(xs, u)
            else:
                def rhs(_, xs):
                    return sys.dynamics(xs, controller(xs))
            x = rk4_step(rhs, t, x, dt, k1=ops.f_val + ops.G @ u)
        except (DomainError, NonFiniteState) as exc:
            # the partial trajectory keeps every grid point recorded so far
            err = type(exc)(str(exc).split(" (t=")[0], time=t)
            r = recorded
            err.trajectory = _build(sys, times[:r], X[:r], U[:r], Z[:r],
                                    residuals[:r], vnorms[:r], dt)
            raise err from exc

    return _build(sys, times, X, U, Z, residuals, vnorms, dt)


def _build(sys, times, X, U, Z, residuals, vnorms, dt) -> Trajectory:
    angle_cols = tuple(int(off) + 1 for agent, off in zip(sys.agents, sys.state_offsets[:-1])
                       if agent.kind == "hopf")
    return Trajectory(times, X, U, Z, 0.5 * np.sum(Z * Z, axis=1), residuals, vnorms,
                      float(dt), angle_cols)


@dataclass(frozen=True)
class SyncMetrics:
    rate: float
    rate_window: tuple[float, float]
    final_edge_norm: float
    residual_floor: float
    tail_window: tuple[float, float]
    phase_offset_drift: Optional[float]

    def to_dict(self) -> dict:
        return {
            "rate": self.rate,
            "rate_window": list(self.rate_window),
            "final_edge_norm": self.final_edge_norm,
            "residual_floor": self.residual_floor,
            "tail_window": list(self.tail_window),
            "phase_offset_drift": self.phase_offset_drift,
        }


def _window_mask(times, window):
    lo, hi = window
    if not lo < hi:
        raise DegenerateWindow(f"window [{lo}, {hi}] is empty")
    eps = 1e-9 * max(1.0, abs(hi))
    return (times >= lo - eps) & (times <= hi + eps)


def compute_metrics(traj: Trajectory, window: Optional[tuple[float, float]] = None,
                    tail: Optional[tuple[float, float]] = None) -> SyncMetrics:
    """Fit log V_e ~ rate * t on ``window`` and measure disagreement on ``tail``.

    Defaults: window = [0.1 T, 0.5 T], tail = [0.5 T, T] with T the final time.
    The rate is 0 when V_e is constant; points with V_e <= 1e-14 are dropped.
    """
    T = float(traj.times[-1])
    window = tuple(window) if window is not None else (0.1 * T, 0.5 * T)
    tail = tuple(tail) if tail is not None else (0.5 * T, T)

    mask = _window_mask(traj.times, window) & (traj.lyapunov > LOG_FLOOR)
    if np.count_nonzero(mask) < 2:
        raise DegenerateWindow(f"fewer than two usable samples in window {window}")
    slope = np.polyfit(traj.times[mask], np.log(traj.lyapunov[mask]), 1)[0]

    tail_mask = _window_mask(traj.times, tail)
    if not np.any(tail_mask):
        raise DegenerateWindow(f"no samples in tail window {tail}")
    norms = traj.edge_norms

    drift = None
    if len(traj.angle_columns) > 1:
        theta = traj.states[:, list(traj.angle_columns)]
        offsets = theta - theta[:, :1]
        drift = float(np.max(np.abs(offsets - offsets[0])))
    return SyncMetrics(float(slope), window, float(norms[-1]),
                       float(np.min(norms[tail_mask])), tail, drift)
