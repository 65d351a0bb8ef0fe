"""JSON scenario files: schema validation, construction of the network and
controller, and the analysis pipelines behind the CLI subcommands."""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Optional

import jsonschema
import numpy as np

from .admissibility import matching_certificate, sampled_generic_admissibility
from .agents import make_agent
from .edge_space import NetworkSystem
from .errors import DomainError, NonFiniteState, SchemaError
from .graph import Graph, bipartite_to_dot
from .lift import DiffusiveWeights, controller_closure
from .numlin import ToleranceParams
from .sim import compute_metrics, simulate

SCHEMA_VERSION = 1

DEFAULT_ANALYSIS = {
    "num_samples": 100,
    "pattern_samples": 5,
    "tree_cap": 1000,
    "tolerances": {"rank_rtol": 1e-10, "residual_atol": 1e-8, "structural_threshold": 1e-9},
    "sampler_box": None,
}
DEFAULT_SIMULATION = {"t_final": 10.0, "dt": 1e-3, "seed": 0}
DEFAULT_CONTROLLER = {"gain": 1.0, "w_policy": "zero", "zoh": False}


def _data(name: str):
    return resources.files("edgelift") / "data" / name


def builtin_scenario(name: str) -> Path:
    """Path of a shipped scenario file, e.g. ``builtin_scenario("case_a")``."""
    return Path(str(_data(f"{name}.json")))


def load_schema() -> dict:
    return json.loads(_data("scenario.schema.json").read_text(encoding="utf-8"))


def _json_path(parts) -> str:
    out = ""
    for p in parts:
        out += f"[{p}]" if isinstance(p, int) else (f".{p}" if out else str(p))
    return out or "$"


@dataclass(frozen=True)
class Scenario:
    num_nodes: int
    edges: tuple
    agents: tuple
    controller: dict
    simulation: dict
    analysis: dict = field(default_factory=lambda: json.loads(json.dumps(DEFAULT_ANALYSIS)))
    name: str = ""

    @property
    def graph(self) -> Graph:
        return Graph(self.num_nodes, tuple(tuple(e) for e in self.edges))

    @property
    def tolerances(self) -> ToleranceParams:
        tol = self.analysis["tolerances"]
        return ToleranceParams(tol["rank_rtol"], tol["residual_atol"])

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "name": self.name,
            "graph": {"num_nodes": self.num_nodes, "edges": [list(e) for e in self.edges]},
            "agents": [dict(a) for a in self.agents],
            "controller": dict(self.controller),
            "simulation": dict(self.simulation),
            "analysis": json.loads(json.dumps(self.analysis)),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def digest(self) -> str:
        canon = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode("utf-8")).hexdigest()

    def with_overrides(self, **kw) -> "Scenario":
        """Copy with command-line overrides applied and revalidated."""
        data = self.to_dict()
        for key, section, slot in (("seed", "simulation", "seed"), ("dt", "simulation", "dt"),
                                   ("t_final", "simulation", "t_final"),
                                   ("samples", "analysis", "num_samples"),
                                   ("tree_cap", "analysis", "tree_cap")):
            if kw.get(key) is not None:
                data[section][slot] = kw[key]
        return scenario_from_dict(data)

    def build_system(self) -> NetworkSystem:
        graph = self.graph
        agents = [make_agent(a["kind"], a.get("params")) for a in self.agents]
        return NetworkSystem(graph, agents)

    def sampler_boxes(self):
        return self.analysis.get("sampler_box")

    def build_controller(self, sys: Optional[NetworkSystem] = None):
        sys = sys or self.build_system()
        ctrl = self.controller
        weights = None
        if ctrl["kind"] == "distributed":
            w = ctrl.get("weights", "unit")
            weights = (DiffusiveWeights.from_graph(sys.graph) if w == "unit"
                       else DiffusiveWeights(np.array(w, dtype=float)))
        return controller_closure(ctrl["kind"], sys, k=ctrl["gain"], tol=self.tolerances,
                                  weights=weights)


def _merge(defaults: dict, given: dict) -> dict:
    out = json.loads(json.dumps(defaults))
    for k, v in given.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = v
    return out


def scenario_from_dict(data: Any) -> Scenario:
    validator = jsonschema.Draft202012Validator(load_schema())
    error = jsonschema.exceptions.best_match(validator.iter_errors(data))
    if error is not None:
        raise SchemaError(_json_path(error.absolute_path), error.message)

    graph_d = data["graph"]
    try:
        Graph(graph_d["num_nodes"], tuple(tuple(e) for e in graph_d["edges"]))
    except ValueError as exc:
        raise SchemaError("graph.edges", str(exc)) from None
    agents = data["agents"]
    if len(agents) != graph_d["num_nodes"]:
        raise SchemaError("agents", f"{len(agents)} agents for {graph_d['num_nodes']} nodes")
    models = []
    for i, a in enumerate(agents):
        try:
            models.append(make_agent(a["kind"], a.get("params")))
        except (ValueError, KeyError, TypeError) as exc:
            raise SchemaError(f"agents[{i}]", f"invalid parameters: {exc}") from None
    for i, model in enumerate(models):
        if model.output_dim != models[0].output_dim:
            raise SchemaError(f"agents[{i}]", f"output dimension {model.output_dim} differs "
                                              f"from agents[0] ({models[0].output_dim})")

    simulation = _merge(DEFAULT_SIMULATION, data["simulation"])
    n = sum(m.state_dim for m in models)
    if len(simulation["x0"]) != n:
        raise SchemaError("simulation.x0", f"length {len(simulation['x0'])}, expected {n}")
    t_final, dt = simulation["t_final"], simulation["dt"]
    steps = round(t_final / dt)
    if steps < 1 or abs(steps * dt - t_final) > 1e-9 * t_final:
        raise SchemaError("simulation.dt", f"t_final={t_final} is not a multiple of dt={dt}")
    for key in ("rate_window", "tail_window"):
        if key in simulation and not simulation[key][0] < simulation[key][1]:
            raise SchemaError(f"simulation.{key}", "window must satisfy lo < hi")

    controller = _merge(DEFAULT_CONTROLLER, data["controller"])
    if controller["kind"] == "distributed" and "weights" not in controller:
        controller["weights"] = "unit"
    w = controller.get("weights")
    if isinstance(w, list):
        try:
            DiffusiveWeights(np.array(w, dtype=float))
        except ValueError as exc:
            raise SchemaError("controller.weights", str(exc)) from None
        if len(w) != graph_d["num_nodes"]:
            raise SchemaError("controller.weights", "must be num_nodes x num_nodes")

    analysis = _merge(DEFAULT_ANALYSIS, data.get("analysis", {}))
    box = analysis.get("sampler_box")
    if box is not None:
        if len(box) != len(models):
            raise SchemaError("analysis.sampler_box", "one box per agent required")
        for i, (b, m) in enumerate(zip(box, models)):
            if len(b) != m.state_dim or any(lo > hi for lo, hi in b):
                raise SchemaError(f"analysis.sampler_box[{i}]",
                                  f"expected {m.state_dim} [lo, hi] pairs")

    return Scenario(
        num_nodes=graph_d["num_nodes"],
        edges=tuple(tuple(e) for e in graph_d["edges"]),
        agents=tuple({"kind": a["kind"], "params": dict(a.get("params", {}))} for a in agents),
        controller=controller,
        simulation=simulation,
        analysis=analysis,
        name=data.get("name", ""),
    )


def parse_scenario(text: str) -> Scenario:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError("$", f"invalid JSON: {exc}") from None
    return scenario_from_dict(data)


def load_scenario(path) -> Scenario:
    return parse_scenario(Path(path).read_text(encoding="utf-8"))


def atomic_write(path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


# ----------------------------------------------------------------------------
# pipelines


def _sampler(scn: Scenario, sys: NetworkSystem):
    boxes = scn.sampler_boxes()
    return lambda rng: sys.sample_state(rng, boxes)


def run_check(scn: Scenario):
    sys = scn.build_system()
    an = scn.analysis
    return matching_certificate(
        sys, scn.tolerances, tree_cap=an["tree_cap"], seed=scn.simulation["seed"],
        num_samples=an["num_samples"], pattern_samples=an["pattern_samples"],
        threshold=an["tolerances"]["structural_threshold"], sampler=_sampler(scn, sys))


def run_rank(scn: Scenario) -> dict:
    sys = scn.build_system()
    rep = sampled_generic_admissibility(sys, scn.analysis["num_samples"], _sampler(scn, sys),
                                        scn.tolerances, scn.simulation["seed"])
    return {
        "scenario_digest": scn.digest(),
        "target_rank": (sys.N - 1) * sys.d,
        "samples": [{"index": i, "rank_A": a, "rank_J": j, "admissible": a == j}
                    for i, (a, j) in enumerate(zip(rep.ranks_A, rep.ranks_J))],
        "modal_rank_A": rep.modal_rank_A,
        "modal_rank_J": rep.modal_rank_J,
        "exact_admissible_fraction": rep.exact_admissible_fraction,
        "rank_J_jumps": rep.rank_J_jumps,
    }


def run_matching(scn: Scenario, out_dir) -> dict:
    """Write H_T of the first examined (or certifying) tree as DOT and JSON."""
    report = run_check(scn)
    idx = report.certifying_tree if report.certifying_tree is not None else 0
    bip, match = report.structures[idx], report.matchings[idx]
    out_dir = Path(out_dir)
    dot_path, json_path = out_dir / "matching.dot", out_dir / "matching.json"
    edges = scn.edges
    atomic_write(dot_path, bipartite_to_dot(
        bip, match,
        left_label=lambda lab: f"z({edges[lab[0]][0]}-{edges[lab[0]][1]}),{lab[1]}",
        right_label=lambda lab: f"u({lab[0]},{lab[1]})"))
    tree_info = report.to_dict()["trees"][idx]
    payload = {
        "scenario_digest": scn.digest(),
        "verdict": report.certified,
        "target": report.target_rank,
        "num_left": len(bip.left),
        "num_right": len(bip.right),
        "isolated_right": [list(bip.right[b]) for b in range(len(bip.right))
                           if b not in {bb for _, bb in bip.adjacency}],
        **tree_info,
        "files": {"dot": str(dot_path), "json": str(json_path)},
    }
    atomic_write(json_path, dumps(payload))
    return payload


@dataclass
class RunReport:
    scenario_digest: str
    admissibility: dict
    metrics: Optional[dict]
    files: dict
    terminated: Optional[dict] = None

    def to_dict(self) -> dict:
        return {
            "scenario_digest": self.scenario_digest,
            "admissibility": self.admissibility,
            "metrics": self.metrics,
            "terminated": self.terminated,
            "files": self.files,
        }


def run_simulate(scn: Scenario, out_dir) -> RunReport:
    """Simulate, write trajectory CSV and metrics JSON, return the run report.

    A simulation that leaves the model domain still writes the partial
    trajectory; the report's ``terminated`` entry records where it stopped.
    """
    sys = scn.build_system()
    sim = scn.simulation
    out_dir = Path(out_dir)
    csv_path, json_path = out_dir / "trajectory.csv", out_dir / "metrics.json"
    adm = run_check(scn).to_dict()
    terminated = None
    try:
        traj = simulate(sys, scn.build_controller(sys), np.array(sim["x0"], dtype=float),
                        sim["t_final"], sim["dt"], k=scn.controller["gain"],
                        tol=scn.tolerances, zoh=scn.controller["zoh"])
    except (DomainError, NonFiniteState) as exc:
        traj = exc.trajectory
        terminated = {"reason": type(exc).__name__, "message": str(exc), "time": exc.time}
    metrics = None
    if len(traj.times) > 1:
        T = sim["t_final"]
        window = sim.get("rate_window", [0.1 * T, 0.5 * T])
        tail = sim.get("tail_window", [0.5 * T, T])
        try:
            metrics = compute_metrics(traj, window, tail).to_dict()
        except ValueError as exc:
            metrics = {"error": str(exc)}
        metrics["max_relative_realization_error"] = float(np.max(traj.relative_realization_error))
    atomic_write(csv_path, traj.to_csv())
    report = RunReport(scn.digest(), adm, metrics,
                       {"csv": str(csv_path), "json": str(json_path)}, terminated)
    atomic_write(json_path, dumps(report.to_dict()))
    return report
