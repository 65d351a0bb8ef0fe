import json

import numpy as np
import pytest

from edgelift import SchemaError, builtin_scenario, load_scenario, parse_scenario
from edgelift.cli import main
from edgelift.scenario import scenario_from_dict


def case(name):
    return builtin_scenario(name)


def raw(name):
    return json.loads(case(name).read_text())


class TestParse:
    def test_case_a(self):
        scn = load_scenario(case("case_a"))
        sys = scn.build_system()
        assert sys.N == 3 and scn.edges == ((1, 2), (2, 3))
        assert all(a.kind == "hopf" and a.params["actuation"] == "full" for a in sys.agents)

    def test_case_b(self):
        scn = load_scenario(case("case_b"))
        assert {a["params"]["actuation"] for a in scn.agents} == {"radial_only"}

    def test_mismatched_output_dim(self):
        data = raw("case_a")
        data["agents"][1] = {"kind": "single_integrator", "params": {"dim": 3}}
        data["simulation"]["x0"] = [1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 1.0]
        with pytest.raises(SchemaError) as info:
            scenario_from_dict(data)
        assert info.value.path == "agents[1]"

    @pytest.mark.parametrize("mutate, path", [
        (lambda d: d["agents"].pop(), "agents"),
        (lambda d: d["simulation"].update(dt=-1.0), "simulation.dt"),
        (lambda d: d["simulation"]["x0"].pop(), "simulation.x0"),
        (lambda d: d["graph"]["edges"].append([1, 1]), "graph.edges"),
        (lambda d: d["agents"][0].update(kind="pendulum"), "agents[0].kind"),
        (lambda d: d["controller"].update(gain=0), "controller.gain"),
        (lambda d: d.update(schema_version=2), "schema_version"),
        (lambda d: d["analysis"]["tolerances"].update(rank_rtol=2.0),
         "analysis.tolerances.rank_rtol"),
        (lambda d: d["agents"][0]["params"].update(omega=-1.0), "agents[0]"),
        (lambda d: d["analysis"].update(sampler_box=[[[0, 1]]] * 3), "analysis.sampler_box[0]"),
    ])
    def test_schema_errors(self, mutate, path):
        data = raw("case_a")
        mutate(data)
        with pytest.raises(SchemaError) as info:
            scenario_from_dict(data)
        assert info.value.path == path

    def test_invalid_json(self):
        with pytest.raises(SchemaError):
            parse_scenario("{not json")

    @pytest.mark.parametrize("name", ["case_a", "case_b", "integrators_k3"])
    def test_round_trip(self, name):
        scn = load_scenario(case(name))
        assert parse_scenario(scn.to_json()) == scn
        assert parse_scenario(scn.to_json()).digest() == scn.digest()

    def test_defaults_filled(self):
        scn = load_scenario(case("integrators_k3"))
        assert scn.analysis["tree_cap"] == 1000
        assert scn.analysis["tolerances"]["rank_rtol"] == 1e-10
        assert scn.controller["w_policy"] == "zero"

    def test_distributed_weights(self):
        data = raw("case_a")
        data["controller"] = {"kind": "distributed", "weights": [[0, 1, 0], [1, 0, 1], [0, 1, 0]]}
        scn = scenario_from_dict(data)
        ctrl = scn.build_controller()
        assert ctrl.kind == "distributed"
        assert ctrl(np.array(scn.simulation["x0"])).shape == (6,)
        data["controller"]["weights"] = [[1, 1, 0], [1, 0, 1], [0, 1, 0]]
        with pytest.raises(SchemaError):
            scenario_from_dict(data)


def run_cli(capsys, *args):
    code = main([str(a) for a in args])
    return code, json.loads(capsys.readouterr().out)


class TestCli:
    def test_check_case_a(self, capsys):
        code, rep = run_cli(capsys, "check", case("case_a"))
        assert code == 0 and rep["nu"] == 4 and rep["verdict"] == "certified_generic"

    def test_check_case_b(self, capsys):
        code, rep = run_cli(capsys, "check", case("case_b"))
        assert code == 2 and rep["nu"] == 3 and rep["verdict"] == "refuted_structurally"
        wit = rep["trees"][0]["hall_witness"]
        assert wit["size_gamma_S"] < wit["size_S"]

    def test_check_disconnected(self, capsys, tmp_path):
        data = raw("integrators_k3")
        data["graph"]["edges"] = [[1, 2]]
        path = tmp_path / "disc.json"
        path.write_text(json.dumps(data))
        code, rep = run_cli(capsys, "check", path)
        assert code == 1 and rep["error"] == "DisconnectedGraph"

    def test_check_inconclusive(self, capsys, tmp_path):
        data = raw("case_b")
        data["graph"] = {"num_nodes": 3, "edges": [[1, 2], [2, 3], [1, 3]]}
        path = tmp_path / "tri.json"
        path.write_text(json.dumps(data))
        code, rep = run_cli(capsys, "check", path, "--tree-cap", "1", "--samples", "5")
        assert code == 3 and rep["verdict"] == "inconclusive"

    def test_missing_file(self, capsys, tmp_path):
        code, rep = run_cli(capsys, "check", tmp_path / "nope.json")
        assert code == 1 and rep["error"] == "IOError"

    def test_bad_dt_flag(self, capsys, tmp_path):
        code, rep = run_cli(capsys, "simulate", case("case_a"), "--dt", "0", "--out", tmp_path)
        assert code == 1 and rep["error"] == "SchemaError"

    def test_rank(self, capsys):
        code, rep = run_cli(capsys, "rank", case("case_b"), "--samples", "10")
        assert code == 0 and len(rep["samples"]) == 10
        assert all(s["rank_A"] == 3 and s["rank_J"] == 4 for s in rep["samples"])

    def test_matching_case_a(self, capsys, tmp_path):
        code, rep = run_cli(capsys, "matching", case("case_a"), "--out", tmp_path)
        assert code == 0 and (rep["num_left"], rep["num_right"], rep["nu"]) == (4, 6, 4)
        assert len(rep["matching"]) == 4
        assert (tmp_path / "matching.dot").read_text().count("color=blue") == 4
        assert json.loads((tmp_path / "matching.json").read_text()) == rep

    def test_matching_case_b_isolated(self, capsys, tmp_path):
        code, rep = run_cli(capsys, "matching", case("case_b"), "--out", tmp_path)
        assert code == 0 and rep["isolated_right"] == [[1, 2], [2, 2], [3, 2]]

    def test_matching_integrators_k3(self, capsys, tmp_path):
        code, rep = run_cli(capsys, "matching", case("integrators_k3"), "--out", tmp_path)
        assert (rep["num_left"], rep["num_right"], rep["nu"]) == (4, 6, 4)

    def test_simulate_case_a(self, capsys, tmp_path):
        code, rep = run_cli(capsys, "simulate", case("case_a"), "--t-final", "3",
                            "--out", tmp_path)
        assert code == 0 and rep["terminated"] is None
        assert rep["metrics"]["rate"] == pytest.approx(-2.0, rel=0.05)
        header = (tmp_path / "trajectory.csv").read_text().splitlines()[0]
        assert header.startswith("t,x_1,") and header.endswith(",V_e,lift_residual")
        assert json.loads((tmp_path / "metrics.json").read_text()) == rep

    def test_simulate_case_b_terminates(self, capsys, tmp_path):
        code, rep = run_cli(capsys, "simulate", case("case_b"), "--out", tmp_path)
        assert code == 1 and rep["terminated"]["reason"] == "DomainError"
        assert (tmp_path / "trajectory.csv").exists()

    def test_simulate_deterministic(self, capsys, tmp_path):
        outs = []
        for sub in ("a", "b"):
            run_cli(capsys, "simulate", case("integrators_k3"), "--t-final", "0.5",
                    "--out", tmp_path / sub)
            outs.append(((tmp_path / sub / "trajectory.csv").read_bytes(),
                         (tmp_path / sub / "metrics.json").read_text().replace(str(tmp_path / sub), "")))
        assert outs[0] == outs[1]
