import numpy as np
import pytest

from edgelift import (DisconnectedGraph, NetworkSystem, exact_admissibility_at,
                      make_hopf_oscillator, make_linear_agent, make_single_integrator,
                      matching_certificate, max_matching, sampled_generic_admissibility,
                      structural_pattern)
from edgelift.admissibility import (CERTIFIED, INCONCLUSIVE, REFUTED, bipartite_from_pattern,
                                    tree_lift_matrix)
from edgelift.graph import Graph, complete_graph, cycle_graph, path_graph, spanning_tree
from edgelift.numlin import numerical_rank

from conftest import hopf_path
from test_graph import CASE_A_PATTERN, CASE_B_PATTERN


def integrators(graph, dim=2):
    return NetworkSystem(graph, [make_single_integrator(dim)] * graph.num_nodes)


class TestPointwise:
    def test_integrators(self):
        sys = integrators(complete_graph(4))
        res = exact_admissibility_at(sys, np.random.default_rng(0).standard_normal(8))
        assert res["admissible"] and res["rank_A"] == res["rank_J"] == 6

    def test_case_a(self, case_a):
        res = exact_admissibility_at(case_a, case_a.sample_state(np.random.default_rng(1)))
        assert res == {"rank_A": 4, "rank_J": 4, "admissible": True}

    def test_case_b(self, case_b):
        res = exact_admissibility_at(case_b, case_b.sample_state(np.random.default_rng(1)))
        assert not res["admissible"] and res["rank_A"] <= 3 < res["rank_J"] == 4


class TestSampled:
    def test_integrators(self):
        rep = sampled_generic_admissibility(integrators(cycle_graph(4)), 50)
        assert rep.exact_admissible_fraction == 1.0

    def test_case_a(self, case_a):
        rep = sampled_generic_admissibility(case_a, 100, seed=0)
        assert rep.exact_admissible_fraction == 1.0
        assert rep.modal_rank_A == rep.modal_rank_J == 4 and not rep.rank_J_jumps

    def test_case_b(self, case_b):
        rep = sampled_generic_admissibility(case_b, 100, seed=0)
        assert rep.exact_admissible_fraction == 0.0

    def test_deterministic(self, case_b):
        a = sampled_generic_admissibility(case_b, 20, seed=3)
        b = sampled_generic_admissibility(case_b, 20, seed=3)
        assert a.ranks_A == b.ranks_A and a.ranks_J == b.ranks_J

    def test_rank_a_bounded_by_rank_j(self):
        rng_agents = np.random.default_rng(9)
        agents = [make_linear_agent(np.zeros((3, 3)), rng_agents.standard_normal((3, 1)),
                                    rng_agents.standard_normal((2, 3))) for _ in range(4)]
        for sys in (hopf_path("radial_only"), NetworkSystem(cycle_graph(4), agents)):
            rep = sampled_generic_admissibility(sys, 30)
            assert all(a <= j for a, j in zip(rep.ranks_A, rep.ranks_J))

    def test_a_tau_b_rank_at_most_three(self, case_b):
        rng = np.random.default_rng(20)
        for _ in range(20):
            assert numerical_rank(tree_lift_matrix(case_b, [0, 1], case_b.sample_state(rng))) <= 3


class TestPattern:
    def test_case_a(self, case_a):
        pat = structural_pattern(case_a, [0, 1])
        np.testing.assert_array_equal(pat.mask, CASE_A_PATTERN)
        assert pat.num_samples == 5 and pat.threshold == 1e-9

    def test_case_b(self, case_b):
        np.testing.assert_array_equal(structural_pattern(case_b, [0, 1]).mask, CASE_B_PATTERN)

    def test_integrators(self):
        sys = integrators(path_graph(3))
        expected = np.abs(np.kron(np.array([[-1, 1, 0], [0, -1, 1]]), np.eye(2))) > 0
        np.testing.assert_array_equal(structural_pattern(sys, [0, 1]).mask, expected)

    def test_union_guards_coincidental_zero(self, case_a):
        # a sampler that always lands on theta = pi/2 zeroes cos(theta) entries
        fixed = np.array([1.0, np.pi / 2] * 3)
        single = structural_pattern(case_a, [0, 1], 1, sampler=lambda rng: fixed)
        assert single.mask.sum() < CASE_A_PATTERN.sum()
        assert structural_pattern(case_a, [0, 1], 5).mask.sum() == CASE_A_PATTERN.sum()

    def test_not_a_tree(self, case_a):
        with pytest.raises(ValueError):
            structural_pattern(case_a, [0])

    def test_bitmask(self, case_b):
        assert structural_pattern(case_b, [0, 1]).bitmask_rows()[0] == "101000"


class TestCertificate:
    def test_case_a(self, case_a):
        rep = matching_certificate(case_a)
        assert rep.certified == CERTIFIED and rep.nu == 4 == rep.target_rank

    def test_case_b(self, case_b):
        rep = matching_certificate(case_b)
        assert rep.certified == REFUTED and rep.nu == 3
        match, bip = rep.matchings[0], rep.structures[0]
        S = match.deficiency_witness
        assert len(bip.gamma(S)) < len(S)
        d = rep.to_dict()
        wit = d["trees"][0]["hall_witness"]
        assert wit["size_gamma_S"] == 3 < wit["size_S"] == 4
        assert sorted(map(tuple, wit["gamma_S"])) == [(1, 1), (2, 1), (3, 1)]

    @pytest.mark.parametrize("graph", [path_graph(2), complete_graph(3), cycle_graph(5),
                                       Graph(4, ((1, 2), (1, 3), (1, 4), (3, 4)))])
    def test_integrators_certified(self, graph):
        assert matching_certificate(integrators(graph)).certified == CERTIFIED

    def test_disconnected(self):
        with pytest.raises(DisconnectedGraph):
            matching_certificate(integrators(Graph(3, ((1, 2),))))

    def test_inconclusive_when_truncated(self):
        radial = hopf_path("radial_only").agents[0]
        sys = NetworkSystem(complete_graph(4), [radial] * 4)
        rep = matching_certificate(sys, tree_cap=3, num_samples=5)
        assert rep.certified == INCONCLUSIVE and rep.trees_truncated
        rep = matching_certificate(sys, num_samples=5)
        assert rep.certified == REFUTED and len(rep.trees) == 16  # Cayley: 4^2

    def test_certified_implies_sampled_full(self):
        for sys in (hopf_path("full"), integrators(complete_graph(4)),
                    NetworkSystem(cycle_graph(4), [make_hopf_oscillator()] * 4)):
            rep = matching_certificate(sys, seed=0)
            assert rep.certified == CERTIFIED
            assert rep.exact_admissible_fraction == 1.0

    def test_structured_rank_equals_matching(self):
        systems = [hopf_path("full"), hopf_path("radial_only"),
                   NetworkSystem(cycle_graph(4), [make_hopf_oscillator()] * 4)]
        for sys in systems:
            tree = spanning_tree(sys.graph)
            nu = max_matching(bipartite_from_pattern(sys, structural_pattern(sys, tree))).size
            hits = 0
            for seed in range(20):
                x = sys.sample_state(np.random.default_rng(1000 + seed))
                hits += numerical_rank(tree_lift_matrix(sys, tree, x)) == nu
            assert hits >= 19

    def test_reorientation_invariance(self, case_b):
        flipped = NetworkSystem(Graph(3, ((2, 1), (3, 2))), case_b.agents)
        for sys in (case_b, flipped):
            assert matching_certificate(sys).nu == 3
        a = hopf_path("full")
        assert matching_certificate(NetworkSystem(Graph(3, ((2, 1), (2, 3))), a.agents)).nu == 4
