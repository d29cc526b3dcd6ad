import numpy as np
import pytest

from bcdlms.blockmat import spectral_radius
from bcdlms.network import (CombinationMatrix, Topology, TopologyError,
                            combination_from_dict, combination_to_dict, extend,
                            identity_combination, metropolis_weights,
                            random_geometric_topology, relative_variance_weights,
                            topology_from_dict, topology_to_dict)


def path_topology(n):
    """Chain 1-2-...-n with self-loops."""
    adj = np.eye(n, dtype=bool)
    for k in range(n - 1):
        adj[k, k + 1] = adj[k + 1, k] = True
    pos = np.stack([np.linspace(0.0, 1.0, n), np.zeros(n)], axis=1)
    return Topology(pos, 1.0 / max(n - 1, 1), adj)


def complete_topology(n):
    pos = np.tile(np.array([[0.5, 0.5]]), (n, 1))
    return Topology(pos, 2.0, np.ones((n, n), dtype=bool))


class TestRandomGeometric:
    def test_single_node(self):
        topo = random_geometric_topology(1, 0.3, seed=0)
        assert topo.num_nodes == 1
        assert list(topo.neighbors(0)) == [0]

    def test_paper_scale_is_connected_and_deterministic(self):
        a = random_geometric_topology(20, 0.4, seed=11033)
        b = random_geometric_topology(20, 0.4, seed=11033)
        assert np.array_equal(a.positions, b.positions)
        assert np.array_equal(a.adjacency, b.adjacency)
        # connectivity by explicit traversal
        seen = {0}
        frontier = [0]
        while frontier:
            k = frontier.pop()
            for j in np.flatnonzero(a.adjacency[k]):
                if j not in seen:
                    seen.add(int(j))
                    frontier.append(int(j))
        assert seen == set(range(20))

    def test_large_radius_gives_complete_graph(self):
        topo = random_geometric_topology(3, 2.0, seed=1)
        assert topo.adjacency.all()

    def test_retry_budget_exhausted(self):
        with pytest.raises(TopologyError):
            random_geometric_topology(30, 1e-6, seed=0, max_attempts=5)

    def test_self_loops_present(self):
        topo = random_geometric_topology(10, 0.5, seed=3)
        assert topo.adjacency.diagonal().all()


class TestMetropolis:
    def test_single_node(self):
        topo = complete_topology(1)
        assert np.array_equal(metropolis_weights(topo).entries, [[1.0]])

    def test_three_node_path_hand_values(self):
        # degrees incl. self: 2, 3, 2 -> off-diagonals 1/3, diagonals 2/3, 1/3, 2/3
        w = metropolis_weights(path_topology(3)).entries
        expected = np.array([
            [2 / 3, 1 / 3, 0.0],
            [1 / 3, 1 / 3, 1 / 3],
            [0.0, 1 / 3, 2 / 3],
        ])
        assert np.allclose(w, expected, atol=1e-15)

    def test_complete_graph_uniform(self):
        w = metropolis_weights(complete_topology(3)).entries
        assert np.allclose(w, np.full((3, 3), 1 / 3), atol=1e-15)

    def test_doubly_stochastic_and_symmetric(self):
        topo = random_geometric_topology(20, 0.4, seed=7)
        w = metropolis_weights(topo).entries
        assert np.abs(w.sum(axis=0) - 1.0).max() <= 1e-12
        assert np.abs(w.sum(axis=1) - 1.0).max() <= 1e-12
        assert np.allclose(w, w.T, atol=1e-15)
        assert (w[~topo.adjacency] == 0).all()


class TestRelativeVariance:
    def test_single_node(self):
        w = relative_variance_weights(complete_topology(1), [0.3]).entries
        assert np.array_equal(w, [[1.0]])

    def test_two_node_equal_variances(self):
        w = relative_variance_weights(complete_topology(2), [0.1, 0.1]).entries
        assert np.allclose(w, np.full((2, 2), 0.5), atol=1e-15)

    def test_two_node_low_noise_dominates(self):
        w = relative_variance_weights(complete_topology(2), [0.01, 1.0]).entries
        assert w[0, 1] == pytest.approx(100 / 101)
        assert w[1, 1] == pytest.approx(1 / 101)

    def test_left_stochastic_on_random_network(self):
        topo = random_geometric_topology(20, 0.4, seed=11)
        noise = np.linspace(0.01, 0.1, 20)
        w = relative_variance_weights(topo, noise).entries
        assert np.abs(w.sum(axis=0) - 1.0).max() <= 1e-12
        assert (w >= 0).all()
        assert (w[~topo.adjacency] == 0).all()

    def test_nonpositive_variance_rejected(self):
        with pytest.raises(ValueError):
            relative_variance_weights(complete_topology(2), [0.1, 0.0])


class TestIdentityAndExtend:
    def test_identity_combination(self):
        w = identity_combination(3)
        assert np.array_equal(w.entries, np.eye(3))
        w.validate()

    def test_extend_identity(self):
        assert np.array_equal(extend(identity_combination(3), 2), np.eye(6))

    def test_extend_block_pattern(self):
        a = np.array([[0.75, 0.25], [0.25, 0.75]])
        ext = extend(CombinationMatrix(a, "doubly-stochastic"), 2)
        assert np.allclose(ext[0:2, 2:4], 0.25 * np.eye(2))
        assert np.allclose(ext[2:4, 2:4], 0.75 * np.eye(2))

    def test_extend_preserves_column_sums(self):
        topo = random_geometric_topology(8, 0.6, seed=5)
        a = relative_variance_weights(topo, np.linspace(0.05, 0.2, 8))
        ext = extend(a, 3).real
        assert np.abs(ext.sum(axis=0) - 1.0).max() <= 1e-12

    def test_extended_stochastic_has_unit_spectral_radius(self):
        topo = random_geometric_topology(10, 0.5, seed=6)
        for matrix in (metropolis_weights(topo),
                       relative_variance_weights(topo, np.linspace(0.02, 0.2, 10))):
            assert spectral_radius(extend(matrix, 2)) == pytest.approx(1.0, abs=1e-10)


class TestValidationAndSerialization:
    def test_kind_enforced(self):
        bad = np.array([[0.5, 0.5], [0.2, 0.5]])
        with pytest.raises(ValueError):
            CombinationMatrix(bad, "left-stochastic")

    def test_sparsity_check_against_topology(self):
        topo = path_topology(3)
        dense = np.full((3, 3), 1 / 3)
        with pytest.raises(ValueError):
            CombinationMatrix(dense, "doubly-stochastic").validate(topology=topo)

    def test_topology_round_trip(self):
        topo = random_geometric_topology(6, 0.6, seed=9)
        back = topology_from_dict(topology_to_dict(topo))
        assert np.array_equal(back.positions, topo.positions)
        assert np.array_equal(back.adjacency, topo.adjacency)
        assert back.comm_radius == topo.comm_radius
        assert back.seed == topo.seed

    def test_combination_round_trip(self):
        topo = random_geometric_topology(6, 0.6, seed=9)
        w = metropolis_weights(topo)
        back = combination_from_dict(combination_to_dict(w))
        assert np.array_equal(back.entries, w.entries)
        assert back.kind == w.kind
