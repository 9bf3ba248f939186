"""Graph sampling, linear and spring simulators, dataset generation."""
import numpy as np
import pytest

from sdci.schemas.experiment import ExperimentConfig, Regime, Scenario
from sdci.simulators.dataset import build_dataset, generate_sample, generate_split
from sdci.simulators.graphs import StateGraph, sample_state_graph
from sdci.simulators.linear import (
    LinearWorld,
    linear_rollout,
    sign_states,
    stable_under_all_states,
    var_transition_matrix,
)
from sdci.simulators.springs import (
    SpringInit,
    SpringWorld,
    reflect,
    spring_coefficients,
    spring_forces,
    spring_rollout,
    spring_step,
    total_energy,
)
from sdci.utils.error_handling import ContractError, ParameterError
from tests.test_utils import assert_dataset_equal


@pytest.mark.unit
class TestStateGraph:
    def test_zero_edge_probability_gives_empty_graph(self, rng):
        graph = sample_state_graph(4, 2, 3, 0.0, rng)
        assert not graph.edges.any()

    def test_same_seed_gives_same_graph(self):
        first = sample_state_graph(5, 3, 2, 0.5, np.random.default_rng(11))
        second = sample_state_graph(5, 3, 2, 0.5, np.random.default_rng(11))
        assert first == second

    def test_shape_and_zero_diagonal(self, rng):
        graph = sample_state_graph(3, 2, 2, 1.0, rng)
        assert graph.edges.shape == (2, 3, 3)
        assert graph.edges.dtype == np.uint8
        assert not np.diagonal(graph.edges, axis1=1, axis2=2).any()
        assert set(np.unique(graph.edges)) <= {0, 1}

    def test_edge_frequency_matches_edge_probability(self, rng):
        draws = 10_000
        off_diagonal = ~np.eye(5, dtype=bool)
        present = 0
        for _ in range(draws):
            graph = sample_state_graph(5, 2, 2, 0.5, rng)
            present += int(np.count_nonzero(graph.edges[:, off_diagonal]))
        count = draws * 2 * int(off_diagonal.sum())
        sigma = np.sqrt(0.5 * 0.5 / count)
        assert abs(present / count - 0.5) < 3 * sigma

    def test_query_uses_the_source_state(self, graph_factory):
        graph = graph_factory(num_objects=3, num_states=2, edges=[(1, 0, 2, 1)])
        assert graph.query(0, 2, state=1) == 1
        assert graph.query(0, 2, state=0) == 0

    def test_incoming_types_index_by_sender_state(self, graph_factory):
        graph = graph_factory(num_objects=3, num_states=2, edges=[(1, 0, 2, 1), (0, 1, 0, 1)])
        types = graph.incoming_types(np.array([1, 0, 0]))
        # receiver 2 hears sender 0 (state 1); receiver 0 hears sender 1 (state 0)
        assert types[2, 0] == 1
        assert types[0, 1] == 1
        assert types.sum() == 2

    def test_self_edges_rejected(self):
        edges = np.zeros((1, 2, 2), dtype=np.uint8)
        edges[0, 1, 1] = 1
        with pytest.raises(ContractError):
            StateGraph(edges=edges, num_edge_types=2)

    @pytest.mark.parametrize(
        "args",
        [(1, 1, 2, 0.5), (3, 0, 2, 0.5), (3, 1, 1, 0.5), (3, 1, 2, 1.5)],
        ids=["one-object", "no-states", "one-edge-type", "bad-probability"],
    )
    def test_invalid_parameters(self, rng, args):
        with pytest.raises(ParameterError):
            sample_state_graph(*args, rng)


@pytest.mark.unit
class TestLinearSimulator:
    def test_contracting_diagonal_is_stable(self, graph_factory):
        _, stable, radius = var_transition_matrix(graph_factory(), LinearWorld(alpha=0.5), np.zeros(3, dtype=int))
        assert stable
        assert radius == pytest.approx(0.5)

    def test_identity_dynamics_are_not_strictly_stable(self, graph_factory):
        _, stable, radius = var_transition_matrix(graph_factory(), LinearWorld(alpha=1.0), np.zeros(3, dtype=int))
        assert not stable
        assert radius == pytest.approx(1.0)

    def test_fully_connected_eigenvalues(self, graph_factory, linear_world):
        edges = [(0, i, j, 1) for i in range(3) for j in range(3) if i != j]
        matrix, stable, radius = var_transition_matrix(graph_factory(edges=edges), linear_world, np.zeros(3, dtype=int))
        np.testing.assert_allclose(np.sort(np.linalg.eigvals(matrix).real), [0.95, 0.95, 1.1], atol=1e-12)
        assert not stable
        assert radius == pytest.approx(1.1)

    def test_single_edge_update(self, graph_factory, linear_world, rng):
        # edge from object 1 to object 0
        graph = graph_factory(num_objects=2, edges=[(0, 1, 0, 1)])
        sample = linear_rollout(
            graph, linear_world, 2, Regime.OBSERVED_INDEPENDENT, rng, p0=np.array([1.0, 2.0]), states=np.zeros((2, 2))
        )
        np.testing.assert_allclose(sample.p[1, :, 0], [1.1, 2.0])

    def test_sign_rule_is_strict(self):
        np.testing.assert_array_equal(sign_states(np.array([-0.3, 0.3, 0.0])), [1, 0, 0])

    def test_no_edges_keep_values_constant(self, graph_factory, linear_world, rng):
        sample = linear_rollout(graph_factory(num_states=2), linear_world, 20, Regime.HIDDEN, rng)
        np.testing.assert_allclose(sample.p, np.broadcast_to(sample.p[0], sample.p.shape))

    def test_hidden_states_follow_sign_rule(self, rng, linear_world):
        graph = sample_state_graph(3, 2, 2, 0.5, rng)
        sample = linear_rollout(graph, linear_world, 15, Regime.HIDDEN, rng)
        np.testing.assert_array_equal(sample.s, sign_states(sample.p[..., 0]))

    def test_shapes_and_regime(self, rng, linear_world):
        graph = sample_state_graph(3, 2, 2, 0.5, rng)
        sample = linear_rollout(graph, linear_world, 40, Regime.OBSERVED_INDEPENDENT, rng)
        assert sample.p.shape == (40, 3, 1)
        assert sample.s.shape == (40, 3)
        assert sample.s.max() <= 1

    def test_divergence_flagged(self, graph_factory, rng):
        edges = [(0, i, j, 1) for i in range(3) for j in range(3) if i != j]
        world = LinearWorld(alpha=1.0, betas=(2.0,))
        sample = linear_rollout(
            graph_factory(edges=edges), world, 40, Regime.OBSERVED_INDEPENDENT, rng, p0=np.ones(3), overflow_guard=1e3
        )
        assert sample.diverged

    def test_stability_over_all_states(self, graph_factory):
        assert stable_under_all_states(graph_factory(num_states=2), LinearWorld(alpha=0.9))
        assert not stable_under_all_states(graph_factory(num_states=2), LinearWorld(alpha=1.0))

    def test_short_sequences_rejected(self, graph_factory, linear_world, rng):
        with pytest.raises(ParameterError):
            linear_rollout(graph_factory(), linear_world, 1, Regime.HIDDEN, rng)


@pytest.mark.unit
class TestSpringSimulator:
    def test_free_motion_without_springs(self, graph_factory):
        world = SpringWorld(deltas=(0.1,), box_half_width=5.0, dt=0.01)
        r = np.array([[0.0, 0.0], [1.0, 1.0]])
        v = np.array([[0.5, -0.2], [0.1, 0.3]])
        r_next, v_next, collided = spring_step(r, v, graph_factory(num_objects=2), world, np.zeros(2, dtype=int))
        np.testing.assert_allclose(r_next, r + 0.01 * v)
        np.testing.assert_allclose(v_next, v)
        assert not collided.any()

    def test_hooke_force(self, graph_factory):
        # spring from object 1 pulls object 0
        graph = graph_factory(num_objects=2, edges=[(0, 1, 0, 1)])
        coefficients = spring_coefficients(graph, SpringWorld(deltas=(0.1,)), np.zeros(2, dtype=int))
        forces = spring_forces(np.array([[0.0, 0.0], [1.0, 0.0]]), coefficients)
        np.testing.assert_allclose(forces[0], [0.1, 0.0])
        np.testing.assert_allclose(forces[1], [0.0, 0.0])

    def test_wall_reflection(self):
        r, v, collided = reflect(np.array([[5.1, 0.0]]), np.array([[1.0, 0.5]]), 5.0)
        np.testing.assert_allclose(r, [[4.9, 0.0]])
        np.testing.assert_allclose(v, [[-1.0, 0.5]])
        assert collided.tolist() == [True]

    def test_output_shapes(self, rng):
        graph = sample_state_graph(5, 2, 2, 0.5, rng)
        sample = spring_rollout(graph, SpringWorld(subsample=3), 12, Regime.OBSERVED_INDEPENDENT, rng)
        assert sample.p.shape == (12, 5, 4)
        assert sample.s.shape == (12, 5)

    def test_scheduled_states_cycle_every_period(self, rng):
        graph = sample_state_graph(3, 2, 2, 0.5, rng)
        sample = spring_rollout(graph, SpringWorld(subsample=2), 30, Regime.OBSERVED_INDEPENDENT, rng)
        assert (sample.s[:10] == 0).all()
        assert (sample.s[10:20] == 1).all()
        assert (sample.s[20:30] == 0).all()

    def test_zero_stiffness_matches_free_motion_with_walls(self, rng):
        graph = sample_state_graph(3, 1, 2, 1.0, rng)
        world = SpringWorld(deltas=(0.0,), box_half_width=5.0, dt=0.01, subsample=10)
        init = SpringInit(
            positions=np.array([[4.0, 0.0], [0.0, -4.5], [1.0, 1.0]]),
            velocities=np.array([[2.0, 0.0], [0.0, -1.0], [0.0, 0.0]]),
        )
        sample = spring_rollout(graph, world, 10, Regime.OBSERVED_INDEPENDENT, rng, init=init)

        r, v = init.positions.copy(), init.velocities.copy()
        for t in range(1, 10):
            for _ in range(10):
                r, v, _ = reflect(r + 0.01 * v, v, 5.0)
            np.testing.assert_allclose(sample.p[t, :, :2], r, atol=1e-12)
            np.testing.assert_allclose(sample.p[t, :, 2:], v, atol=1e-12)
        assert np.abs(sample.p[..., :2]).max() <= 5.0

    def test_symmetric_springs_conserve_energy(self, graph_factory):
        edges = [(0, 0, 1, 1), (0, 1, 0, 1), (0, 1, 2, 1), (0, 2, 1, 1)]
        graph = graph_factory(num_objects=3, edges=edges)
        world = SpringWorld(deltas=(0.1,), box_half_width=None, dt=0.001)
        states = np.zeros(3, dtype=int)
        coefficients = spring_coefficients(graph, world, states)
        r = np.array([[0.0, 0.0], [1.0, 0.5], [-0.5, 1.0]])
        v = np.array([[0.3, 0.0], [0.0, -0.2], [0.1, 0.1]])
        start = total_energy(r, v, coefficients)
        for _ in range(8000):
            r, v, _ = spring_step(r, v, graph, world, states, coefficients)
        assert abs(total_energy(r, v, coefficients) - start) / start < 1e-3

    def test_location_states(self, rng):
        graph = sample_state_graph(4, 2, 2, 0.5, rng)
        sample = spring_rollout(graph, SpringWorld(subsample=4), 10, Regime.HIDDEN, rng)
        np.testing.assert_array_equal(sample.s, (sample.p[..., 0] < 0).astype(int))

    def test_wall_event_states_toggle_on_collision(self, graph_factory, rng):
        graph = graph_factory(num_objects=2, num_states=2)
        init = SpringInit(positions=np.array([[4.95, 0.0], [0.0, 0.0]]), velocities=np.array([[1.0, 0.0], [0.0, 0.0]]))
        world = SpringWorld(box_half_width=5.0, dt=0.01, subsample=10)
        sample = spring_rollout(graph, world, 3, Regime.OBSERVED_DEPENDENT, rng, init=init)
        assert sample.s[1, 0] == 1 - sample.s[0, 0]
        assert sample.s[1, 1] == sample.s[0, 1]


@pytest.mark.unit
class TestDatasetDefaults:
    def test_linear_defaults(self):
        cfg = ExperimentConfig(scenario=Scenario.LINEAR)
        assert (cfg.num_objects, cfg.num_timesteps, cfg.num_edge_types) == (3, 40, 2)
        assert cfg.world.alpha == 1.0
        assert cfg.world.betas == [0.05]

    def test_springs_defaults(self):
        cfg = ExperimentConfig(scenario=Scenario.SPRINGS)
        assert (cfg.num_objects, cfg.num_timesteps, cfg.num_edge_types) == (5, 80, 2)
        assert cfg.world.deltas == [0.1]


@pytest.mark.integration
class TestDatasetGeneration:
    def test_same_config_gives_same_dataset(self, tiny_experiment):
        assert_dataset_equal(build_dataset(tiny_experiment, workers=1), build_dataset(tiny_experiment, workers=1))

    def test_thread_count_does_not_change_output(self, tiny_experiment):
        assert_dataset_equal(build_dataset(tiny_experiment, workers=1), build_dataset(tiny_experiment, workers=3))

    def test_manifest_records_shapes(self, tiny_dataset, tiny_experiment):
        manifest = tiny_dataset.manifest
        assert manifest.splits == {"train": 8, "valid": 4, "test": 4}
        assert manifest.num_objects == 3
        assert tiny_dataset["train"].p.shape == (8, tiny_experiment.num_timesteps, 3, 1)
        assert tiny_dataset["train"].graphs.shape == (8, 2, 3, 3)
        assert 0.0 <= manifest.stable_fraction <= 1.0

    def test_samples_are_independent_of_split_size(self, experiment_factory):
        small = experiment_factory(train=2)
        large = experiment_factory(train=6)
        arrays_small, _ = generate_split(small, "train", 2, workers=1)
        arrays_large, _ = generate_split(large, "train", 6, workers=1)
        np.testing.assert_array_equal(arrays_small.p, arrays_large.p[:2])

    def test_drop_diverged_replaces_flagged_samples(self, experiment_factory, monkeypatch):
        cfg = experiment_factory(train=4)
        cfg.data.drop_diverged = True
        original = generate_sample

        def flag_even(cfg, split, index, streams=None):
            sample = original(cfg, split, index, streams)
            sample.diverged = index % 2 == 0
            return sample

        monkeypatch.setattr("sdci.simulators.dataset.generate_sample", flag_even)
        arrays, diverged = generate_split(cfg, "train", 4, workers=1)
        assert len(arrays) == 4
        assert not arrays.diverged.any()
        assert diverged >= 4

    def test_springs_dataset(self, experiment_factory):
        cfg = experiment_factory(scenario=Scenario.SPRINGS, train=2, valid=0, test=1)
        dataset = build_dataset(cfg, workers=1)
        assert dataset["train"].p.shape == (2, 12, 5, 4)
        assert dataset.manifest.stable_fraction is None
        assert len(dataset["valid"]) == 0
