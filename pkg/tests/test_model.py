"""Encoder, decoder and edge-query behaviour of SDCIModel."""
import numpy as np
import pytest

from sdci.model.relations import (
    assignment_from_graphs,
    graphs_to_pairs,
    num_pairs,
    objects_from_pairs,
    pairs_to_graphs,
    relation_matrices,
)
from sdci.schemas.experiment import (
    DecoderInit,
    DecoderMode,
    EncoderVariant,
    Regime,
    Scenario,
)
from sdci.simulators.linear import linear_rollout
from sdci.tensor import ops
from sdci.tensor.gradcheck import gradient_check
from sdci.tensor.tensor import Tape, precision
from sdci.utils.error_handling import ContractError, ParameterError
from tests.test_utils import random_logits


def _linear_batch(rng, batch=2, steps=10, objects=3, states=2):
    p = rng.normal(size=(batch, steps, objects, 1))
    s = rng.integers(0, states, size=(batch, steps, objects))
    return p, s


@pytest.mark.unit
class TestRelations:
    def test_pairs_are_row_major_without_self_loops(self):
        rel_send, rel_rec = relation_matrices(3)
        senders = np.argmax(rel_send, axis=1)
        receivers = np.argmax(rel_rec, axis=1)
        assert list(zip(senders, receivers)) == [(0, 1), (0, 2), (1, 0), (1, 2), (2, 0), (2, 1)]

    def test_pair_count_inversion(self):
        assert num_pairs(5) == 20
        assert objects_from_pairs(20) == 5
        with pytest.raises(ContractError):
            objects_from_pairs(7)

    def test_graph_pair_conversion_keeps_off_diagonal(self, rng):
        graphs = rng.integers(0, 3, size=(2, 2, 4, 4)).astype(np.uint8)
        for k in range(2):
            np.fill_diagonal(graphs[0, k], 0)
            np.fill_diagonal(graphs[1, k], 0)
        pairs = graphs_to_pairs(graphs)
        assert pairs.shape == (2, 12, 2)
        np.testing.assert_array_equal(pairs_to_graphs(pairs), graphs)

    def test_assignment_from_graphs_is_one_hot(self, graph_factory):
        graph = graph_factory(num_objects=3, num_states=2, edges=[(1, 0, 2, 1)])
        assignment = assignment_from_graphs(graph.edges, 2)
        assert assignment.shape == (6, 2, 2)
        np.testing.assert_array_equal(assignment.sum(axis=-1), 1.0)
        # pair (0, 2) is index 1; it only exists in state 1
        np.testing.assert_array_equal(assignment[1, 1], [0.0, 1.0])
        np.testing.assert_array_equal(assignment[1, 0], [1.0, 0.0])

    def test_assignment_rejects_unknown_edge_type(self, graph_factory):
        graph = graph_factory(num_objects=3, num_states=1, edges=[(0, 0, 1, 2)], num_edge_types=3)
        with pytest.raises(ContractError):
            assignment_from_graphs(graph.edges, 2)


@pytest.mark.unit
class TestEncoder:
    def test_posterior_shape_and_normalization(self, experiment_factory, model_factory, rng):
        experiment = experiment_factory(num_states=2)
        model = model_factory(experiment)
        p, s = _linear_batch(rng)
        logits = model.encode_posteriors(p, s)
        assert logits.shape == (2, 6, 2, 2)
        posterior = model.posterior(logits)
        np.testing.assert_allclose(posterior.data.sum(axis=-1), 1.0, atol=1e-5)

    def test_baseline_has_single_state(self, experiment_factory, model_factory, rng):
        experiment = experiment_factory(num_states=2, model_states=1)
        assert experiment.is_baseline
        model = model_factory(experiment)
        assert model.cfg.encoder_state_input is False
        p, s = _linear_batch(rng)
        logits = model.encode_posteriors(p, s)
        assert logits.shape == (2, 6, 1, 2)

    def test_temporal_variant_shape(self, experiment_factory, model_factory, rng):
        experiment = experiment_factory(variant=EncoderVariant.TEMPORAL)
        model = model_factory(experiment)
        p, s = _linear_batch(rng)
        assert model.encode_posteriors(p, s).shape == (2, 6, 2, 2)

    def test_static_encoder_rejects_other_lengths(self, experiment_factory, model_factory, rng):
        model = model_factory(experiment_factory(num_timesteps=10))
        p, s = _linear_batch(rng, steps=8)
        with pytest.raises(Exception, match="T=10"):
            model.encode_posteriors(p, s)

    def test_observed_regime_requires_states(self, experiment_factory, model_factory, rng):
        model = model_factory(experiment_factory())
        p, _ = _linear_batch(rng)
        with pytest.raises(ContractError):
            model.encode_posteriors(p, None)

    def test_permuting_objects_permutes_edge_logits(self, experiment_factory, model_factory, rng):
        experiment = experiment_factory(num_objects=4, precision="float64")
        with precision("float64"):
            model = model_factory(experiment).eval()
            p, s = _linear_batch(rng, objects=4)
            perm = np.array([2, 0, 3, 1])
            logits = model.encode_posteriors(p, s).data
            permuted = model.encode_posteriors(p[:, :, perm], s[:, :, perm]).data

        for edge_type in range(2):
            graphs = pairs_to_graphs(logits[..., edge_type])
            graphs_perm = pairs_to_graphs(permuted[..., edge_type])
            off_diagonal = ~np.eye(4, dtype=bool)
            expected = graphs[:, :, perm][:, :, :, perm]
            np.testing.assert_allclose(graphs_perm[..., off_diagonal], expected[..., off_diagonal], atol=1e-10)


@pytest.mark.unit
class TestSampling:
    def test_argmax_assignment_is_one_hot(self, experiment_factory, model_factory, rng):
        model = model_factory(experiment_factory())
        logits = model.constant(random_logits(rng, 2, 6, 2, 2))
        assignment = model.argmax_assignment(logits).data
        np.testing.assert_array_equal(assignment.sum(axis=-1), 1.0)
        np.testing.assert_array_equal(np.argmax(assignment, axis=-1), np.argmax(logits.data, axis=-1))

    def test_predicted_graphs_follow_posterior_mode(self, experiment_factory, model_factory, rng):
        model = model_factory(experiment_factory())
        raw = random_logits(rng, 1, 6, 2, 2)
        graphs = model.predicted_graphs(model.constant(raw))
        assert graphs.shape == (1, 2, 3, 3)
        np.testing.assert_array_equal(graphs_to_pairs(graphs), np.argmax(raw, axis=-1))

    def test_samples_are_normalized_and_reproducible(self, experiment_factory, model_factory, rng):
        model = model_factory(experiment_factory())
        logits = model.constant(random_logits(rng, 2, 6, 2, 2))
        first = model.sample_edge_assignments(logits, rng=np.random.default_rng(5)).data
        second = model.sample_edge_assignments(logits, rng=np.random.default_rng(5)).data
        np.testing.assert_allclose(first.sum(axis=-1), 1.0, atol=1e-5)
        np.testing.assert_array_equal(first, second)

    def test_hard_samples_are_one_hot(self, experiment_factory, model_factory, rng):
        model = model_factory(experiment_factory())
        logits = model.constant(random_logits(rng, 2, 6, 2, 2))
        hard = model.sample_edge_assignments(logits, rng=rng, hard=True).data
        assert set(np.unique(hard)) <= {0.0, 1.0}
        np.testing.assert_array_equal(hard.sum(axis=-1), 1.0)

    def test_sampling_needs_a_noise_source(self, experiment_factory, model_factory, rng):
        model = model_factory(experiment_factory())
        logits = model.constant(random_logits(rng, 1, 6, 2, 2))
        with pytest.raises(ParameterError):
            model.sample_edge_assignments(logits)


@pytest.mark.unit
class TestEdgeQuery:
    def test_one_hot_states_select_sender_state(self, experiment_factory, model_factory, rng):
        model = model_factory(experiment_factory(num_states=2))
        raw = rng.uniform(size=(1, 6, 2, 2))
        assignment = model.constant(raw)
        sender_states = np.array([1, 0, 1])
        state_probs = model.state_one_hot(sender_states[None])
        z = model.edge_weights(assignment, state_probs, 3).data

        senders = np.argmax(relation_matrices(3)[0], axis=1)
        expected = raw[0, np.arange(6), sender_states[senders]]
        np.testing.assert_allclose(z[0], expected, rtol=1e-6)

    def test_uniform_states_average_over_states(self, experiment_factory, model_factory, rng):
        model = model_factory(experiment_factory(num_states=2))
        raw = rng.uniform(size=(1, 6, 2, 2))
        uniform = model.constant(np.full((1, 3, 2), 0.5))
        z = model.edge_weights(model.constant(raw), uniform, 3).data
        np.testing.assert_allclose(z, raw.mean(axis=2), rtol=1e-6)

    def test_baseline_ignores_states(self, experiment_factory, model_factory, rng):
        model = model_factory(experiment_factory(num_states=2, model_states=1))
        raw = rng.uniform(size=(1, 6, 1, 2))
        z = model.edge_weights(model.constant(raw), None, 3).data
        np.testing.assert_allclose(z, raw[:, :, 0], rtol=1e-6)

    def test_state_count_mismatch_is_rejected(self, experiment_factory, model_factory, rng):
        model = model_factory(experiment_factory(num_states=2))
        with pytest.raises(ContractError):
            model.edge_weights(model.constant(rng.uniform(size=(1, 6, 3, 2))), None, 3)

    def test_multi_state_query_needs_distribution(self, experiment_factory, model_factory, rng):
        model = model_factory(experiment_factory(num_states=2))
        with pytest.raises(ContractError):
            model.edge_weights(model.constant(rng.uniform(size=(1, 6, 2, 2))), None, 3)


def _ground_truth_linear(experiment_factory, **kwargs):
    return experiment_factory(
        decoder_mode=DecoderMode.FIXED_LINEAR,
        decoder_init=DecoderInit.GROUND_TRUTH,
        precision="float64",
        **kwargs,
    )


@pytest.mark.unit
class TestFixedLinearDecoder:
    @pytest.mark.parametrize("teacher_forcing", [1, 3, 10])
    def test_ground_truth_decoder_reproduces_simulator(
        self, experiment_factory, model_factory, graph_factory, linear_world, teacher_forcing
    ):
        experiment = _ground_truth_linear(experiment_factory)
        graph = graph_factory(num_objects=3, num_states=2, edges=[(0, 0, 1, 1), (1, 2, 0, 1), (0, 1, 2, 1)])
        sample = linear_rollout(graph, linear_world, 10, Regime.OBSERVED_INDEPENDENT, np.random.default_rng(7))

        with precision("float64"):
            model = model_factory(experiment).eval()
            assignment = model.constant(assignment_from_graphs(graph.edges, 2)[None])
            rollout = model.rollout_decode(sample.p[None], sample.s[None], assignment, teacher_forcing)

        mse = np.mean((rollout.predictions.data[0] - sample.p[1:]) ** 2)
        assert mse < 1e-10

    def test_null_assignment_with_unit_alpha_is_identity(self, experiment_factory, model_factory, rng):
        experiment = _ground_truth_linear(experiment_factory)
        with precision("float64"):
            model = model_factory(experiment)
            p, s = _linear_batch(rng, batch=1)
            null = np.zeros((1, 6, 2, 2))
            null[..., 0] = 1.0
            rollout = model.rollout_decode(p, s, model.constant(null), teacher_forcing=1)
        np.testing.assert_allclose(rollout.predictions.data, p[:, :-1], atol=1e-12)

    def test_learned_world_reports_scalars(self, experiment_factory, model_factory):
        model = model_factory(_ground_truth_linear(experiment_factory))
        world = model.learned_world()
        assert world["alpha"] == pytest.approx(1.0)
        assert world["betas"] == pytest.approx([0.05])

    def test_random_init_is_near_identity(self, experiment_factory, model_factory):
        model = model_factory(experiment_factory(decoder_mode=DecoderMode.FIXED_LINEAR))
        world = model.learned_world()
        assert abs(world["alpha"] - 1.0) <= 0.1 + 1e-6
        assert all(abs(b) <= 0.1 + 1e-6 for b in world["betas"])

    def test_learned_decoder_has_no_world(self, experiment_factory, model_factory):
        assert model_factory(experiment_factory()).learned_world() is None


@pytest.mark.unit
class TestRollout:
    def test_teacher_forcing_period_must_be_positive(self, experiment_factory, model_factory, rng):
        model = model_factory(experiment_factory())
        p, s = _linear_batch(rng)
        assignment = model.argmax_assignment(model.encode_posteriors(p, s))
        with pytest.raises(ParameterError):
            model.rollout_decode(p, s, assignment, teacher_forcing=0)

    def test_forward_shapes_observed_independent(self, experiment_factory, model_factory, rng):
        model = model_factory(experiment_factory())
        p, s = _linear_batch(rng)
        output = model.forward(p, s, teacher_forcing=10, rng=rng)
        assert output.logits.shape == (2, 6, 2, 2)
        assert output.assignment.shape == (2, 6, 2, 2)
        assert output.rollout.predictions.shape == (2, 9, 3, 1)
        assert output.rollout.state_logits is None
        assert output.rollout.hidden_probs is None

    def test_forward_shapes_observed_dependent(self, experiment_factory, model_factory, rng):
        model = model_factory(experiment_factory(regime=Regime.OBSERVED_DEPENDENT))
        p, s = _linear_batch(rng)
        output = model.forward(p, s, teacher_forcing=3, rng=rng)
        assert output.rollout.predictions.shape == (2, 9, 3, 1)
        assert output.rollout.state_logits.shape == (2, 9, 3, 2)

    def test_forward_shapes_hidden(self, experiment_factory, model_factory, rng):
        model = model_factory(experiment_factory(regime=Regime.HIDDEN))
        p, _ = _linear_batch(rng)
        output = model.forward(p, None, teacher_forcing=10, rng=rng)
        assert output.rollout.predictions.shape == (2, 9, 3, 1)
        probs = output.rollout.hidden_probs.data
        assert probs.shape == (2, 9, 3, 2)
        np.testing.assert_allclose(probs.sum(axis=-1), 1.0, atol=1e-5)
        assert model.hidden_state_predictions(p).shape == (2, 10, 3)

    def test_springs_forward_shapes(self, experiment_factory, model_factory, rng):
        experiment = experiment_factory(scenario=Scenario.SPRINGS, num_objects=3)
        model = model_factory(experiment)
        p = rng.normal(size=(2, 12, 3, 4))
        s = rng.integers(0, 2, size=(2, 12, 3))
        output = model.forward(p, s, teacher_forcing=10, rng=rng)
        assert output.rollout.predictions.shape == (2, 11, 3, 4)

    def test_hidden_baseline_has_no_state_head(self, experiment_factory, model_factory, rng):
        model = model_factory(experiment_factory(regime=Regime.HIDDEN, model_states=1))
        assert model.state_head is None
        with pytest.raises(ContractError):
            model.infer_hidden_states(model.constant(rng.normal(size=(1, 3, 1))))


@pytest.mark.unit
class TestHiddenStateTemperature:
    def test_scenario_defaults(self, experiment_factory):
        assert experiment_factory(regime=Regime.HIDDEN).build_model_config().gamma == pytest.approx(0.1)
        springs = experiment_factory(scenario=Scenario.SPRINGS, regime=Regime.HIDDEN)
        assert springs.build_model_config().gamma == pytest.approx(0.05)

    def test_schedule_override(self, experiment_factory):
        experiment = experiment_factory(regime=Regime.HIDDEN, schedule={"gamma": 0.3})
        assert experiment.build_model_config().gamma == pytest.approx(0.3)


@pytest.mark.unit
class TestModelGradients:
    def _loss(self, model, p, s, noise):
        logits = model.encode_posteriors(p, s)
        assignment = model.sample_edge_assignments(logits, noise=noise)
        rollout = model.rollout_decode(p, s, assignment, teacher_forcing=2)
        return ops.mean((rollout.predictions - model.constant(p[:, 1:])) ** 2)

    def test_encoder_and_decoder_gradients_match_finite_differences(self, experiment_factory, model_factory):
        experiment = experiment_factory(num_timesteps=4, hidden=3, batch_norm=False, precision="float64")
        data_rng = np.random.default_rng(3)
        with precision("float64"):
            model = model_factory(experiment)
            p, s = _linear_batch(data_rng, batch=1, steps=4)
            noise = ops.gumbel_noise((1, 6, 2, 2), data_rng)
            inputs = [
                model.encoder_params["encoder.fc_out.weight"],
                model.decoder_params["decoder.out_fc3.weight"],
                model.decoder_params["decoder.msg_fc1.1.weight"],
            ]
            error = gradient_check(lambda: self._loss(model, p, s, noise), inputs)
        assert error < 1e-5

    def test_backward_reaches_both_parameter_groups(self, experiment_factory, model_factory, rng):
        model = model_factory(experiment_factory())
        p, s = _linear_batch(rng)
        with Tape() as tape:
            loss = self._loss(model, p, s, ops.gumbel_noise((2, 6, 2, 2), rng, dtype=np.float32))
            tape.backward(loss)
        assert np.any(model.encoder_params["encoder.fc_out.weight"].grad != 0)
        assert np.any(model.decoder_params["decoder.out_fc3.weight"].grad != 0)
