import numpy as np
import pytest
from dotenv import load_dotenv

from sdci.model.sdci import SDCIModel
from sdci.schemas.experiment import (
    DatasetSizes,
    DataSettings,
    ExperimentConfig,
    Regime,
    Scenario,
    TrainSchedule,
    WorldSettings,
)
from sdci.simulators.dataset import build_dataset
from sdci.simulators.graphs import StateGraph
from sdci.simulators.linear import LinearWorld
from sdci.tensor.tensor import set_default_dtype

# Load environment variables
load_dotenv()


@pytest.fixture(autouse=True)
def default_precision():
    """Every test starts from single precision, whatever the previous test selected."""
    set_default_dtype("float32")
    yield
    set_default_dtype("float32")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def linear_world():
    return LinearWorld(alpha=1.0, betas=(0.05,))


# Test data factories
@pytest.fixture
def graph_factory():
    """Factory for StateGraphs from explicit (state, source, target, type) edges."""

    def _create_graph(num_objects: int = 3, num_states: int = 1, edges=(), num_edge_types: int = 2) -> StateGraph:
        matrix = np.zeros((num_states, num_objects, num_objects), dtype=np.uint8)
        for state, source, target, edge_type in edges:
            matrix[state, source, target] = edge_type
        return StateGraph(edges=matrix, num_edge_types=num_edge_types)

    return _create_graph


@pytest.fixture
def experiment_factory():
    """Factory for tiny ExperimentConfigs that train in seconds."""

    def _create_experiment(
        scenario: Scenario = Scenario.LINEAR,
        regime: Regime = Regime.OBSERVED_INDEPENDENT,
        num_states: int = 2,
        train: int = 8,
        valid: int = 4,
        test: int = 4,
        num_timesteps: int = None,
        num_objects: int = None,
        epochs: int = 2,
        batch_size: int = 4,
        hidden: int = 8,
        world: WorldSettings = None,
        schedule: dict = None,
        **kwargs,
    ) -> ExperimentConfig:
        if world is None:
            # a short integrator keeps spring rollouts fast
            world = WorldSettings(subsample=5, dt=0.01) if scenario == Scenario.SPRINGS else WorldSettings()
        return ExperimentConfig(
            name=kwargs.pop("name", f"{scenario.value}-{regime.value}-k{num_states}"),
            scenario=scenario,
            regime=regime,
            num_states=num_states,
            hidden=hidden,
            world=world,
            data=DataSettings(
                num_objects=num_objects,
                num_timesteps=num_timesteps or (10 if scenario == Scenario.LINEAR else 12),
                sizes=DatasetSizes(train=train, valid=valid, test=test),
            ),
            schedule=TrainSchedule(epochs=epochs, batch_size=batch_size, **(schedule or {})),
            **kwargs,
        )

    return _create_experiment


@pytest.fixture
def model_factory():
    """Factory for SDCIModels built from an experiment config."""

    def _create_model(experiment: ExperimentConfig, seed: int = None) -> SDCIModel:
        return SDCIModel(experiment.build_model_config(), seed=experiment.schedule.seed if seed is None else seed)

    return _create_model


@pytest.fixture
def tiny_experiment(experiment_factory):
    return experiment_factory()


@pytest.fixture
def tiny_dataset(tiny_experiment):
    return build_dataset(tiny_experiment, workers=1)
