"""Directed-spring particles in a reflecting box, integrated with leapfrog."""

import logging
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from sdci.schemas.experiment import Regime
from sdci.simulators.graphs import StateGraph
from sdci.simulators.sample import TimeSeriesSample
from sdci.utils.error_handling import ContractError, ParameterError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SpringWorld:
    """
    Spring constants for edge types 1..n_e-1 (type 0 has none), the box and the integrator.

    ``box_half_width=None`` removes the walls.
    """

    deltas: Sequence[float] = (0.1,)
    box_half_width: Optional[float] = 5.0
    dt: float = 0.001
    subsample: int = 100

    def __post_init__(self):
        if self.dt <= 0:
            raise ParameterError(f"dt must be positive, got {self.dt}", operation="SpringWorld")
        if self.subsample < 1:
            raise ParameterError(f"subsample must be >= 1, got {self.subsample}", operation="SpringWorld")
        if self.box_half_width is not None and self.box_half_width <= 0:
            raise ParameterError("box half-width must be positive", operation="SpringWorld")

    @property
    def num_edge_types(self) -> int:
        return len(self.deltas) + 1

    @property
    def coefficients(self) -> np.ndarray:
        return np.array([0.0, *self.deltas], dtype=np.float64)

    def as_dict(self) -> dict:
        return {
            "deltas": [float(d) for d in self.deltas],
            "box_half_width": self.box_half_width,
            "dt": self.dt,
            "subsample": self.subsample,
        }


@dataclass
class SpringInit:
    positions: np.ndarray
    velocities: np.ndarray


def spring_coefficients(graph: StateGraph, world: SpringWorld, states: np.ndarray) -> np.ndarray:
    """``C[i, j] = delta_{g[s_j][j][i]}``: stiffness of the spring pulling i towards j."""
    if graph.num_edge_types != world.num_edge_types:
        raise ContractError(
            f"graph has {graph.num_edge_types} edge types, world defines {world.num_edge_types}",
            operation="spring_coefficients",
        )
    return world.coefficients[graph.incoming_types(states)]


def spring_forces(positions: np.ndarray, coefficients: np.ndarray) -> np.ndarray:
    """Hooke forces ``sum_j -C[i, j] (r_i - r_j)`` on every particle (unit mass)."""
    return coefficients @ positions - coefficients.sum(axis=1, keepdims=True) * positions


def reflect(
    positions: np.ndarray, velocities: np.ndarray, bound: Optional[float]
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Mirror coordinates outside [-bound, bound] back inside and flip those velocity components."""
    collided = np.zeros(positions.shape[0], dtype=bool)
    if bound is None:
        return positions, velocities, collided
    positions = positions.copy()
    velocities = velocities.copy()
    over = positions > bound
    under = positions < -bound
    positions[over] = 2 * bound - positions[over]
    positions[under] = -2 * bound - positions[under]
    hit = over | under
    velocities[hit] = -velocities[hit]
    collided = hit.any(axis=1)
    return positions, velocities, collided


def spring_step(
    positions: np.ndarray,
    velocities: np.ndarray,
    graph: StateGraph,
    world: SpringWorld,
    states: np.ndarray,
    coefficients: Optional[np.ndarray] = None,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    One leapfrog step: half-kick, drift, wall reflection, recompute forces, half-kick.

    Returns next positions, next velocities and a per-particle collision mask.
    """
    if coefficients is None:
        coefficients = spring_coefficients(graph, world, states)
    dt = world.dt
    half_v = velocities + 0.5 * dt * spring_forces(positions, coefficients)
    drifted = positions + dt * half_v
    drifted, half_v, collided = reflect(drifted, half_v, world.box_half_width)
    next_v = half_v + 0.5 * dt * spring_forces(drifted, coefficients)
    return drifted, next_v, collided


def total_energy(positions: np.ndarray, velocities: np.ndarray, coefficients: np.ndarray) -> float:
    """Kinetic plus spring potential energy; meaningful for symmetric coefficient matrices only."""
    kinetic = 0.5 * float(np.sum(velocities**2))
    diff = positions[:, None, :] - positions[None, :, :]
    potential = 0.25 * float(np.sum(coefficients * np.sum(diff**2, axis=-1)))
    return kinetic + potential


def random_init(
    num_objects: int, rng: np.random.Generator, position_std: float = 0.5, velocity_norm: float = 0.5
) -> SpringInit:
    positions = rng.normal(0.0, position_std, size=(num_objects, 2))
    velocities = rng.standard_normal((num_objects, 2))
    norms = np.linalg.norm(velocities, axis=1, keepdims=True)
    velocities = velocities / np.maximum(norms, 1e-12) * velocity_norm
    return SpringInit(positions=positions, velocities=velocities)


def location_states(positions: np.ndarray) -> np.ndarray:
    """State 1 for particles on the negative-x half of the box."""
    return (np.asarray(positions)[..., 0] < 0).astype(np.int64)


def spring_rollout(
    graph: StateGraph,
    world: SpringWorld,
    num_timesteps: int,
    regime: Regime,
    rng: np.random.Generator,
    init: Optional[SpringInit] = None,
    state_period: int = 10,
    position_std: float = 0.5,
    velocity_norm: float = 0.5,
) -> TimeSeriesSample:
    """
    Integrate with step ``world.dt`` and record every ``world.subsample``-th micro-step.

    Regimes: observed-independent states advance by one (mod K) for every particle each
    `state_period` frames; observed-dependent states toggle on each wall collision; hidden
    states are 1 iff the x-coordinate is negative.
    """
    if num_timesteps < 2:
        raise ParameterError(f"need at least 2 time steps, got {num_timesteps}", operation="spring_rollout")
    if state_period < 1:
        raise ParameterError("state_period must be >= 1", operation="spring_rollout")
    n = graph.num_objects
    num_states = graph.num_states
    if regime != Regime.OBSERVED_INDEPENDENT and num_states != 2:
        raise ParameterError("wall-event and location regimes need exactly two states", operation="spring_rollout")
    if init is None:
        init = random_init(n, rng, position_std, velocity_norm)
    r = np.asarray(init.positions, dtype=np.float64).copy()
    v = np.asarray(init.velocities, dtype=np.float64).copy()

    if regime == Regime.OBSERVED_INDEPENDENT:
        s = np.zeros(n, dtype=np.int64)
    elif regime == Regime.OBSERVED_DEPENDENT:
        s = rng.integers(0, 2, size=n)
    else:
        s = location_states(r)

    p = np.empty((num_timesteps, n, 4), dtype=np.float64)
    states = np.empty((num_timesteps, n), dtype=np.int64)
    coefficient_cache: dict[bytes, np.ndarray] = {}

    def coefficients_for(current: np.ndarray) -> np.ndarray:
        key = current.tobytes()
        if key not in coefficient_cache:
            coefficient_cache[key] = spring_coefficients(graph, world, current)
        return coefficient_cache[key]

    for t in range(num_timesteps):
        if regime == Regime.OBSERVED_INDEPENDENT:
            s = np.full(n, (t // state_period) % num_states, dtype=np.int64)
        p[t, :, :2] = r
        p[t, :, 2:] = v
        states[t] = s
        if t == num_timesteps - 1:
            break
        for _ in range(world.subsample):
            r, v, collided = spring_step(r, v, graph, world, s, coefficients_for(s))
            if regime == Regime.OBSERVED_DEPENDENT and collided.any():
                s = np.where(collided, 1 - s, s)
            elif regime == Regime.HIDDEN:
                s = location_states(r)

    return TimeSeriesSample(p=p, s=states, graph=graph, regime=regime)
