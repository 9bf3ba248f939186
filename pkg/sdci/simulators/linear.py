"""State-dependent linear message passing, a first-order VAR with state-selected coefficients."""

import logging
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from sdci import config
from sdci.schemas.experiment import Regime
from sdci.simulators.graphs import StateGraph
from sdci.simulators.sample import TimeSeriesSample
from sdci.utils.error_handling import ContractError, ParameterError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class LinearWorld:
    """Self-connection ``alpha`` and edge coefficients ``betas`` for types 1..n_e-1."""

    alpha: float = 1.0
    betas: Sequence[float] = (0.05,)

    @property
    def num_edge_types(self) -> int:
        return len(self.betas) + 1

    @property
    def coefficients(self) -> np.ndarray:
        """beta indexed by edge type, with beta_0 = 0."""
        return np.array([0.0, *self.betas], dtype=np.float64)

    def as_dict(self) -> dict:
        return {"alpha": float(self.alpha), "betas": [float(b) for b in self.betas]}


def var_transition_matrix(graph: StateGraph, world: LinearWorld, states: np.ndarray) -> tuple[np.ndarray, bool, float]:
    """
    Transition matrix of one step for a fixed per-object state assignment.

    Returns ``(A, strictly_stable, spectral_radius)`` with ``A[i, i] = alpha`` and
    ``A[i, j] = beta_{g[s_j][j][i]}``.
    """
    if graph.num_edge_types != world.num_edge_types:
        raise ContractError(
            f"graph has {graph.num_edge_types} edge types, world defines {world.num_edge_types}",
            operation="var_transition_matrix",
        )
    types = graph.incoming_types(states)
    matrix = world.coefficients[types]
    np.fill_diagonal(matrix, world.alpha)
    radius = float(np.max(np.abs(np.linalg.eigvals(matrix))))
    return matrix, radius < 1.0, radius


def sign_states(p: np.ndarray) -> np.ndarray:
    """State 1 where the value is strictly negative."""
    return (np.asarray(p) < 0).astype(np.int64)


def linear_rollout(
    graph: StateGraph,
    world: LinearWorld,
    num_timesteps: int,
    regime: Regime,
    rng: np.random.Generator,
    p0: Optional[np.ndarray] = None,
    states: Optional[np.ndarray] = None,
    overflow_guard: Optional[float] = None,
) -> TimeSeriesSample:
    """
    Deterministic rollout of ``p^{t+1} = A(s^t) p^t``.

    Observed-independent states come from `states` when given, otherwise they are drawn
    i.i.d. uniformly per object and frame. The other regimes use the sign rule.
    """
    if num_timesteps < 2:
        raise ParameterError(f"need at least 2 time steps, got {num_timesteps}", operation="linear_rollout")
    n = graph.num_objects
    guard = config.SDCI_OVERFLOW_GUARD if overflow_guard is None else overflow_guard

    if p0 is None:
        p0 = rng.standard_normal(n)
    p0 = np.asarray(p0, dtype=np.float64).reshape(n)
    if not np.all(np.isfinite(p0)):
        raise ParameterError("initial values must be finite", operation="linear_rollout")

    scheduled = regime == Regime.OBSERVED_INDEPENDENT
    if scheduled:
        if states is None:
            states = rng.integers(0, graph.num_states, size=(num_timesteps, n))
        states = np.asarray(states, dtype=np.int64)
        if states.shape != (num_timesteps, n):
            raise ContractError(
                f"state schedule must be [{num_timesteps}, {n}], got {states.shape}", operation="linear_rollout"
            )

    p = np.empty((num_timesteps, n), dtype=np.float64)
    s = np.empty((num_timesteps, n), dtype=np.int64)
    p[0] = p0
    coefficients = world.coefficients
    with np.errstate(over="ignore", invalid="ignore"):
        for t in range(num_timesteps):
            s[t] = states[t] if scheduled else sign_states(p[t])
            if t == num_timesteps - 1:
                break
            matrix = coefficients[graph.incoming_types(s[t])]
            np.fill_diagonal(matrix, world.alpha)
            p[t + 1] = matrix @ p[t]

    diverged = bool(np.any(~np.isfinite(p)) or np.any(np.abs(p) > guard))
    if diverged:
        logger.debug("linear rollout exceeded the overflow guard", extra={"guard": guard})
    return TimeSeriesSample(p=p[..., None], s=s, graph=graph, regime=regime, diverged=diverged)


def stable_under_all_states(graph: StateGraph, world: LinearWorld) -> bool:
    """True when every uniform state assignment gives a strictly stable transition."""
    n = graph.num_objects
    return all(
        var_transition_matrix(graph, world, np.full(n, k))[1] for k in range(graph.num_states)
    )
