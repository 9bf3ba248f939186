"""In-memory time-series sample produced by the simulators."""

from dataclasses import dataclass

import numpy as np

from sdci.schemas.experiment import Regime
from sdci.simulators.graphs import StateGraph
from sdci.utils.error_handling import ContractError


@dataclass
class TimeSeriesSample:
    """Trajectories ``p`` [T, N, D], states ``s`` [T, N] and the generating graph."""

    p: np.ndarray
    s: np.ndarray
    graph: StateGraph
    regime: Regime
    diverged: bool = False

    def __post_init__(self):
        if self.p.ndim != 3:
            raise ContractError(f"p must be [T, N, D], got {self.p.shape}", operation="TimeSeriesSample")
        if self.s.shape != self.p.shape[:2]:
            raise ContractError(
                f"s shape {self.s.shape} does not match p shape {self.p.shape}", operation="TimeSeriesSample"
            )
        if self.p.shape[1] != self.graph.num_objects:
            raise ContractError("graph and trajectories disagree on N", operation="TimeSeriesSample")
        if self.s.size and self.s.max() >= self.graph.num_states:
            raise ContractError("state index exceeds the number of graph states", operation="TimeSeriesSample")

    @property
    def num_timesteps(self) -> int:
        return int(self.p.shape[0])

    @property
    def num_objects(self) -> int:
        return int(self.p.shape[1])

    @property
    def dims(self) -> int:
        return int(self.p.shape[2])
