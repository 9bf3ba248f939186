"""Named, splittable random streams derived from one master seed."""

import zlib
from typing import Any, Dict

import numpy as np


def _stable_key(name: str) -> int:
    return zlib.crc32(name.encode("utf-8"))


class RngStreams:
    """
    One independent generator per concern (data, init, gumbel, ...).

    A stream is identified by its name plus optional integer path components, so the
    generator for (``"data"``, split 0, sample 17) never depends on how many other
    streams were drawn before it.
    """

    def __init__(self, master_seed: int):
        self.master_seed = int(master_seed)
        self._live: Dict[str, np.random.Generator] = {}

    def derive(self, name: str, *path: int) -> np.random.Generator:
        """Fresh generator for (name, *path); calling twice gives identical streams."""
        entropy = [self.master_seed, _stable_key(name), *[int(p) for p in path]]
        return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))

    def stream(self, name: str) -> np.random.Generator:
        """Long-lived generator for a concern; its position is part of the run state."""
        if name not in self._live:
            self._live[name] = self.derive(name)
        return self._live[name]

    def state_dict(self) -> Dict[str, Any]:
        return {
            "master_seed": self.master_seed,
            "streams": {name: gen.bit_generator.state for name, gen in self._live.items()},
        }

    def load_state_dict(self, state: Dict[str, Any]) -> None:
        self.master_seed = int(state["master_seed"])
        self._live = {}
        for name, bit_state in state.get("streams", {}).items():
            generator = self.derive(name)
            generator.bit_generator.state = bit_state
            self._live[name] = generator
