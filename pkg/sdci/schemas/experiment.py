"""Experiment configuration Pydantic v2 schemas."""
from enum import Enum
from typing import List, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


class Scenario(str, Enum):
    """Data-generating system."""
    LINEAR = "linear"
    SPRINGS = "springs"


class Regime(str, Enum):
    """How the states relate to the observations."""
    OBSERVED_INDEPENDENT = "observed-independent"
    OBSERVED_DEPENDENT = "observed-dependent"
    HIDDEN = "hidden"


class EncoderVariant(str, Enum):
    """Encoder architecture."""
    STATIC = "static"
    TEMPORAL = "temporal"


class DecoderMode(str, Enum):
    """Dynamics decoder family."""
    LEARNED = "learned"
    FIXED_LINEAR = "fixed-linear"


class DecoderInit(str, Enum):
    """Initial values of the fixed-linear decoder scalars."""
    RANDOM = "random"
    GROUND_TRUTH = "ground-truth"


DEFAULT_OBJECTS = {Scenario.LINEAR: 3, Scenario.SPRINGS: 5}
DEFAULT_TIMESTEPS = {Scenario.LINEAR: 40, Scenario.SPRINGS: 80}
DEFAULT_GAMMA = {Scenario.LINEAR: 0.1, Scenario.SPRINGS: 0.05}


class StrictModel(BaseModel):
    model_config = ConfigDict(
        extra="forbid", use_enum_values=False, validate_assignment=True, protected_namespaces=()
    )


class WorldSettings(StrictModel):
    """Generator constants for both scenarios."""

    alpha: float = Field(default=1.0, description="Self-connection coefficient of the linear update")
    betas: List[float] = Field(default_factory=lambda: [0.05], description="Linear edge coefficients beta_1..")
    deltas: List[float] = Field(default_factory=lambda: [0.1], description="Spring constants delta_1..")
    box_half_width: float = Field(default=5.0, gt=0, description="Half-width of the reflecting box")
    dt: float = Field(default=0.001, gt=0, description="Leapfrog step size")
    subsample: int = Field(default=100, ge=1, description="Micro-steps per recorded frame")
    position_std: float = Field(default=0.5, gt=0, description="Initial position standard deviation")
    velocity_norm: float = Field(default=0.5, ge=0, description="Initial speed of every particle")
    state_period: int = Field(default=10, ge=1, description="Frames between scheduled state increments")


class DatasetSizes(StrictModel):
    """Number of samples per split."""

    train: int = Field(default=10_000, ge=1)
    valid: int = Field(default=2_000, ge=0)
    test: int = Field(default=2_000, ge=0)

    def as_dict(self) -> dict:
        return {"train": self.train, "valid": self.valid, "test": self.test}


class DataSettings(StrictModel):
    """Shape and sampling options of the generated dataset."""

    num_objects: Optional[int] = Field(default=None, ge=2, description="N; scenario default when omitted")
    num_timesteps: Optional[int] = Field(default=None, ge=2, description="T; scenario default when omitted")
    edge_prob: float = Field(default=0.5, ge=0.0, le=1.0, description="Probability of an edge per ordered pair")
    drop_diverged: bool = Field(default=False, description="Exclude linear samples beyond the overflow guard")
    sizes: DatasetSizes = Field(default_factory=DatasetSizes)


class TrainSchedule(StrictModel):
    """Optimization hyperparameters."""

    epochs: int = Field(default=1000, ge=1)
    batch_size: int = Field(default=128, ge=1)
    encoder_lr: float = Field(default=5e-4, gt=0)
    decoder_lr: float = Field(default=1e-3, gt=0)
    decay_factor: float = Field(default=0.5, gt=0, le=1)
    decay_period: int = Field(default=200, ge=1)
    teacher_forcing: int = Field(default=10, ge=1, description="Ground truth is fed every this many frames")
    tau: float = Field(default=0.5, gt=0, description="Posterior softmax and Gumbel temperature")
    gamma: Optional[float] = Field(default=None, gt=0, description="Hidden-state temperature; scenario default")
    lam: float = Field(default=1e3, ge=0, description="Weight of the state negative log-likelihood")
    sigma2: float = Field(default=5e-5, gt=0, description="Decoder Gaussian variance")
    hard_sample: bool = Field(default=False, description="Straight-through one-hot edge samples in training")
    seed: int = Field(default=0, description="Seed of parameter init and Gumbel noise")


class ModelConfig(StrictModel):
    """Architecture of the encoder/decoder pair."""

    variant: EncoderVariant = EncoderVariant.STATIC
    hidden: int = Field(default=256, ge=1)
    num_states: int = Field(default=2, ge=1, description="States of the edge posterior (1 for the baseline)")
    num_edge_types: int = Field(default=2, ge=2)
    dims: int = Field(default=1, ge=1, description="Per-object feature size D")
    num_timesteps: int = Field(default=40, ge=2)
    state_classes: int = Field(default=2, ge=1, description="K of the data states")
    state_input: bool = Field(default=True, description="Observed state one-hots are part of the input")
    encoder_state_input: bool = Field(default=True, description="Encoder receives the state one-hots")
    predict_states: bool = Field(default=False, description="Next-state head supervised with lambda")
    hidden_states: bool = Field(default=False, description="States inferred from dynamics")
    tau: float = Field(default=0.5, gt=0)
    gamma: float = Field(default=0.1, gt=0)
    decoder_mode: DecoderMode = DecoderMode.LEARNED
    decoder_init: DecoderInit = DecoderInit.RANDOM
    freeze_decoder: bool = False
    true_alpha: Optional[float] = None
    true_betas: Optional[List[float]] = None
    batch_norm: bool = True
    kernel_width: int = Field(default=3, ge=1)
    cnn_filters: int = Field(default=256, ge=1)
    precision: str = Field(default="float32", pattern="^(float32|float64)$")

    @model_validator(mode="after")
    def check_consistency(self) -> "ModelConfig":
        if self.num_states not in (1, self.state_classes):
            raise ValueError("num_states must be 1 (baseline) or equal to state_classes")
        if self.variant == EncoderVariant.TEMPORAL:
            needed = 2 * (self.kernel_width - 1) + 2
            if self.num_timesteps < needed:
                raise ValueError(f"temporal encoder needs at least {needed} time steps")
        if self.decoder_mode == DecoderMode.FIXED_LINEAR and self.dims != 1:
            raise ValueError("fixed-linear decoder requires one-dimensional objects")
        if self.decoder_mode == DecoderMode.FIXED_LINEAR and self.predict_states:
            raise ValueError("fixed-linear decoder has no next-state head")
        if self.decoder_init == DecoderInit.GROUND_TRUTH and self.true_betas is None:
            raise ValueError("ground-truth decoder init needs true_alpha and true_betas")
        return self

    @property
    def encoder_features(self) -> int:
        """Per-frame feature size seen by the encoder."""
        extra = self.state_classes if (self.state_input and self.encoder_state_input) else 0
        return self.dims + extra

    @property
    def decoder_features(self) -> int:
        return self.dims + (self.state_classes if self.state_input else 0)


class ExperimentConfig(StrictModel):
    """Everything needed to regenerate data, train and evaluate one experiment."""

    name: str = Field(default="experiment", description="Run label used in reports")
    scenario: Scenario
    regime: Regime = Regime.OBSERVED_INDEPENDENT
    num_states: int = Field(default=2, ge=1, le=255, description="K of the data")
    num_edge_types: int = Field(default=2, ge=2, le=255)
    variant: EncoderVariant = EncoderVariant.STATIC
    model_states: Optional[int] = Field(default=None, ge=1, description="Posterior states; 1 gives the baseline")
    decoder_mode: DecoderMode = DecoderMode.LEARNED
    decoder_init: DecoderInit = DecoderInit.RANDOM
    freeze_decoder: bool = False
    hidden: int = Field(default=256, ge=1)
    batch_norm: bool = True
    precision: str = Field(default="float32", pattern="^(float32|float64)$")
    seed: int = Field(default=42, description="Master seed of the data streams")
    world: WorldSettings = Field(default_factory=WorldSettings)
    data: DataSettings = Field(default_factory=DataSettings)
    schedule: TrainSchedule = Field(default_factory=TrainSchedule)
    output_dir: Optional[str] = None

    @field_validator("name")
    @classmethod
    def validate_name(cls, v: str) -> str:
        v = v.strip()
        if not v:
            raise ValueError("name must not be empty")
        return v

    @model_validator(mode="after")
    def check_consistency(self) -> "ExperimentConfig":
        world_params = self.world.betas if self.scenario == Scenario.LINEAR else self.world.deltas
        if len(world_params) != self.num_edge_types - 1:
            field_name = "betas" if self.scenario == Scenario.LINEAR else "deltas"
            raise ValueError(f"world.{field_name} needs {self.num_edge_types - 1} values (one per non-null edge type)")
        if self.decoder_mode == DecoderMode.FIXED_LINEAR and self.scenario != Scenario.LINEAR:
            raise ValueError("fixed-linear decoder is only defined for the linear scenario")
        if self.decoder_mode == DecoderMode.FIXED_LINEAR and self.regime == Regime.OBSERVED_DEPENDENT:
            raise ValueError("fixed-linear decoder cannot predict next states (observed-dependent regime)")
        if self.freeze_decoder and self.decoder_mode != DecoderMode.FIXED_LINEAR:
            raise ValueError("freeze_decoder applies to the fixed-linear decoder only")
        if self.model_states is not None and self.model_states not in (1, self.num_states):
            raise ValueError("model_states must be 1 or equal to num_states")
        if self.regime == Regime.HIDDEN and self.num_states < 2:
            raise ValueError("hidden regime needs at least two states")
        if self.scenario == Scenario.LINEAR and self.regime != Regime.OBSERVED_INDEPENDENT and self.num_states != 2:
            raise ValueError("the linear sign rule defines exactly two states")
        if self.scenario == Scenario.SPRINGS and self.regime != Regime.OBSERVED_INDEPENDENT and self.num_states != 2:
            raise ValueError("wall-event and location rules define exactly two states")
        return self

    @property
    def num_objects(self) -> int:
        return self.data.num_objects or DEFAULT_OBJECTS[self.scenario]

    @property
    def num_timesteps(self) -> int:
        return self.data.num_timesteps or DEFAULT_TIMESTEPS[self.scenario]

    @property
    def dims(self) -> int:
        return 1 if self.scenario == Scenario.LINEAR else 4

    @property
    def gamma(self) -> float:
        return self.schedule.gamma or DEFAULT_GAMMA[self.scenario]

    @property
    def posterior_states(self) -> int:
        return self.model_states or self.num_states

    @property
    def is_baseline(self) -> bool:
        return self.posterior_states == 1 and self.num_states > 1

    def build_model_config(self) -> ModelConfig:
        """Architecture implied by the experiment."""
        observed = self.regime != Regime.HIDDEN
        hidden = self.regime == Regime.HIDDEN
        return ModelConfig(
            variant=self.variant,
            hidden=self.hidden,
            num_states=self.posterior_states,
            num_edge_types=self.num_edge_types,
            dims=self.dims,
            num_timesteps=self.num_timesteps,
            state_classes=self.num_states,
            state_input=observed,
            encoder_state_input=observed and not self.is_baseline,
            predict_states=self.regime == Regime.OBSERVED_DEPENDENT,
            hidden_states=hidden and not self.is_baseline,
            tau=self.schedule.tau,
            gamma=self.gamma,
            decoder_mode=self.decoder_mode,
            decoder_init=self.decoder_init,
            freeze_decoder=self.freeze_decoder,
            true_alpha=self.world.alpha if self.scenario == Scenario.LINEAR else None,
            true_betas=list(self.world.betas) if self.scenario == Scenario.LINEAR else None,
            batch_norm=self.batch_norm,
            precision=self.precision,
        )
