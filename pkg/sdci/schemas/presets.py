"""Named experiment presets, each in full and desk scale."""
from typing import Callable, Dict

from sdci.schemas.experiment import (
    DataSettings,
    DatasetSizes,
    DecoderInit,
    DecoderMode,
    EncoderVariant,
    ExperimentConfig,
    Regime,
    Scenario,
    TrainSchedule,
)
from sdci.utils.error_handling import ConfigurationError

FULL_SIZES = DatasetSizes(train=10_000, valid=2_000, test=2_000)
DESK_SIZES = DatasetSizes(train=1_000, valid=200, test=200)
DESK_EPOCHS = {Scenario.LINEAR: 300, Scenario.SPRINGS: 200}
# 1,000 / 16 gives 63 Adam steps per epoch, close to the 79 of 10,000 / 128
DESK_BATCH_SIZE = 16
FULL_BATCH_SIZE = 128


def _linear_schedule(desk: bool) -> TrainSchedule:
    return TrainSchedule(
        epochs=DESK_EPOCHS[Scenario.LINEAR] if desk else 1000,
        batch_size=DESK_BATCH_SIZE if desk else FULL_BATCH_SIZE,
        encoder_lr=5e-4,
        decoder_lr=1e-3,
        gamma=0.1,
    )


def _springs_schedule(desk: bool) -> TrainSchedule:
    return TrainSchedule(
        epochs=DESK_EPOCHS[Scenario.SPRINGS] if desk else 500,
        batch_size=DESK_BATCH_SIZE if desk else FULL_BATCH_SIZE,
        encoder_lr=5e-4,
        decoder_lr=5e-4,
        gamma=0.05,
    )


def _linear(name: str, desk: bool, **overrides) -> ExperimentConfig:
    return ExperimentConfig(
        name=name,
        scenario=Scenario.LINEAR,
        data=DataSettings(sizes=DESK_SIZES if desk else FULL_SIZES),
        schedule=_linear_schedule(desk),
        **overrides,
    )


def _springs(name: str, desk: bool, **overrides) -> ExperimentConfig:
    return ExperimentConfig(
        name=name,
        scenario=Scenario.SPRINGS,
        data=DataSettings(sizes=DESK_SIZES if desk else FULL_SIZES),
        schedule=_springs_schedule(desk),
        **overrides,
    )


def _registry() -> Dict[str, Callable[[bool], ExperimentConfig]]:
    presets: Dict[str, Callable[[bool], ExperimentConfig]] = {
        "linear_k1": lambda desk: _linear("linear_k1", desk, num_states=1),
        "linear_k2": lambda desk: _linear("linear_k2", desk, num_states=2),
        "linear_k2_acd": lambda desk: _linear("linear_k2_acd", desk, num_states=2, model_states=1),
        "linear_k2_fixed_decoder": lambda desk: _linear(
            "linear_k2_fixed_decoder", desk, num_states=2, decoder_mode=DecoderMode.FIXED_LINEAR
        ),
        "linear_k2_fixed_decoder_acd": lambda desk: _linear(
            "linear_k2_fixed_decoder_acd", desk, num_states=2, model_states=1, decoder_mode=DecoderMode.FIXED_LINEAR
        ),
        "linear_k2_fixed_decoder_true": lambda desk: _linear(
            "linear_k2_fixed_decoder_true",
            desk,
            num_states=2,
            decoder_mode=DecoderMode.FIXED_LINEAR,
            decoder_init=DecoderInit.GROUND_TRUTH,
            freeze_decoder=True,
        ),
        "linear_k2_temporal": lambda desk: _linear(
            "linear_k2_temporal", desk, num_states=2, variant=EncoderVariant.TEMPORAL
        ),
        "linear_k2_temporal_fixed_decoder": lambda desk: _linear(
            "linear_k2_temporal_fixed_decoder",
            desk,
            num_states=2,
            variant=EncoderVariant.TEMPORAL,
            decoder_mode=DecoderMode.FIXED_LINEAR,
        ),
        "linear_dependent": lambda desk: _linear(
            "linear_dependent", desk, num_states=2, regime=Regime.OBSERVED_DEPENDENT
        ),
        "linear_hidden": lambda desk: _linear("linear_hidden", desk, num_states=2, regime=Regime.HIDDEN),
        "springs_wall_event": lambda desk: _springs(
            "springs_wall_event", desk, num_states=2, regime=Regime.OBSERVED_DEPENDENT
        ),
        "springs_wall_event_acd": lambda desk: _springs(
            "springs_wall_event_acd", desk, num_states=2, regime=Regime.OBSERVED_DEPENDENT, model_states=1
        ),
        "springs_hidden_location": lambda desk: _springs(
            "springs_hidden_location", desk, num_states=2, regime=Regime.HIDDEN
        ),
        "springs_hidden_location_acd": lambda desk: _springs(
            "springs_hidden_location_acd", desk, num_states=2, regime=Regime.HIDDEN, model_states=1
        ),
    }
    for k in range(1, 9):
        presets[f"springs_states_{k}"] = lambda desk, k=k: _springs(f"springs_states_{k}", desk, num_states=k)
    return presets


PRESETS = _registry()


def preset_names() -> list[str]:
    return sorted(PRESETS)


def get_preset(name: str, desk: bool = True) -> ExperimentConfig:
    """Build a preset by name; desk scale unless `desk` is False."""
    try:
        builder = PRESETS[name]
    except KeyError:
        raise ConfigurationError(
            f"Unknown preset {name!r}; available: {', '.join(preset_names())}", operation="get_preset"
        ) from None
    return builder(desk)
