from pathlib import Path
from typing import Annotated, Literal

from pydantic import Field, model_validator

from sdde_stab.config import (
    AttractionConfig,
    ClassifierConfig,
    DelayConfig,
    IntegratorConfig,
    RationalBumpDelayConfig,
    ReductionConfig,
    SpectrumConfig,
    WindowConfig,
)
from sdde_stab.utils.config import LogConfig
from sdde_stab.utils.pydantic_config import BaseSettings

Window = Annotated[
    list[float],
    Field(
        min_length=4,
        max_length=4,
        description="Search window as re_min,re_max,im_min,im_max. If None, uses the window of the spectrum block.",
    ),
]


class CommandConfig(BaseSettings):
    """Options shared by all commands: the model block, the integrator, logging and the output directory."""

    a: Annotated[float, Field(gt=0, description="Parameter a > 0 of the exchange-rate model.")] = 0.5

    delay: Annotated[DelayConfig, Field(description="The delay function r.")] = RationalBumpDelayConfig()

    grid_nodes: Annotated[int, Field(ge=2, description="Number of knots of constructed initial segments.")] = 256

    output_dir: Annotated[Path, Field(description="Directory to write the command's outputs to.")] = Path("outputs")

    # The integrator configuration
    integrator: IntegratorConfig = IntegratorConfig()

    # The logging configuration
    log: LogConfig = LogConfig()


class SpectrumCommandConfig(CommandConfig):
    """Configures the `spectrum` command: characteristic roots in a window, written to roots.csv."""

    window: Window | None = None

    # The root search configuration
    spectrum: SpectrumConfig = SpectrumConfig()

    def spectrum_config(self) -> SpectrumConfig:
        if self.window is None:
            return self.spectrum
        return self.spectrum.model_copy(update={"window": WindowConfig.from_list(self.window)})


class SimulateConfig(CommandConfig):
    """Configures the `simulate` command: one trajectory from admissible data, written to trajectory.csv."""

    eps: Annotated[float, Field(description="Amplitude of the admissible initial data.")] = 0.1

    branch: Annotated[
        Literal["auto", "affine", "exponential"],
        Field(description="Construction of the admissible initial data."),
    ] = "auto"

    initial: Annotated[
        Path | None,
        Field(description="CSV file (theta,value,derivative) with the initial segment. If set, `eps` is ignored."),
    ] = None

    horizon: Annotated[float, Field(gt=0, description="Integration horizon T.")] = 100.0

    stride: Annotated[float, Field(gt=0, description="Sampling stride of the trajectory CSV.")] = 1e-2


class ReduceConfig(CommandConfig):
    """Configures the `reduce` command: fit of the reduced field on the center manifold, written to fit.json."""

    # The reduction configuration
    reduction: ReductionConfig = ReductionConfig()


class ClassifyConfig(SpectrumCommandConfig):
    """Configures the `classify` command: the stability verdict, written to verdict.json."""

    # The reduction configuration
    reduction: ReductionConfig = ReductionConfig()

    def classifier_config(self) -> ClassifierConfig:
        return ClassifierConfig(spectrum=self.spectrum_config(), reduction=self.reduction, integrator=self.integrator)


class AttractConfig(CommandConfig):
    """Configures the `attract` command: exponential attraction towards the center manifold."""

    eps: Annotated[float, Field(description="Amplitude of the admissible data on the center direction.")] = 0.05

    perturbation: Annotated[
        float,
        Field(description="Amplitude of the perturbation along the stable eigenfunction exp(kappa theta)."),
    ] = 0.01

    # The attraction configuration
    attraction: AttractionConfig = AttractionConfig()

    # The root search configuration
    spectrum: SpectrumConfig = SpectrumConfig()


class SweepConfig(ClassifyConfig):
    """Configures the `sweep` command: one task per value of a, written to sweep.csv."""

    a_values: Annotated[list[float], Field(description="Values of the model parameter a to sweep over.")] = []

    task: Annotated[Literal["spectrum", "classify"], Field(description="Task to run for every a.")] = "classify"

    jobs: Annotated[
        int,
        Field(ge=1, description="Maximum number of rows computed concurrently. Defaults to $SDDE_STAB_JOBS or 1."),
    ] = 1

    @model_validator(mode="after")
    def validate_a_values(self):
        if any(a <= 0 for a in self.a_values):
            raise ValueError("All values of a must be positive")
        if self.task != "spectrum" and any(a == 1.0 for a in self.a_values):
            raise ValueError("a = 1 is only allowed for the spectrum task")
        return self


class PresetConfig(ClassifyConfig):
    """
    Configures the `preset` command. The preset name is the first argument; the
    remaining options override the preset's defaults.
    """

    a: Annotated[
        float | None,
        Field(gt=0, description="Parameter a > 0. If None, uses the preset's default (2 for prop41, 0.5 otherwise)."),
    ] = None

    eps: Annotated[
        float | None,
        Field(description="Amplitude of the simulated admissible initial data. If None, uses the preset's default."),
    ] = None

    horizon: Annotated[
        float | None,
        Field(gt=0, description="Horizon of the preset's simulation. If None, uses the preset's default."),
    ] = None

    # The attraction configuration
    attraction: AttractionConfig = AttractionConfig()
