from typing import Annotated, Literal, TypeAlias

from pydantic import BaseModel, ConfigDict, Field, model_validator

from sdde_stab.utils.pydantic_config import BaseConfig


class DelayBaseConfig(BaseModel):
    """Base of the delay configs. The "kind" discriminator must not pass through a before-validator."""

    model_config = ConfigDict(extra="forbid")


class ConstantDelayConfig(DelayBaseConfig):
    """Configures the constant delay r(s) = r0."""

    kind: Literal["constant"] = "constant"

    r0: Annotated[float, Field(gt=0, description="Constant value of the delay.")] = 1.0


class RationalBumpDelayConfig(DelayBaseConfig):
    """Configures the rational bump delay r(s) = 1 / (1 + c s^2)."""

    kind: Literal["rational_bump"] = "rational_bump"

    c: Annotated[float, Field(gt=0, description="Curvature of the bump.")] = 1.0


class TableDelayConfig(DelayBaseConfig):
    """Configures a tabulated even delay function, interpolated by a C1 cubic spline in |s|."""

    kind: Literal["user_table"] = "user_table"

    s: Annotated[
        list[float],
        Field(
            min_length=2,
            description="Strictly increasing non-negative abscissae, starting at 0. The delay is extended evenly to negative s and constantly beyond the last abscissa.",
        ),
    ]

    r: Annotated[list[float], Field(min_length=2, description="Delay values at the abscissae.")]

    @model_validator(mode="after")
    def validate_table(self):
        if len(self.s) != len(self.r):
            raise ValueError("Delay table abscissae and values must have the same length")
        if self.s[0] != 0.0:
            raise ValueError("Delay table must start at s = 0")
        if any(s1 <= s0 for s0, s1 in zip(self.s, self.s[1:])):
            raise ValueError("Delay table abscissae must be strictly increasing")
        return self


DelayConfig: TypeAlias = Annotated[
    ConstantDelayConfig | RationalBumpDelayConfig | TableDelayConfig, Field(discriminator="kind")
]


class IntegratorConfig(BaseConfig):
    """Configures the fixed-step RK4 integrator with Hermite dense output."""

    step: Annotated[float, Field(gt=0, le=0.5, description="Step size of the integration grid.")] = 1e-3

    admissibility_tol: Annotated[
        float,
        Field(gt=0, description="Tolerance for the compatibility condition |phi'(0) - f(phi)| of the initial data."),
    ] = 1e-8

    neighborhood_radius: Annotated[
        float,
        Field(gt=0, description="Radius R of the domain U = {norm_c1 < R} of the right-hand side."),
    ] = 10.0

    blowup_bound: Annotated[
        float,
        Field(gt=0, description="Integration stops with status `blowup_stopped` once |x(t)| reaches this bound."),
    ] = 5.0

    residual_check: Annotated[
        bool,
        Field(description="Whether to check the residual at every step midpoint and subdivide failing steps."),
    ] = True

    residual_tol: Annotated[float, Field(gt=0, description="Residual tolerance at step midpoints.")] = 1e-6

    max_halvings: Annotated[
        int,
        Field(ge=0, description="Maximum number of step halvings before giving up with status `step_failure`."),
    ] = 3

    overlap_sweeps: Annotated[
        int,
        Field(ge=1, description="Maximum fixed-point sweeps when the delayed time falls inside the current step."),
    ] = 5

    overlap_tol: Annotated[float, Field(gt=0, description="Convergence tolerance of the overlap sweeps.")] = 1e-12


class WindowConfig(BaseConfig):
    """Configures a rectangular search window in the complex plane."""

    re_min: Annotated[float, Field(description="Left edge of the window.")] = -5.0
    re_max: Annotated[float, Field(description="Right edge of the window.")] = 2.0
    im_min: Annotated[float, Field(description="Bottom edge of the window.")] = -40.0
    im_max: Annotated[float, Field(description="Top edge of the window.")] = 40.0

    @model_validator(mode="after")
    def validate_window(self):
        if not (self.re_min < self.re_max and self.im_min < self.im_max):
            raise ValueError("Window edges must satisfy re_min < re_max and im_min < im_max")
        return self

    @classmethod
    def from_list(cls, edges: list[float]) -> "WindowConfig":
        re_min, re_max, im_min, im_max = edges
        return cls(re_min=re_min, re_max=re_max, im_min=im_min, im_max=im_max)


class SpectrumConfig(BaseConfig):
    """Configures the characteristic root search."""

    window: WindowConfig = WindowConfig()

    seed_spacing: Annotated[float, Field(gt=0, description="Spacing of the Newton seed grid.")] = 0.5

    newton_iterations: Annotated[int, Field(ge=1, description="Maximum Newton iterations per seed.")] = 50

    lambert_seeds: Annotated[
        bool,
        Field(description="Whether to add the closed-form Lambert W roots to the Newton seeds."),
    ] = True

    dedup_tol: Annotated[float, Field(gt=0, description="Roots closer than this are considered identical.")] = 1e-6

    multiplicity_radius: Annotated[
        float,
        Field(gt=0, description="Radius of the circle used to count the multiplicity of a root."),
    ] = 1e-4

    center_tol: Annotated[
        float,
        Field(ge=0, description="Roots with |Re| <= center_tol belong to the center spectrum."),
    ] = 1e-9

    contour_tol: Annotated[
        float,
        Field(gt=0, description="Minimum |Delta| on a contour before it is considered to pass through a root."),
    ] = 1e-8

    max_inflations: Annotated[
        int,
        Field(ge=0, description="How often a contour passing through a root is inflated before giving up."),
    ] = 5

    inflation: Annotated[float, Field(gt=0, description="Amount by which a contour is inflated on retry.")] = 1e-3


class ReductionConfig(BaseConfig):
    """Configures fitting the reduced center-manifold field from simulated trajectories."""

    eps_values: Annotated[
        list[float],
        Field(min_length=1, description="Amplitudes of the admissible initial data to simulate."),
    ] = [0.05, 0.1, 0.15]

    horizon: Annotated[float, Field(gt=0, description="Integration horizon T of each trajectory.")] = 100.0

    stride: Annotated[float, Field(gt=0, description="Sampling stride of the center coordinate.")] = 0.1

    transient_factor: Annotated[
        float,
        Field(ge=0, description="Samples before transient_factor / |kappa| are discarded."),
    ] = 5.0

    z_min: Annotated[float, Field(gt=0, description="Smallest amplitude |z| used in the fit.")] = 1e-4

    z_max: Annotated[float, Field(gt=0, description="Largest amplitude |z| used in the fit.")] = 1e-2

    min_samples: Annotated[int, Field(ge=2, description="Minimum number of usable samples.")] = 50

    @model_validator(mode="after")
    def validate_amplitudes(self):
        if self.z_min >= self.z_max:
            raise ValueError("z_min must be smaller than z_max")
        return self


class AttractionConfig(BaseConfig):
    """Configures the numerical check of exponential attraction towards the center manifold."""

    horizon: Annotated[float, Field(gt=0, description="Integration horizon T. The rate is fitted on [T/4, T].")] = 20.0

    samples: Annotated[int, Field(ge=3, description="Number of sample times in [T/4, T].")] = 121

    noise_floor: Annotated[
        float,
        Field(gt=0, description="Differences below this C1 norm are excluded from the rate fit."),
    ] = 1e-10

    max_initial_norm: Annotated[float, Field(gt=0, description="Largest admissible C1 norm of the initial data.")] = 0.2

    shadow: Annotated[
        Literal["phase_matched", "coordinate"],
        Field(
            description="How the shadow on the center manifold is chosen. `coordinate` matches the center coordinate at t=0, `phase_matched` matches it at t=T."
        ),
    ] = "phase_matched"


class ClassifierConfig(BaseConfig):
    """Configures the stability classification pipeline."""

    spectrum: SpectrumConfig = SpectrumConfig()

    reduction: ReductionConfig = ReductionConfig()

    integrator: IntegratorConfig = IntegratorConfig()
