from pathlib import Path
from typing import Callable

import numpy as np
import pandas as pd

from sdde_stab.classifier import StabilityVerdict, classify, decay_report, fit_growth_rate, verify_attraction
from sdde_stab.cli.config import (
    AttractConfig,
    ClassifyConfig,
    CommandConfig,
    PresetConfig,
    ReduceConfig,
    SimulateConfig,
    SpectrumCommandConfig,
)
from sdde_stab.cli.io import print_roots, write_csv, write_json
from sdde_stab.config import (
    AttractionConfig,
    ClassifierConfig,
    IntegratorConfig,
    ReductionConfig,
    SpectrumConfig,
)
from sdde_stab.errors import FitError, PreconditionError
from sdde_stab.integrator import Trajectory, integrate
from sdde_stab.model import Model, make_admissible, perturb_stable, setup_delay
from sdde_stab.projection import CenterBasis
from sdde_stab.reduction import ReducedField, center_curve, fit_reduced_field, integrate_reduced
from sdde_stab.segment import Segment
from sdde_stab.spectrum import Circle, SpectrumSplit, count_roots, find_roots, real_root_kappa
from sdde_stab.utils.logger import get_logger
from sdde_stab.utils.utils import check_writable


def build_model(config: CommandConfig, a: float | None = None) -> Model:
    model = Model(a=config.a if a is None else a, delay=setup_delay(config.delay))
    get_logger().info(f"Model a={model.a}, delay {model.delay}")
    return model


def _spectrum(a: float, spectrum: SpectrumConfig, output: Path) -> SpectrumSplit:
    split = find_roots(spectrum.window, a, spectrum)
    write_csv(split.to_frame(), output)
    print_roots(split)
    return split


def _simulate_reduction(
    model: Model, reduction: ReductionConfig, integrator: IntegratorConfig, grid_nodes: int
) -> list[Trajectory]:
    trajectories = []
    for eps in reduction.eps_values:
        traj = integrate(model, make_admissible(model, eps, n=grid_nodes), reduction.horizon, integrator)
        if not traj.completed:
            raise FitError(f"Trajectory from eps={eps} stopped with status {traj.status} at t={traj.end_time:.6g}")
        trajectories.append(traj)
    return trajectories


def _reduce(model: Model, reduction: ReductionConfig, integrator: IntegratorConfig, grid_nodes: int, output_dir: Path):
    logger = get_logger()
    logger.info(f"Simulating {len(reduction.eps_values)} trajectories to T={reduction.horizon}")
    basis = CenterBasis.from_a(model.a)
    trajectories = _simulate_reduction(model, reduction, integrator, grid_nodes)
    field = fit_reduced_field(trajectories, basis, reduction)
    write_json(field.to_dict(), output_dir / "fit.json")

    # Projected center coordinate of the largest trajectory against the fitted reduced equation
    t_lo, t_hi = field.t_window
    times = np.arange(np.ceil(t_lo / reduction.stride), np.floor(t_hi / reduction.stride) + 1) * reduction.stride
    z = center_curve(trajectories[-1], basis, times)
    curve = integrate_reduced(model.a, z[0], times[-1] - times[0], coefficient=field.c_fitted, step=reduction.stride)
    z_reduced = np.interp(times - times[0], curve.t, curve.z, right=np.nan)
    write_csv(pd.DataFrame({"t": times, "z": z, "z_reduced": z_reduced}), output_dir / "center.csv")
    logger.success(
        f"Fitted reduced coefficient {field.c_fitted:.6g} +- {field.stderr:.2g} "
        f"(analytic {field.c_analytic:.6g}, {field.n_samples} samples)"
    )
    return field


def _classify(model: Model, config: ClassifierConfig, output_dir: Path) -> StabilityVerdict:
    verdict = classify(model, config)
    write_json(verdict.to_dict(), output_dir / "verdict.json")
    if verdict.reduced is not None:
        write_json(verdict.reduced.to_dict(), output_dir / "fit.json")
    get_logger().success(f"a={model.a}: {verdict.summary()}")
    return verdict


def _attract(
    model: Model,
    eps: float,
    perturbation: float,
    config: AttractionConfig,
    integrator: IntegratorConfig,
    spectrum: SpectrumConfig,
    grid_nodes: int,
    output_dir: Path,
):
    phi = perturb_stable(model, make_admissible(model, eps, n=grid_nodes), perturbation)
    report = verify_attraction(model, phi, config, integrator, spectrum)
    write_json({"a": model.a, "eps": eps, "perturbation": perturbation, **report.to_dict()}, output_dir / "attraction.json")
    write_csv(report.to_frame(), output_dir / "attraction.csv")
    if report.trivial:
        get_logger().success("Solution already on the center manifold (distance below the noise floor)")
    else:
        get_logger().success(f"Attraction rate {report.rate:.6g} (R^2={report.r2:.4f}), |kappa|={abs(report.kappa):.6g}")
    return report


def spectrum(config: SpectrumCommandConfig) -> SpectrumSplit:
    check_writable(config.output_dir)
    split = _spectrum(config.a, config.spectrum_config(), config.output_dir / "roots.csv")
    get_logger().success(
        f"a={config.a}: {split.found} roots, |sigma_u|={len(split.sigma_u)}, "
        f"sigma_c={[(root.lam, root.multiplicity) for root in split.sigma_c]}, "
        f"rightmost stable Re={split.rightmost_stable_re}"
    )
    return split


def simulate(config: SimulateConfig) -> Trajectory:
    logger = get_logger()
    check_writable(config.output_dir)
    model = build_model(config)
    if config.initial is not None:
        if not config.initial.exists():
            raise PreconditionError(f"Initial segment file {config.initial} does not exist")
        phi = Segment.from_csv(config.initial)
    else:
        phi = make_admissible(model, config.eps, config.branch, n=config.grid_nodes)
    traj = integrate(model, phi, config.horizon, config.integrator)
    write_csv(traj.to_frame(config.stride), config.output_dir / "trajectory.csv")
    logger.success(f"Trajectory {traj.status} at t={traj.end_time:.6g}, x={traj.values[-1]:.6g}")
    return traj


def reduce(config: ReduceConfig) -> ReducedField:
    check_writable(config.output_dir)
    return _reduce(build_model(config), config.reduction, config.integrator, config.grid_nodes, config.output_dir)


def classify_command(config: ClassifyConfig) -> StabilityVerdict:
    check_writable(config.output_dir)
    return _classify(build_model(config), config.classifier_config(), config.output_dir)


def attract(config: AttractConfig):
    check_writable(config.output_dir)
    return _attract(
        build_model(config),
        config.eps,
        config.perturbation,
        config.attraction,
        config.integrator,
        config.spectrum,
        config.grid_nodes,
        config.output_dir,
    )


def preset_roots(config: PresetConfig) -> None:
    """Roots for a in {0.5, 1, 2} (or the given a) and the multiplicity of 0 on a small circle."""
    logger = get_logger()
    a_values = [0.5, 1.0, 2.0] if config.a is None else [config.a]
    spectrum = config.spectrum_config()
    zero = []
    for a in a_values:
        split = _spectrum(a, spectrum, config.output_dir / f"roots_a={a:g}.csv")
        winding = count_roots(Circle(0j, 0.1), a, spectrum)
        zero.append({"a": a, "winding_at_zero": winding, "kappa": real_root_kappa(a), "n_unstable": len(split.sigma_u)})
        logger.success(f"a={a}: {split.found} roots in the window, {winding} at 0, kappa={real_root_kappa(a)}")
    write_json({"zero_root": zero}, config.output_dir / "roots.json")


def preset_instability(config: PresetConfig) -> None:
    """Instability for a > 1: spectral verdict and exponential growth at rate kappa from a tiny seed."""
    logger = get_logger()
    model = build_model(config, 2.0 if config.a is None else config.a)
    verdict = _classify(model, config.classifier_config(), config.output_dir)
    eps = 1e-4 if config.eps is None else config.eps
    horizon = 20.0 if config.horizon is None else config.horizon
    traj = integrate(model, make_admissible(model, eps, "exponential", n=config.grid_nodes), horizon, config.integrator)
    write_csv(traj.to_frame(), config.output_dir / "trajectory.csv")
    growth = fit_growth_rate(traj)
    escaped = np.abs(traj.values) > 1e-2
    escape_time = float(traj.times[np.argmax(escaped)]) if escaped.any() else None
    write_json(
        {
            "a": model.a,
            "verdict": verdict.verdict,
            "kappa": verdict.kappa,
            "growth_rate": growth.rate,
            "r2": growth.r2,
            "relative_error": abs(growth.rate - verdict.kappa) / abs(verdict.kappa) if verdict.kappa else None,
            "escape_time": escape_time,
            "status": traj.status,
        },
        config.output_dir / "growth.json",
    )
    logger.success(f"Growth rate {growth.rate:.6g} (kappa={verdict.kappa}), |x| > 0.01 at t={escape_time}")


def preset_stability(config: PresetConfig) -> None:
    """Stability for 0 < a < 1: verdict by reduction and algebraic decay t x(t) -> 1 - a."""
    logger = get_logger()
    model = build_model(config, 0.5 if config.a is None else config.a)
    verdict = _classify(model, config.classifier_config(), config.output_dir)
    eps = 0.1 if config.eps is None else config.eps
    horizon = 200.0 if config.horizon is None else config.horizon
    traj = integrate(model, make_admissible(model, eps, n=config.grid_nodes), horizon, config.integrator)
    t0 = 0.5 * horizon
    report = decay_report(traj, t0, horizon)
    t = traj.sample_times(0.1, start=t0)
    x = traj.value(t)
    write_csv(pd.DataFrame({"t": t, "x": x, "tx": t * x}), config.output_dir / "decay.csv")
    write_json({"a": model.a, "eps": eps, "limit": 1.0 - model.a, **report.to_dict()}, config.output_dir / "decay.json")
    algebraic = verdict.kappa is not None and report.is_algebraic(verdict.kappa)
    logger.success(
        f"Mean t*x(t) on [{t0:g}, {horizon:g}] is {report.mean_tx:.6g} (limit {1.0 - model.a:g}), "
        f"power exponent {report.power_exponent:.4f}, algebraic decay: {algebraic}"
    )


def preset_reduce(config: PresetConfig) -> None:
    model = build_model(config, 0.5 if config.a is None else config.a)
    _reduce(model, config.reduction, config.integrator, config.grid_nodes, config.output_dir)


def preset_attract(config: PresetConfig) -> None:
    model = build_model(config, 0.5 if config.a is None else config.a)
    eps = 0.05 if config.eps is None else config.eps
    attraction = config.attraction
    if config.horizon is not None:
        attraction = attraction.model_copy(update={"horizon": config.horizon})
    _attract(model, eps, 0.01, attraction, config.integrator, config.spectrum_config(), config.grid_nodes, config.output_dir)


PRESETS: dict[str, Callable[[PresetConfig], None]] = {
    "prop41": preset_instability,
    "prop42": preset_stability,
    "instability": preset_instability,
    "stability": preset_stability,
    "roots": preset_roots,
    "reduce": preset_reduce,
    "attract": preset_attract,
}


def preset(name: str, config: PresetConfig) -> None:
    check_writable(config.output_dir)
    get_logger().info(f"Running preset {name}")
    PRESETS[name](config)
