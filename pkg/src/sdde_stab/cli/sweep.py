from concurrent.futures import ProcessPoolExecutor

import pandas as pd

from sdde_stab.classifier import classify
from sdde_stab.cli.config import SweepConfig
from sdde_stab.cli.io import print_sweep, write_csv
from sdde_stab.errors import StabilityError
from sdde_stab.model import Model, setup_delay
from sdde_stab.spectrum import find_roots, real_root_kappa
from sdde_stab.utils.logger import get_logger
from sdde_stab.utils.utils import check_writable

SWEEP_COLUMNS = ["a", "verdict", "kappa", "c_fitted", "decay_limit", "n_unstable", "rightmost_stable_re", "error"]


def sweep_row(a: float, config: SweepConfig) -> dict:
    """Runs the sweep task for one value of a. Failures are recorded in the row, not raised."""
    row = dict.fromkeys(SWEEP_COLUMNS)
    row["a"] = a
    try:
        if config.task == "spectrum":
            spectrum = config.spectrum_config()
            split = find_roots(spectrum.window, a, spectrum)
            row["kappa"] = real_root_kappa(a)
        else:
            verdict = classify(Model(a=a, delay=setup_delay(config.delay)), config.classifier_config())
            split = verdict.split
            row["verdict"] = verdict.verdict
            row["kappa"] = verdict.kappa
            if verdict.reduced is not None:
                row["c_fitted"] = verdict.reduced.c_fitted
            if verdict.decay is not None:
                row["decay_limit"] = verdict.decay.mean_tx
        row["n_unstable"] = sum(root.multiplicity for root in split.sigma_u)
        row["rightmost_stable_re"] = split.rightmost_stable_re
    except StabilityError as e:
        row["error"] = f"{type(e).__name__}: {e}"
    return row


def sweep(config: SweepConfig) -> pd.DataFrame:
    """
    Run the sweep task for every value of a, concurrently in up to `jobs` processes.
    Rows keep the order of `a_values`.
    """
    logger = get_logger()
    check_writable(config.output_dir)
    n = len(config.a_values)
    logger.info(f"Sweeping {config.task} over {n} values of a with {min(config.jobs, max(n, 1))} job(s)")
    if config.jobs == 1 or n <= 1:
        rows = [sweep_row(a, config) for a in config.a_values]
    else:
        with ProcessPoolExecutor(max_workers=min(config.jobs, n)) as executor:
            rows = list(executor.map(sweep_row, config.a_values, [config] * n))

    df = pd.DataFrame(rows, columns=SWEEP_COLUMNS)
    write_csv(df, config.output_dir / "sweep.csv")
    print_sweep(df)
    failed = int(df["error"].notna().sum())
    logger.success(f"Sweep finished: {n - failed} of {n} rows succeeded")
    return df
