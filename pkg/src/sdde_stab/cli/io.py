import json
import math
from pathlib import Path
from typing import Any

import pandas as pd
from rich.console import Console
from rich.table import Table

from sdde_stab.spectrum import SpectrumSplit
from sdde_stab.utils.logger import get_logger
from sdde_stab.utils.utils import format_num

# Enough significant digits to round-trip a float64
FLOAT_FORMAT = "%.17g"


def _finite_or_none(value: Any) -> Any:
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if isinstance(value, dict):
        return {key: _finite_or_none(v) for key, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_finite_or_none(v) for v in value]
    return value


def write_csv(df: pd.DataFrame, path: Path) -> Path:
    df.to_csv(path, index=False, float_format=FLOAT_FORMAT)
    get_logger().info(f"Wrote {len(df)} rows to {path}")
    return path


def write_json(data: dict, path: Path) -> Path:
    """Writes `data` as JSON. Non-finite floats are written as null."""
    with open(path, "w") as f:
        json.dump(_finite_or_none(data), f, indent=2)
        f.write("\n")
    get_logger().info(f"Wrote {path}")
    return path


def print_roots(split: SpectrumSplit) -> None:
    """Print the roots of a spectrum split as a rich table, rightmost first."""
    console = Console()
    table = Table(title=f"Characteristic roots ({split.found} with multiplicity)")
    table.add_column("Re", justify="right", style="magenta")
    table.add_column("Im", justify="right", style="magenta")
    table.add_column("Multiplicity", justify="center")
    table.add_column("Class", justify="center")
    for root in split.roots:
        table.add_row(format_num(root.lam.real, 6), format_num(root.lam.imag, 6), str(root.multiplicity), root.klass)
    console.print(table)


def print_sweep(df: pd.DataFrame) -> None:
    """Print the sweep summary as rich table, one row per value of a."""
    console = Console()
    table = Table(title="Sweep")
    for col in df.columns:
        table.add_column(col, justify="center", style="magenta" if col != "error" else "red")
    for _, row in df.iterrows():
        cells = []
        for value in row:
            if isinstance(value, float):
                cells.append(format_num(value))
            else:
                cells.append("-" if value is None else str(value))
        table.add_row(*cells)
    console.print(table)
