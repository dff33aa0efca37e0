import functools
from datetime import timedelta
from pathlib import Path

from pydantic import ValidationError

from sdde_stab.errors import NumericalError, PreconditionError
from sdde_stab.utils.logger import get_logger

EXIT_OK = 0
EXIT_PRECONDITION = 2
EXIT_NUMERICAL = 3


def exit_code(func):
    """
    A decorator that turns the known failure modes of a command into process
    exit codes: 0 on success, 2 on precondition (and config) errors and 3 on
    numerical failures. Anything else propagates.

    Args:
        func: The command function to decorate. Its return value is ignored.

    Returns:
        The decorated function, returning an exit code.
    """

    @functools.wraps(func)
    def wrapper(*args, **kwargs) -> int:
        logger = get_logger()
        try:
            func(*args, **kwargs)
            return EXIT_OK
        except (PreconditionError, ValidationError) as e:
            logger.error(f"Precondition violated: {e}")
            return EXIT_PRECONDITION
        except NumericalError as e:
            logger.error(f"Numerical failure: {e}")
            return EXIT_NUMERICAL

    return wrapper


def check_writable(path: Path) -> None:
    """Create `path` if needed and make sure files can be written into it."""
    try:
        path.mkdir(parents=True, exist_ok=True)
        probe = path / ".write_probe"
        probe.touch()
        probe.unlink()
    except OSError as e:
        raise PreconditionError(f"Output directory {path} is not writable ({e})") from e


def format_time(time_in_seconds: float) -> str:
    """Format a time in seconds to a human-readable format."""
    td = timedelta(seconds=time_in_seconds)
    hours, remainder = divmod(td.seconds + td.days * 86400, 3600)
    minutes, seconds = divmod(remainder, 60)

    if hours > 0:
        return f"{hours + minutes / 60:.2f}h"
    elif minutes > 0:
        return f"{minutes + seconds / 60:.2f}m"
    else:
        total_seconds = seconds + td.microseconds / 1_000_000
        return f"{total_seconds:.2f}s"


def format_num(num: float | int | None, precision: int = 4) -> str:
    """
    Format a number for console tables. Small and large magnitudes switch to
    scientific notation, missing values are shown as a dash.
    """
    if num is None or num != num:
        return "-"
    if isinstance(num, int):
        return str(num)
    if num == 0 or 1e-3 <= abs(num) < 1e4:
        return f"{num:.{precision}f}"
    return f"{num:.{precision}e}"
