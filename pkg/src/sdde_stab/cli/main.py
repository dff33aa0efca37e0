import functools
import sys
import time
from typing import Callable

from pydantic import ValidationError
from pydantic_settings import SettingsError

from sdde_stab.cli.commands import PRESETS, attract, classify_command, preset, reduce, simulate, spectrum
from sdde_stab.cli.config import (
    AttractConfig,
    ClassifyConfig,
    CommandConfig,
    PresetConfig,
    ReduceConfig,
    SimulateConfig,
    SpectrumCommandConfig,
    SweepConfig,
)
from sdde_stab.cli.logger import setup_logger
from sdde_stab.cli.sweep import sweep
from sdde_stab.utils.logger import get_logger, is_logger_set, reset_logger
from sdde_stab.utils.pydantic_config import parse_argv
from sdde_stab.utils.utils import EXIT_OK, EXIT_PRECONDITION, exit_code, format_time

COMMANDS: dict[str, tuple[type[CommandConfig], Callable]] = {
    "spectrum": (SpectrumCommandConfig, spectrum),
    "simulate": (SimulateConfig, simulate),
    "reduce": (ReduceConfig, reduce),
    "classify": (ClassifyConfig, classify_command),
    "attract": (AttractConfig, attract),
    "sweep": (SweepConfig, sweep),
    "preset": (PresetConfig, preset),
}

USAGE = f"Usage: sdde-stab {{{','.join(COMMANDS)}}} [@ config.toml] [--key value ...]"


@exit_code
def execute(command: Callable, config: CommandConfig) -> None:
    # Entry points own the logger; in tests it is already installed
    owns_logger = not is_logger_set()
    if owns_logger:
        setup_logger(config.log)
    start = time.time()
    try:
        command(config)
        get_logger().info(f"Finished in {format_time(time.time() - start)}")
    finally:
        if owns_logger:
            reset_logger()


def run(argv: list[str]) -> int:
    """Runs a subcommand and returns its exit code (0 success, 2 precondition error, 3 numerical failure)."""
    logger = get_logger()
    if not argv or argv[0] not in COMMANDS:
        logger.error(f"Unknown command {argv[0] if argv else None}. {USAGE}")
        return EXIT_PRECONDITION
    name, args = argv[0], list(argv[1:])
    config_cls, command = COMMANDS[name]
    if name == "preset":
        if not args or args[0] not in PRESETS:
            logger.error(f"Unknown preset {args[0] if args else None}, choose from {', '.join(PRESETS)}")
            return EXIT_PRECONDITION
        command = functools.partial(preset, args[0])
        args = args[1:]

    try:
        config = parse_argv(config_cls, args)
    except (ValidationError, SettingsError, FileNotFoundError) as e:
        logger.error(f"Invalid configuration: {e}")
        return EXIT_PRECONDITION
    except SystemExit as e:
        # Raised by the CLI parser on --help and on unknown or malformed flags
        return EXIT_OK if e.code in (0, None) else EXIT_PRECONDITION

    return execute(command, config)


def main():
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
