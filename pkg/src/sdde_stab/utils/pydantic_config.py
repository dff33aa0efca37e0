import sys
import uuid
import warnings
from pathlib import Path
from typing import Annotated, ClassVar, Type, TypeVar

import tomli
import tomli_w
from pydantic import BaseModel, ConfigDict, Field, field_validator
from pydantic_settings import BaseSettings as PydanticBaseSettings
from pydantic_settings import (
    PydanticBaseSettingsSource,
    SettingsConfigDict,
    TomlConfigSettingsSource,
)


class BaseConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    @field_validator("*", mode="before")
    @classmethod
    def empty_str_to_none(cls, v):
        """
        This allow to support setting None via toml files using the string "None"
        """
        if v == "None":
            return None
        return v


class BaseSettings(PydanticBaseSettings, BaseConfig):
    """
    Base settings class for all command configs.
    """

    # Class-level list of TOML files, set by `parse_argv` before instantiation
    # (see https://github.com/pydantic/pydantic-settings/issues/259)
    _TOML_FILES: ClassVar[list[str]] = []

    toml_files: Annotated[
        list[str] | None,
        Field(
            description="List of extra TOML files to load (paths are relative to the TOML file containing this field). If provided, will override all other config files. Note: This field is only read from within configuration files - setting --toml-files from CLI has no effect.",
            exclude=True,
        ),
    ] = None

    @classmethod
    def set_toml_files(cls, toml_files: list[str]) -> None:
        cls._TOML_FILES = toml_files

    @classmethod
    def clear_toml_files(cls) -> None:
        cls._TOML_FILES = []

    @classmethod
    def settings_customise_sources(
        cls,
        settings_cls: type["BaseSettings"],
        init_settings: PydanticBaseSettingsSource,
        env_settings: PydanticBaseSettingsSource,
        dotenv_settings: PydanticBaseSettingsSource,
        file_secret_settings: PydanticBaseSettingsSource,
    ) -> tuple[PydanticBaseSettingsSource, ...]:
        return (
            TomlConfigSettingsSource(settings_cls, toml_file=cls._TOML_FILES),
            init_settings,
            env_settings,
            dotenv_settings,
            file_secret_settings,
        )

    model_config = SettingsConfigDict(
        env_prefix="SDDE_STAB_",
        env_nested_delimiter="__",
        cli_parse_args=False,
        cli_kebab_case=True,
        cli_implicit_flags=True,
        cli_use_class_docs_for_groups=True,
        nested_model_default_partial_update=True,
    )


def check_path_and_handle_inheritance(path: Path, seen_files: list[Path], nested_key: str | None) -> bool | None:
    """
    Recursively look for inheritance in a toml file and collect all toml files to load into `seen_files`.

    Example:
        If sweep.toml has `toml_files = ["base.toml"]` and base.toml has
        `toml_files = ["model.toml"]`, `seen_files` ends up as ["sweep.toml", "base.toml", "model.toml"].
        `nested_key` (e.g. "delay") wraps the file content under that key.

    Returns:
        True if some toml inheritance is detected, False otherwise.
    """
    if path in seen_files:
        return

    if not path.exists():
        raise FileNotFoundError(f"TOML file {path} does not exist")

    with open(path, "rb") as f:
        data = tomli.load(f)

    if nested_key is not None:
        for key in reversed(nested_key.split(".")):
            data = {key: data}

        path = get_temp_toml_file()
        with open(path, "wb") as f:
            tomli_w.dump(data, f)

    seen_files.append(path)

    recurrence = False
    if "toml_files" in data:
        if nested_key is not None:
            raise NotImplementedError("Nested TOML files (`--key @ file.toml`) cannot inherit from other TOML files")
        files = [path.parent / file for file in data["toml_files"] if str(file).endswith(".toml")]
        for file in files:
            recurrence = True
            check_path_and_handle_inheritance(file, seen_files, nested_key=None)

    return recurrence


def extract_toml_paths(args: list[str]) -> tuple[list[str], list[str]]:
    """Extract `@ file.toml` and `--key @ file.toml` arguments. Returns the TOML paths and the remaining args."""
    toml_paths = []
    remaining_args = args.copy()
    recurrence = False
    cli_toml_file_count = 0
    for prev_arg, arg, next_arg in zip([""] + args[:-1], args, args[1:] + [""]):
        if arg == "@":
            toml_path = next_arg
            remaining_args.remove(arg)
            remaining_args.remove(next_arg)

            if prev_arg.startswith("--"):
                remaining_args.remove(prev_arg)
                nested_key = prev_arg.replace("--", "")
            else:
                nested_key = None

            recurrence = check_path_and_handle_inheritance(Path(toml_path), toml_paths, nested_key) or recurrence
            cli_toml_file_count += 1

    if recurrence and cli_toml_file_count > 1:
        warnings.warn(
            f"{len(toml_paths)} TOML files are added via CLI and at least one of them links to another file. This is not supported yet. Please either compose multiple config files directly via CLI or specify a single file linking to multiple other files"
        )

    return toml_paths, remaining_args


def to_kebab_case(args: list[str]) -> list[str]:
    """
    Converts CLI argument keys from snake case to kebab case. Values are left untouched.

    For example, `--grid_nodes 64` becomes `--grid-nodes 64` and `--output_dir=out_dir` becomes `--output-dir=out_dir`.
    """
    for i, arg in enumerate(args):
        if arg.startswith("--"):
            key, sep, value = arg.partition("=")
            args[i] = key.replace("_", "-") + sep + value
    return args


def join_flag_values(args: list[str]) -> list[str]:
    """
    Joins `--key value` pairs into `--key=value`, so that values starting with a dash
    (e.g. `--window -0.5,0.5,-0.5,0.5`) are not mistaken for flags.
    """
    joined = []
    i = 0
    while i < len(args):
        arg = args[i]
        has_value = i + 1 < len(args) and not args[i + 1].startswith("--")
        if arg.startswith("--") and "=" not in arg and has_value:
            joined.append(f"{arg}={args[i + 1]}")
            i += 2
        else:
            joined.append(arg)
            i += 1
    return joined


T = TypeVar("T", bound=BaseSettings)


def parse_argv(config_cls: Type[T], args: list[str] | None = None) -> T:
    """
    Parse CLI arguments and TOML configuration files into a pydantic settings instance.

    Supports loading TOML files via `@ file.toml`, or `--key @ file.toml` for a nested block.
    Automatically converts snake_case CLI args to kebab-case for pydantic compatibility.
    TOML files can inherit from other TOML files via the 'toml_files' field.

    Args:
        config_cls: A pydantic BaseSettings class to instantiate with parsed configuration.
        args: The arguments to parse. Defaults to `sys.argv[1:]`.

    Returns:
        An instance of config_cls populated with values from TOML files and CLI args.
        CLI args take precedence over TOML file values.
    """
    if args is None:
        args = sys.argv[1:]
    toml_paths, cli_args = extract_toml_paths(list(args))
    config_cls.set_toml_files(toml_paths)
    try:
        config = config_cls(_cli_parse_args=join_flag_values(to_kebab_case(cli_args)))
    finally:
        config_cls.clear_toml_files()
    return config


def get_temp_toml_file() -> Path:
    temp_uuid = str(uuid.uuid4())
    root_path = Path(".sdde_stab_config")
    root_path.mkdir(exist_ok=True)
    return root_path / f"temp_{temp_uuid}.toml"
