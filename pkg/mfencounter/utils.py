# -*- coding: utf-8 -*-
import logging

import configparser
import os
import sys
import tempfile
from pathlib import Path
from typing import List, Any, Callable, Optional, Union

# Logging
logging.basicConfig()
logger = logging.getLogger("MfEncounter")

PATH_CONFIG_DEFAULT = "config.default.ini"
PATH_CONFIG_USER = "config.ini"

path = Path(__file__).parents[0]
default_config_file_path = path.joinpath(PATH_CONFIG_DEFAULT).absolute().__str__()
custom_config_file_path = path.joinpath(PATH_CONFIG_USER).absolute().__str__()


# Constants
TOOLKIT_VERSION = "1.0.20241016"
degree_sign = "\N{DEGREE SIGN}"


# --------- Errors ---------
class MfEncounterError(Exception):
    """
    Base class of all errors raised by the toolkit
    """


class InvalidStateError(MfEncounterError, ValueError):
    """
    An aircraft state holds a non-finite component
    """


class InfeasibleGeometryError(MfEncounterError):
    """
    No intruder heading produces a collision for the requested geometry
    """


class PreconditionError(MfEncounterError, ValueError):
    """
    An operation was called with inputs outside its domain (empty lists, mismatched sizes, ...)
    """


class DegenerateLikelihoodError(MfEncounterError):
    """
    Every weight combination has a total log-probability of -inf
    """


class ConfigurationError(MfEncounterError):
    """
    A configuration value is missing, malformed or out of range
    """


# --------- Config ---------
def read_config(
    extra_files: Union[None, str, List[str]] = None
) -> configparser.ConfigParser:
    """
    Read the default config, the optional user config next to it and any extra files.
    Later files override earlier ones.

    :param extra_files: additional config file(s), e.g. passed with `--config`
    :return: the merged config
    """
    config = configparser.ConfigParser()
    files = [default_config_file_path, custom_config_file_path]
    if isinstance(extra_files, str):
        extra_files = [extra_files]
    for extra_file in extra_files or []:
        if not Path(extra_file).is_file():
            raise ConfigurationError(f"Config file {extra_file} does not exist")
        files.append(extra_file)
    config.read(files, encoding="utf-8")
    return config


config = read_config()


def _get_list_from_config(
    group: str,
    option: str,
    mapper: Callable[[Any], Any] = lambda v: v,
    cfg: Optional[configparser.ConfigParser] = None,
) -> List[Any]:
    cfg = cfg if cfg is not None else config
    rawList = cfg[group][option].split(",")
    return list(
        map(
            mapper,
            [item.strip() for item in rawList if item.strip() != "" and item is not None],
        )
    )


def get_option(
    cfg: configparser.ConfigParser,
    group: str,
    option: str,
    mapper: Callable[[str], Any] = str,
) -> Any:
    """
    Read a single option and convert it, raising `ConfigurationError` with the offending key.

    :param cfg: the config to read from
    :param group: section name
    :param option: key name (field name of the settings type)
    :param mapper: conversion applied to the raw string
    :return: the converted value
    """
    try:
        return mapper(cfg[group][option].strip())
    except KeyError:
        raise ConfigurationError(f"Missing config value [{group}] {option}")
    except ValueError as e:
        raise ConfigurationError(
            f"Invalid config value [{group}] {option} = {cfg[group][option]!r}: {e}"
        )


def get_list_option(
    cfg: configparser.ConfigParser,
    group: str,
    option: str,
    mapper: Callable[[str], Any] = str,
) -> List[Any]:
    try:
        return _get_list_from_config(group, option, mapper, cfg)
    except KeyError:
        raise ConfigurationError(f"Missing config value [{group}] {option}")
    except ValueError as e:
        raise ConfigurationError(
            f"Invalid config list [{group}] {option} = {cfg[group][option]!r}: {e}"
        )


def set_log_level(level: Optional[str]) -> None:
    """
    Set the logger level from a name, falling back to INFO like the config handling does
    """
    level = (level or "INFO").upper()
    if level == "ERROR":
        logger.setLevel(logging.ERROR)
    elif level == "WARNING":
        logger.setLevel(logging.WARNING)
    elif level == "DEBUG":
        logger.setLevel(logging.DEBUG)
    else:
        logger.setLevel(logging.INFO)


# get logging level from config file
set_log_level(config["DEFAULT"].get("LOGGING", "INFO"))


# --------- Functions ---------
def constrain(val, min_val, max_val):
    if min_val > max_val:
        min_val, max_val = max_val, min_val
    return min(max_val, max(min_val, val))


def log_exception(prefix: str = "Exception occurred") -> None:
    """
    Log the exception currently being handled with its type, file and line
    """
    (
        exception_type,
        exception_object,
        exception_traceback,
    ) = sys.exc_info()
    while exception_traceback is not None and exception_traceback.tb_next is not None:
        exception_traceback = exception_traceback.tb_next
    file = (
        exception_traceback.tb_frame.f_code.co_filename
        if exception_traceback is not None
        else "?"
    )
    line = exception_traceback.tb_lineno if exception_traceback is not None else "?"
    logger.error(
        f">>> ERROR: {prefix}: "
        + f"{repr(exception_object)} of type {exception_type} in {file} line #{line}"
    )


def write_text_atomic(file_path: Union[str, Path], text: str) -> None:
    """
    Write `text` to a temp file in the target directory and rename it into place,
    so readers never see a partially written file.
    """
    file_path = Path(file_path)
    file_path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_path = tempfile.mkstemp(
        prefix="." + file_path.name + ".", suffix=".tmp", dir=file_path.parent
    )
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as f:
            f.write(text)
        os.replace(tmp_path, file_path)
    except BaseException:
        if os.path.exists(tmp_path):
            os.remove(tmp_path)
        raise
