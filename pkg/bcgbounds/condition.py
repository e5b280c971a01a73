#!/usr/bin/env python

"""
Handle run conditions.
"""

from copy import deepcopy
from enum import Enum
from importlib import resources
from pathlib import Path
from pprint import pformat

from hydra import compose, initialize_config_dir
from omegaconf import DictConfig, OmegaConf

from . import data
from .const import Default, SigmaPolicy, StrPath, Variant


CONDTYPE_CLASS: dict[str, type[Enum]] = {
    "variant": Variant,
    "sigma": SigmaPolicy,
}

CONDITION = DictConfig(
    {
        "solver": {
            "variant": Default.VARIANT,
            "max_iter": Default.MAX_ITER,
            "tol": Default.TOL,
            "mu": None,
            "mu_auto": False,
            "delay": Default.DELAY,
            "sigma": Default.SIGMA,
            "recompute_interval": Default.RECOMPUTE_INTERVAL,
            "reorth": True,
        },
        "problem": {
            "poisson": None,
            "matrix": None,
            "m": Default.BLOCK_SIZE,
            "seed": Default.SEED,
        },
        "dirs": {
            "result": "result",
            "matrices": "matrices",
        },
    }
)
DEFAULT_CONDITION = deepcopy(CONDITION)


def _cast_enums(solver: DictConfig | dict) -> None:
    for key, enum_cls in CONDTYPE_CLASS.items():
        if isinstance(value := solver.get(key), str):
            solver[key] = enum_cls[value]


def reset_condition() -> None:
    """Back to the built-in defaults (each CLI invocation starts here)."""
    CONDITION.merge_with(deepcopy(DEFAULT_CONDITION))


def set_condition(condition_path: StrPath) -> None:
    condition_path = Path(condition_path).resolve()
    if not condition_path.is_file():
        raise FileNotFoundError(f"condition file not found: {condition_path}")
    with initialize_config_dir(
        version_base=None, config_dir=condition_path.parent.as_posix()
    ):
        overriding = compose(config_name=condition_path.stem)
        # cast from str to Enum.
        OmegaConf.set_struct(overriding, False)
        if isinstance(solver := overriding.get("solver"), DictConfig):
            _cast_enums(solver)
        OmegaConf.set_struct(overriding, True)
    CONDITION.merge_with(overriding)
    print(f"CONDITION: {pformat(OmegaConf.to_container(CONDITION), sort_dicts=False)}")


def apply_overrides(overrides: dict[str, dict]) -> None:
    """Merge command-line values over CONDITION; None means 'not given'."""
    given = {
        section: {k: v for k, v in values.items() if v is not None}
        for section, values in overrides.items()
    }
    if isinstance(solver := given.get("solver"), dict):
        _cast_enums(solver)
    # a matrix file and a mesh size exclude each other
    problem = given.get("problem", {})
    if problem.get("matrix") is not None:
        problem["poisson"] = None
    elif problem.get("poisson") is not None:
        problem["matrix"] = None
    CONDITION.merge_with(given)


def load_experiments() -> DictConfig:
    """Settings of the reproduction experiments keyed by `Experiment` name."""
    with resources.as_file(resources.files(data).joinpath("experiments.yaml")) as path:
        experiments = OmegaConf.load(path)
    for settings in experiments.values():
        _cast_enums(settings)
    return experiments
