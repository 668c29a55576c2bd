"""
Objective Factory

This module provides factory functions for creating objectives from the
'objective' section of a run configuration.
"""

import logging
from typing import Any, Callable, Dict, Optional

from PBO.exceptions import ConfigException
from PBO.objectives.base_objective import BaseObjective, ConstantObjective
from PBO.objectives.bilinear import BilinearObjective
from PBO.objectives.external_bridge import ExternalObjective
from PBO.objectives.trace_fim import (
    TraceFIMObjective,
    TraceFIMProblem,
    load_forward_matrix,
    synthetic_forward_matrix
)

logger = logging.getLogger(__name__)


def create_objective(config: Dict[str, Any], logger_callback: Optional[Callable] = None) -> BaseObjective:
    """
    Create an objective of the type named in the configuration.

    Args:
        config: Objective configuration with a 'type' key
        logger_callback: Callback receiving every evaluation

    Returns:
        The created objective

    Raises:
        ConfigException: If the type is unknown or a required field is missing
    """
    objective_creators = {
        "bilinear": create_bilinear_objective,
        "trace_fim": create_trace_fim_objective,
        "external": create_external_objective,
        "constant": create_constant_objective
    }

    objective_type = config.get("type")
    creator = objective_creators.get(objective_type)
    if creator:
        return creator(config, logger_callback)
    else:
        logger.error(f"Unknown objective type: {objective_type}")
        raise ConfigException(f"unknown objective type: {objective_type}")


def _require(config: Dict[str, Any], key: str) -> Any:
    if key not in config:
        raise ConfigException(f"objective '{config.get('type')}' requires field '{key}'")
    return config[key]


def create_bilinear_objective(config: Dict[str, Any], logger_callback: Optional[Callable] = None) -> BilinearObjective:
    dimension = _require(config, "dimension")
    logger.info(f"Creating bilinear objective over N={dimension}")
    return BilinearObjective(dimension, name=config.get("name", "bilinear"), logger_callback=logger_callback)


def create_trace_fim_objective(config: Dict[str, Any], logger_callback: Optional[Callable] = None) -> TraceFIMObjective:
    """
    Create a trace-of-FIM objective from a matrix file or a synthetic matrix.

    With 'matrix_file' the sensor count is 'dimension' (the rows are split
    time-major); otherwise 'dimension' sensors, 'n_times' and 'n_params' size
    a synthetic matrix.
    """
    n_sensors = _require(config, "dimension")
    if "matrix_file" in config:
        forward = load_forward_matrix(config["matrix_file"])
    else:
        forward = synthetic_forward_matrix(
            n_sensors,
            config.get("n_times", 4),
            config.get("n_params", 10),
            seed=config.get("seed", 0),
            decay=config.get("decay", 0.1)
        )
    problem = TraceFIMProblem.from_time_instances(forward, config.get("sigma", 1.0), n_sensors)
    logger.info(f"Creating trace-FIM objective: {n_sensors} sensors, forward matrix {forward.shape}")
    return TraceFIMObjective(problem, method=config.get("method", "row_sum"),
                             name=config.get("name", "trace_fim"), logger_callback=logger_callback)


def create_external_objective(config: Dict[str, Any], logger_callback: Optional[Callable] = None) -> ExternalObjective:
    command = _require(config, "command")
    dimension = _require(config, "dimension")
    logger.info(f"Creating external objective {command} over N={dimension}")
    return ExternalObjective(command, dimension, pool_size=config.get("pool_size", 1),
                             name=config.get("name", "external"), logger_callback=logger_callback)


def create_constant_objective(config: Dict[str, Any], logger_callback: Optional[Callable] = None) -> ConstantObjective:
    dimension = _require(config, "dimension")
    return ConstantObjective(dimension, config.get("value", 0.0), name=config.get("name", "constant"),
                             logger_callback=logger_callback)
