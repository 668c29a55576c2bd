"""
Configuration Module

This module contains default settings and the run configuration schema for the
probabilistic binary optimization package.
"""

from .optimizer_config import (
    DEFAULT_OPTIMIZER_CONFIG,
    DEFAULT_RUN_CONFIG,
    RUN_CONFIG_SCHEMA,
    DEGENERACY_EPSILON,
    LOG_SPACE_MIN_DIMENSION,
    LOG_SPACE_WEIGHT_RATIO,
    DEFAULT_ENUMERATION_CAP,
    REFERENCE_SEED,
    THREADS_ENV_VAR
)

__all__ = [
    'DEFAULT_OPTIMIZER_CONFIG',
    'DEFAULT_RUN_CONFIG',
    'RUN_CONFIG_SCHEMA',
    'DEGENERACY_EPSILON',
    'LOG_SPACE_MIN_DIMENSION',
    'LOG_SPACE_WEIGHT_RATIO',
    'DEFAULT_ENUMERATION_CAP',
    'REFERENCE_SEED',
    'THREADS_ENV_VAR'
]
