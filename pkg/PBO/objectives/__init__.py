"""
Objectives Module

This module contains the black-box objectives the optimizer can be pointed at.
"""

from .base_objective import BaseObjective, ConstantObjective, FunctionObjective
from .bilinear import BilinearObjective, bilinear_eval
from .trace_fim import TraceFIMObjective, TraceFIMProblem, trace_fim_eval
from .external_bridge import ExternalObjective, external_eval
from .objective_factory import create_objective

__all__ = [
    'BaseObjective',
    'ConstantObjective',
    'FunctionObjective',
    'BilinearObjective',
    'bilinear_eval',
    'TraceFIMObjective',
    'TraceFIMProblem',
    'trace_fim_eval',
    'ExternalObjective',
    'external_eval',
    'create_objective'
]
