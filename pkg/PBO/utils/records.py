from dataclasses import dataclass, asdict, field
from typing import Any, Dict, List, Optional

import numpy as np

"""
Contains declarations for the data classes passed between the optimizer, the
system class and the artifact writers.
"""


@dataclass
class IterationRecord:
    iteration: int
    policy: List[float]
    projected_gradient: List[float]
    pgnorm: float
    baseline: float
    mean_value: float
    best_value: float
    new_evaluations: int
    cumulative_evaluations: int


@dataclass
class BestDesign:
    design: List[int]
    value: float
    key: int
    bits: str = ""

    def __post_init__(self):
        if not self.bits:
            self.bits = "".join(str(int(b)) for b in self.design)


@dataclass
class CacheStatistics:
    distinct_evaluations: int
    hits: int
    misses: int
    explored_fraction: Optional[float] = None


@dataclass
class RunResult:
    seed: int
    direction: str
    constraint: Dict[str, Any]
    iterations: int
    converged: bool
    optimal_policy: List[float]
    design: BestDesign
    best_along_route: BestDesign
    final_sample_values: List[float]
    evaluations: CacheStatistics
    dimension: int = 0
    objective: str = ""


@dataclass
class CheckOutcome:
    name: str
    passed: bool
    max_error: float
    detail: str = ""


@dataclass
class CheckReport:
    outcomes: List[CheckOutcome] = field(default_factory=list)

    @property
    def passed(self) -> int:
        return sum(1 for outcome in self.outcomes if outcome.passed)

    @property
    def failed(self) -> int:
        return len(self.outcomes) - self.passed


def deep_asdict(obj):
    if isinstance(obj, (list, tuple)):
        return [deep_asdict(i) for i in obj]
    elif isinstance(obj, dict):
        return {k: deep_asdict(v) for k, v in obj.items()}
    elif isinstance(obj, np.ndarray):
        return obj.tolist()
    elif isinstance(obj, np.generic):
        return obj.item()
    elif hasattr(obj, "__dataclass_fields__"):
        return {k: deep_asdict(v) for k, v in asdict(obj).items()}
    else:
        return obj
