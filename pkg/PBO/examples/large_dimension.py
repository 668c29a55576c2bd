"""
Large Dimension Example

This script runs the bilinear objective over N = 500 designs with exactly 10
active entries, a feasible region far too large to enumerate, and reports the
fraction of it the optimizer evaluated.
"""

import sys
from pathlib import Path

# Add the parent directory to the Python path to import the PBO package
sys.path.append(str(Path(__file__).parent.parent.parent))

from PBO.pbo_system import ProbabilisticBinaryOptimizationSystem


def main(max_iterations: int = 500):
    config = {
        "objective": {"type": "bilinear", "dimension": 500},
        "constraint": {"kind": "equality", "budget": 10},
        "optimizer": {"max_iterations": max_iterations},
        "output": {"directory": "output/large_dimension"}
    }
    with ProbabilisticBinaryOptimizationSystem(config=config) as system:
        result = system.optimize()

    explored = result.evaluations.explored_fraction
    print(f"Best along route: {result.best_along_route.value}, d* value {result.design.value}")
    print(f"Distinct evaluations: {result.evaluations.distinct_evaluations} "
          f"({100 * explored:.3e} % of the feasible region)")


if __name__ == "__main__":
    main()
