"""
Bilinear Inclusion Example

This script optimizes the bilinear objective over N = 20 designs with at most
10 active entries, and then without any budget constraint.
"""

import sys
from pathlib import Path

# Add the parent directory to the Python path to import the PBO package
sys.path.append(str(Path(__file__).parent.parent.parent))

from PBO.core.oracle import feasible_count
from PBO.pbo_system import ProbabilisticBinaryOptimizationSystem


def create_sample_config(constraint, output_dir):
    return {
        "objective": {"type": "bilinear", "dimension": 20},
        "constraint": constraint,
        "output": {"directory": output_dir}
    }


def main():
    runs = [
        ("inclusion Z={0..10}", {"kind": "inclusion", "budget_set": list(range(11))},
         "output/bilinear_inclusion"),
        ("unconstrained", {"kind": "unconstrained"}, "output/bilinear_unconstrained")
    ]
    for label, constraint, output_dir in runs:
        with ProbabilisticBinaryOptimizationSystem(config=create_sample_config(constraint, output_dir)) as system:
            count = feasible_count(system.constraint, system.objective.dimension)
            result = system.optimize()
        print(f"{label}: {count} feasible designs, best along route {result.best_along_route.value}, "
              f"d* value {result.design.value}, {result.iterations} iterations, "
              f"explored fraction {result.evaluations.explored_fraction:.3e}")


if __name__ == "__main__":
    main()
