"""
Bilinear Equality Example

This script optimizes the alternating-sign bilinear objective over N = 20
designs with exactly 10 active entries and compares the result with brute force
and with the best of 1000 designs drawn from the uniform policy.
"""

import sys
from pathlib import Path

# Add the parent directory to the Python path to import the PBO package
sys.path.append(str(Path(__file__).parent.parent.parent))

from PBO.config.optimizer_config import REFERENCE_SEED
from PBO.core.oracle import brute_force_optimum
from PBO.core.optimizer import uniform_baseline_best
from PBO.pbo_system import ProbabilisticBinaryOptimizationSystem


def create_sample_config(output_dir: str = "output/bilinear_equality"):
    """
    Create the configuration of the example.

    Returns:
        Run configuration
    """
    return {
        "objective": {"type": "bilinear", "dimension": 20},
        "constraint": {"kind": "equality", "budget": 10},
        "optimizer": {"seed": REFERENCE_SEED},
        "output": {"directory": output_dir}
    }


def main():
    with ProbabilisticBinaryOptimizationSystem(config=create_sample_config()) as system:
        result = system.optimize()
        exact = brute_force_optimum(system.objective, system.constraint)
        uniform = uniform_baseline_best(system.objective, system.constraint, 1000, REFERENCE_SEED)

    print(f"Iterations:                 {result.iterations}")
    print(f"d* value:                   {result.design.value} ({result.design.bits})")
    print(f"Best along route:           {result.best_along_route.value} ({result.best_along_route.bits})")
    print(f"Brute-force optimum:        {exact.value} over {exact.count} designs")
    print(f"Best of 1000 uniform draws: {uniform.value}")
    print(f"Distinct evaluations:       {result.evaluations.distinct_evaluations}")


if __name__ == "__main__":
    main()
