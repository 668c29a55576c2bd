"""
Probabilistic Binary Optimization

Budget-constrained black-box binary optimization by projected stochastic
gradient ascent on the success probabilities of (generalized) conditional
Bernoulli policies, together with the exact probability models, samplers,
objectives and brute-force oracles the optimizer is verified against.
"""

__version__ = "0.1.0"

# Lazy import to avoid circular dependencies
def get_system_class():
    """Get the ProbabilisticBinaryOptimizationSystem class with lazy import."""
    from .pbo_system import ProbabilisticBinaryOptimizationSystem
    return ProbabilisticBinaryOptimizationSystem

__all__ = [
    'get_system_class'
]
