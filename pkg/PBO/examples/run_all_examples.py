"""
Run All Examples Script

This script runs the example scripts in sequence. Pass example names to run a
subset, e.g. `python run_all_examples.py bilinear_equality sensor_placement`.
The N = 500 run is only included when named explicitly or with --all.
"""

import sys
import time
import importlib.util
from pathlib import Path

EXAMPLES = ["bilinear_equality", "bilinear_inclusion", "sensor_placement"]
LONG_EXAMPLES = ["large_dimension"]


def import_module_from_path(module_name, file_path):
    """
    Import a module from a file path.

    Args:
        module_name: Name to give the module
        file_path: Path to the module file

    Returns:
        Imported module
    """
    module_spec = importlib.util.spec_from_file_location(module_name, file_path)
    module = importlib.util.module_from_spec(module_spec)
    sys.modules[module_name] = module
    module_spec.loader.exec_module(module)
    return module


def run_example(example_name, file_path) -> float:
    """Run one example and return its wall time in seconds."""
    print("\n" + "=" * 80)
    print(f"Running example: {example_name}")
    print("=" * 80 + "\n")

    started = time.perf_counter()
    module = import_module_from_path(f"example_{example_name}", file_path)
    module.main()
    elapsed = time.perf_counter() - started

    print("\n" + "-" * 80)
    print(f"Example {example_name} completed in {elapsed:.1f} s.")
    print("-" * 80 + "\n")
    return elapsed


def select_examples(args):
    if not args:
        return list(EXAMPLES)
    if args == ["--all"]:
        return EXAMPLES + LONG_EXAMPLES
    unknown = [name for name in args if name not in EXAMPLES + LONG_EXAMPLES]
    if unknown:
        raise SystemExit(f"unknown example(s): {', '.join(unknown)}")
    return args


def main(args=None):
    print("Probabilistic Binary Optimization - Run All Examples")

    examples_dir = Path(__file__).parent
    failed = []
    for example_name in select_examples(sys.argv[1:] if args is None else args):
        try:
            run_example(example_name, examples_dir / f"{example_name}.py")
        except Exception as e:
            print(f"Example {example_name} failed: {e}")
            failed.append(example_name)

    if failed:
        print(f"\n{len(failed)} example(s) failed: {', '.join(failed)}")
        return 1
    print("\nAll examples completed successfully.")
    return 0


if __name__ == "__main__":
    sys.exit(main())
