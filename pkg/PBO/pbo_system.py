"""
Probabilistic Binary Optimization System

This module provides the main system class of the package. It loads and
validates a run configuration, sets up logging, builds the objective and the
constraint, runs one of the commands (optimize, brute force, sample, check)
and writes its artifacts.
"""

import copy
import json
import logging
import os
import time
from typing import Any, Dict, Optional

import jsonschema
import pandas as pd
from dotenv import load_dotenv

from PBO.config.optimizer_config import DEFAULT_RUN_CONFIG, RUN_CONFIG_SCHEMA, THREADS_ENV_VAR
from PBO.core import optimizer
from PBO.core.distributions import SuccessProbabilities
from PBO.core.optimizer import ConstraintSpec, OptimizerConfig, OptimizerTrace, policy_model
from PBO.core.oracle import brute_force_table, feasible_count, run_check_suite
from PBO.core.sampling import RandomStream, SampleBatch, sample_model
from PBO.exceptions import ConfigException, PBOException
from PBO.objectives.base_objective import BaseObjective
from PBO.objectives.objective_factory import create_objective
from PBO.utils.logging_utils import RunLogger, setup_logging
from PBO.utils.records import CheckReport, RunResult, deep_asdict

logger = logging.getLogger(__name__)


def merge_config(defaults: Dict[str, Any], overrides: Dict[str, Any]) -> Dict[str, Any]:
    """Recursively merge overrides into a copy of defaults."""
    merged = copy.deepcopy(defaults)
    for key, value in overrides.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = merge_config(merged[key], value)
        else:
            merged[key] = copy.deepcopy(value)
    return merged


def validate_config(config: Dict[str, Any]) -> None:
    """
    Validate a run configuration against the schema.

    Raises:
        ConfigException: Naming the offending field
    """
    try:
        jsonschema.validate(config, RUN_CONFIG_SCHEMA)
    except jsonschema.ValidationError as err:
        location = ".".join(str(part) for part in err.absolute_path) or "<root>"
        raise ConfigException(f"invalid configuration at {location}: {err.message}") from err


class ProbabilisticBinaryOptimizationSystem:
    """
    Main system class for budget-constrained probabilistic binary optimization.

    Usable programmatically or through the ``pbo`` command line; every command
    writes its artifacts below the output directory.
    """

    def __init__(self,
                 config_path: Optional[str] = "config.json",
                 config: Optional[Dict[str, Any]] = None,
                 seed: Optional[int] = None,
                 threads: Optional[int] = None,
                 out: Optional[str] = None,
                 configure_logging: bool = True):
        """
        Initialize the system.

        Args:
            config_path: Path to the JSON run configuration
            config: Configuration dictionary used instead of a file
            seed: Seed overriding the configured one
            threads: Evaluation threads; overrides the environment and the file
            out: Output directory overriding the configured one
            configure_logging: Whether to configure the root logger
        """
        load_dotenv()
        raw = config if config is not None else self._load_config(config_path)
        validate_config(raw)
        self.config = merge_config(DEFAULT_RUN_CONFIG, raw)

        log_config = self.config["logging"]
        if configure_logging:
            setup_logging(
                log_dir=log_config["log_dir"],
                log_level=log_config["log_level"],
                log_to_file=log_config["log_to_file"]
            )

        optimizer_settings = self.config["optimizer"]
        if seed is not None:
            optimizer_settings["seed"] = int(seed)
        optimizer_settings["threads"] = self._resolve_threads(threads, optimizer_settings["threads"])
        if out is not None:
            self.config["output"]["directory"] = out

        self.optimizer_config = OptimizerConfig.from_dict(
            {**optimizer_settings, "enumeration_cap": self.config["enumeration_cap"]})
        self.constraint = ConstraintSpec.from_dict(self.config["constraint"])
        self.output_dir = self.config["output"]["directory"]
        self.objective: BaseObjective = create_objective(self.config["objective"])
        self.constraint.validate(self.objective.dimension)

        self.run_logger: Optional[RunLogger] = None
        if log_config["event_log"]:
            self.run_logger = RunLogger(log_dir=log_config["log_dir"])

        logger.info(f"Initialized system: objective={self.objective.name}, N={self.objective.dimension}, "
                    f"constraint={self.constraint.to_dict()}, seed={self.optimizer_config.seed}")

    def _load_config(self, config_path: str) -> Dict[str, Any]:
        """
        Load the configuration from a JSON file.

        Raises:
            ConfigException: If the file is missing or not valid JSON
        """
        try:
            with open(config_path, 'r') as f:
                config = json.load(f)
        except (OSError, json.JSONDecodeError) as e:
            logger.error(f"Error loading configuration: {e}")
            raise ConfigException(f"cannot load configuration {config_path}: {e}") from e
        logger.info(f"Loaded configuration from {config_path}")
        return config

    def _resolve_threads(self, flag: Optional[int], configured: int) -> int:
        if flag is not None:
            return int(flag)
        env_value = os.getenv(THREADS_ENV_VAR)
        if env_value:
            try:
                return int(env_value)
            except ValueError as err:
                raise ConfigException(f"{THREADS_ENV_VAR} must be an integer, got {env_value!r}") from err
        return configured

    def _output_path(self, key: str) -> str:
        os.makedirs(self.output_dir, exist_ok=True)
        return os.path.join(self.output_dir, self.config["output"][key])

    def optimize(self) -> RunResult:
        """
        Run the optimizer and write the trace and result files.

        Returns:
            The result record written to the result file
        """
        dimension = self.objective.dimension
        start = time.perf_counter()
        trace = optimizer.run(
            self.objective,
            self.constraint,
            self.optimizer_config,
            run_logger=self.run_logger,
            feasible_count=feasible_count(self.constraint, dimension)
        )
        elapsed = time.perf_counter() - start

        result = RunResult(
            seed=self.optimizer_config.seed,
            direction=self.optimizer_config.direction,
            constraint=self.constraint.to_dict(),
            iterations=trace.iterations,
            converged=trace.converged,
            optimal_policy=trace.optimal_policy.tolist(),
            design=trace.design,
            best_along_route=trace.best_along_route,
            final_sample_values=trace.final_sample.objective_values.tolist(),
            evaluations=trace.cache_statistics,
            dimension=dimension,
            objective=self.objective.name
        )
        # Reproducible artifacts only; timing goes to the log
        self.write_trace(trace, self._output_path("trace_file"))
        self.write_result(result, self._output_path("result_file"))

        logger.info(f"Explored fraction of the feasible region: {trace.cache_statistics.explored_fraction:.3e}")
        logger.info(f"Wall time: {elapsed:.2f} s")
        return result

    def write_trace(self, trace: OptimizerTrace, path: str) -> None:
        dimension = self.objective.dimension
        rows = []
        for record in trace.records:
            row = {
                "iteration": record.iteration,
                "pgnorm": record.pgnorm,
                "baseline": record.baseline,
                "mean_J": record.mean_value,
                "best_J": record.best_value,
                "new_evals": record.new_evaluations
            }
            row.update({f"p_{i}": record.policy[i] for i in range(dimension)})
            rows.append(row)
        columns = ["iteration", "pgnorm", "baseline", "mean_J", "best_J", "new_evals"]
        columns += [f"p_{i}" for i in range(dimension)]
        frame = pd.DataFrame(rows, columns=columns)
        frame.to_csv(path, index=False, float_format="%.17g", lineterminator="\n")
        logger.info(f"Wrote trace with {len(frame)} iterations to {path}")

    def write_result(self, result: RunResult, path: str) -> None:
        with open(path, 'w', newline="\n") as f:
            f.write(json.dumps(deep_asdict(result), indent=2, sort_keys=True))
            f.write("\n")
        logger.info(f"Wrote result to {path}")

    def brute_force(self) -> pd.DataFrame:
        """
        Evaluate every feasible design and write the (index, value) table.

        Returns:
            The table in ascending index order
        """
        table = brute_force_table(self.objective, self.constraint, cap=self.config["enumeration_cap"])
        path = self._output_path("brute_force_file")
        table.to_csv(path, index=False, float_format="%.17g", lineterminator="\n")
        if self.optimizer_config.direction == "maximize":
            optimum = table["value"].max()
        else:
            optimum = table["value"].min()
        logger.info(f"Brute force: {len(table)} feasible designs, optimum {optimum}; wrote {path}")
        return table

    def sample(self) -> SampleBatch:
        """
        Draw designs from the initial policy under the constraint and write them.

        Raises:
            PBOException: If a drawn design violates the constraint
        """
        dimension = self.objective.dimension
        policy = SuccessProbabilities(self.optimizer_config.initial_policy(dimension))
        model = policy_model(policy, self.constraint, self.optimizer_config.enumeration_cap)
        size = self.config["sampling"]["size"]
        batch = sample_model(model, size, RandomStream(self.optimizer_config.seed))
        budgets = self.constraint.budgets(dimension)
        if not batch.satisfies(budgets):
            logger.error("Sampled designs violate the constraint")
            raise PBOException(f"sampled designs violate the budgets {budgets}")

        frame = pd.DataFrame({
            "index": batch.keys(),
            "bits": ["".join(str(int(b)) for b in d) for d in batch.designs],
            "ones": batch.designs.sum(axis=1).astype(int)
        })
        path = self._output_path("sample_file")
        frame.to_csv(path, index=False, lineterminator="\n")
        logger.info(f"Sampled {batch.size} designs, all within budgets {budgets}; wrote {path}")
        return batch

    def check(self) -> CheckReport:
        """Run the derivative and normalization check suite and write pass/fail counts."""
        settings = self.config["check"]
        report = run_check_suite(
            instances=settings["instances"],
            dimension=settings["dimension"],
            seed=self.optimizer_config.seed,
            step=settings["step"],
            tolerance=settings["tolerance"]
        )
        summary = {
            "passed": report.passed,
            "failed": report.failed,
            "failures": [deep_asdict(outcome) for outcome in report.outcomes if not outcome.passed]
        }
        path = self._output_path("check_file")
        with open(path, 'w', newline="\n") as f:
            f.write(json.dumps(summary, indent=2, sort_keys=True))
            f.write("\n")
        if report.failed:
            logger.warning(f"Check suite: {report.failed} of {len(report.outcomes)} checks failed")
        return report

    def close(self) -> None:
        self.objective.close()

    def __enter__(self) -> "ProbabilisticBinaryOptimizationSystem":
        return self

    def __exit__(self, *exc_info) -> None:
        self.close()

    def get_config(self) -> Dict[str, Any]:
        return self.config
