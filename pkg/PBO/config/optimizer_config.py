"""
Optimizer Configuration

This module provides the default settings of the optimizer, the run
configuration layout accepted by the command-line front end, and the
numerical thresholds used by the probability models.
"""

# Probabilities within this distance of 0 or 1 are snapped onto the boundary
DEGENERACY_EPSILON = 1e-12

# Tabulation switches to log space above this many weights ...
LOG_SPACE_MIN_DIMENSION = 64
# ... or when max(w) / min(w) exceeds this ratio
LOG_SPACE_WEIGHT_RATIO = 1e8

# Largest dimension the exhaustive oracles will enumerate
DEFAULT_ENUMERATION_CAP = 24

# Seed pinned for the reproducible bilinear reference run
REFERENCE_SEED = 1

# Environment variable overriding the number of evaluation threads
THREADS_ENV_VAR = "PBO_THREADS"

DEFAULT_OPTIMIZER_CONFIG = {
    "learning_rate": 0.25,
    "sample_size": 100,
    "max_iterations": 500,
    "pgtol": 1e-8,
    "final_sample_size": 100,
    "direction": "maximize",
    "seed": REFERENCE_SEED,
    "baseline": True,
    "initial_p": 0.5,
    "decay": "none",
    "threads": 1
}

DEFAULT_OUTPUT_CONFIG = {
    "directory": "output",
    "trace_file": "trace.csv",
    "result_file": "result.json",
    "brute_force_file": "brute_force.csv",
    "sample_file": "samples.csv",
    "check_file": "check.json"
}

DEFAULT_SAMPLING_CONFIG = {
    "size": 1000
}

DEFAULT_CHECK_CONFIG = {
    "instances": 50,
    "dimension": 6,
    "step": 1e-6,
    "tolerance": 1e-5
}

DEFAULT_LOGGING_CONFIG = {
    "log_dir": "logs",
    "log_level": "INFO",
    "log_to_file": False,
    "event_log": False
}

DEFAULT_RUN_CONFIG = {
    "constraint": {"kind": "unconstrained"},
    "optimizer": DEFAULT_OPTIMIZER_CONFIG,
    "output": DEFAULT_OUTPUT_CONFIG,
    "sampling": DEFAULT_SAMPLING_CONFIG,
    "check": DEFAULT_CHECK_CONFIG,
    "enumeration_cap": DEFAULT_ENUMERATION_CAP,
    "logging": DEFAULT_LOGGING_CONFIG
}

_POSITIVE_INT = {"type": "integer", "minimum": 1}

RUN_CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["objective"],
    "properties": {
        "objective": {
            "type": "object",
            "additionalProperties": False,
            "required": ["type"],
            "properties": {
                "type": {"enum": ["bilinear", "trace_fim", "external", "constant"]},
                "name": {"type": "string"},
                "dimension": _POSITIVE_INT,
                "value": {"type": "number"},
                "sigma": {"type": "number", "exclusiveMinimum": 0},
                "n_times": _POSITIVE_INT,
                "n_params": _POSITIVE_INT,
                "decay": {"type": "number", "minimum": 0},
                "seed": {"type": "integer", "minimum": 0},
                "matrix_file": {"type": "string"},
                "method": {"enum": ["row_sum", "pinv"]},
                "command": {"type": "array", "items": {"type": "string"}, "minItems": 1},
                "pool_size": _POSITIVE_INT
            }
        },
        "constraint": {
            "type": "object",
            "additionalProperties": False,
            "required": ["kind"],
            "properties": {
                "kind": {"enum": ["equality", "inclusion", "unconstrained"]},
                "budget": {"type": "integer", "minimum": 0},
                "budget_set": {
                    "type": "array",
                    "items": {"type": "integer", "minimum": 0},
                    "minItems": 1
                }
            }
        },
        "optimizer": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "learning_rate": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
                "sample_size": _POSITIVE_INT,
                "max_iterations": _POSITIVE_INT,
                "pgtol": {"type": "number", "minimum": 0},
                "final_sample_size": _POSITIVE_INT,
                "direction": {"enum": ["maximize", "minimize"]},
                "seed": {"type": "integer", "minimum": 0},
                "baseline": {"type": "boolean"},
                "initial_p": {
                    "oneOf": [
                        {"type": "number", "minimum": 0, "maximum": 1},
                        {"type": "array", "items": {"type": "number", "minimum": 0, "maximum": 1}}
                    ]
                },
                "decay": {"enum": ["none", "inverse"]},
                "threads": _POSITIVE_INT
            }
        },
        "output": {
            "type": "object",
            "additionalProperties": False,
            "properties": {key: {"type": "string"} for key in DEFAULT_OUTPUT_CONFIG}
        },
        "sampling": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"size": _POSITIVE_INT}
        },
        "check": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "instances": _POSITIVE_INT,
                "dimension": {"type": "integer", "minimum": 2, "maximum": 12},
                "step": {"type": "number", "exclusiveMinimum": 0},
                "tolerance": {"type": "number", "exclusiveMinimum": 0}
            }
        },
        "enumeration_cap": _POSITIVE_INT,
        "logging": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "log_dir": {"type": "string"},
                "log_level": {"enum": ["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"]},
                "log_to_file": {"type": "boolean"},
                "event_log": {"type": "boolean"}
            }
        }
    }
}
