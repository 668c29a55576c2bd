"""
Logging Utility

This module provides logging setup for the command-line front end and an event
log for optimization runs.
"""

import os
import csv
import json
import logging
import datetime
from typing import Any, Dict, List, Optional, Union

from PBO.utils.records import IterationRecord, deep_asdict

logger = logging.getLogger(__name__)

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'


def setup_logging(log_dir: str = "logs", log_level: str = "INFO", log_to_file: bool = True) -> logging.Logger:
    """
    Set up logging configuration for the application.

    Args:
        log_dir: Directory to save log files
        log_level: Logging level (DEBUG, INFO, WARNING, ERROR, CRITICAL)
        log_to_file: Whether to log to a file

    Returns:
        Configured root logger
    """
    # Create log directory if it doesn't exist
    if log_to_file:
        os.makedirs(log_dir, exist_ok=True)

    root_logger = logging.getLogger()
    level = getattr(logging, log_level.upper())
    root_logger.setLevel(level)

    # Drop handlers from an earlier setup
    for handler in root_logger.handlers[:]:
        root_logger.removeHandler(handler)

    # Console handler
    console_handler = logging.StreamHandler()
    console_handler.setLevel(level)
    console_handler.setFormatter(logging.Formatter(LOG_FORMAT))
    root_logger.addHandler(console_handler)

    # File handler, one file per setup
    log_file = None
    if log_to_file:
        timestamp = datetime.datetime.now().strftime("%Y%m%d_%H%M%S")
        log_file = os.path.join(log_dir, f"pbo_{timestamp}.log")
        file_handler = logging.FileHandler(log_file)
        file_handler.setLevel(level)
        file_handler.setFormatter(logging.Formatter(LOG_FORMAT))
        root_logger.addHandler(file_handler)

    logger.info(f"Logging configured with level {log_level}")
    if log_file:
        logger.info(f"Logging to file: {log_file}")

    return root_logger


class RunLogger:
    """
    Event log of one optimization run.

    Entries carry wall-clock timestamps, so the event log is a diagnostic
    companion to the reproducible trace and result files, not one of them.
    """

    def __init__(self,
                 log_dir: str = "logs",
                 run_id: Optional[str] = None,
                 format: str = "json"):
        """
        Initialize the run logger.

        Args:
            log_dir: Directory to save log files
            run_id: Unique identifier for the run (defaults to timestamp)
            format: Log format ('json' or 'csv'; csv also writes the json file)
        """
        self.log_dir = log_dir
        self.format = format.lower()
        os.makedirs(log_dir, exist_ok=True)

        if run_id is None:
            timestamp = datetime.datetime.now().strftime("%Y%m%d_%H%M%S")
            run_id = f"run_{timestamp}"

        self.run_id = run_id
        self.log_entries: List[Dict[str, Any]] = []
        self.json_log_path = os.path.join(log_dir, f"{run_id}.json")
        self.csv_log_path = os.path.join(log_dir, f"{run_id}.csv")

        logger.info(f"Initialized run logger with ID: {run_id}")

    def log_event(self,
                  event_type: str,
                  details: Optional[Dict[str, Any]] = None,
                  metadata: Optional[Dict[str, Any]] = None) -> Dict[str, Any]:
        """
        Log a run event.

        Args:
            event_type: Type of event (e.g., 'run_start', 'iteration')
            details: Event details
            metadata: Additional metadata for the event

        Returns:
            The created log entry
        """
        log_entry = {
            "timestamp": datetime.datetime.now().isoformat(),
            "event_type": event_type,
            "run_id": self.run_id
        }
        if details is not None:
            log_entry["details"] = deep_asdict(details)
        if metadata is not None:
            log_entry["metadata"] = deep_asdict(metadata)

        self.log_entries.append(log_entry)
        self._write_log()
        logger.debug(f"Logged event: {event_type}")
        return log_entry

    def log_system_event(self, event_subtype: str, details: Dict[str, Any]) -> Dict[str, Any]:
        return self.log_event("system_event", details=details, metadata={"event_subtype": event_subtype})

    def log_run_start(self, config: Dict[str, Any]) -> Dict[str, Any]:
        return self.log_event("run_start", details={"config": config})

    def log_iteration(self, record: IterationRecord) -> Dict[str, Any]:
        return self.log_event("iteration", details={
            "iteration": record.iteration,
            "pgnorm": record.pgnorm,
            "baseline": record.baseline,
            "mean_value": record.mean_value,
            "best_value": record.best_value,
            "new_evaluations": record.new_evaluations
        })

    def log_run_end(self, summary: Dict[str, Any]) -> Dict[str, Any]:
        return self.log_event("run_end", details={"summary": summary})

    def _write_log(self) -> None:
        # Rewrite the whole JSON log on every event
        with open(self.json_log_path, 'w') as f:
            json.dump(self.log_entries, f, indent=2)

        if self.format == "csv":
            rows = [{"timestamp": entry["timestamp"], "event_type": entry["event_type"],
                     "run_id": entry["run_id"], "details": json.dumps(entry.get("details", {}), sort_keys=True)}
                    for entry in self.log_entries]
            with open(self.csv_log_path, 'w', newline='') as f:
                writer = csv.DictWriter(f, fieldnames=["timestamp", "event_type", "run_id", "details"])
                writer.writeheader()
                writer.writerows(rows)

    def get_log_entries(self,
                        event_type: Optional[str] = None,
                        start_time: Optional[Union[str, datetime.datetime]] = None,
                        end_time: Optional[Union[str, datetime.datetime]] = None) -> List[Dict[str, Any]]:
        """
        Get filtered log entries.

        Args:
            event_type: Filter by event type
            start_time: Keep entries at or after this time
            end_time: Keep entries at or before this time

        Returns:
            Matching log entries
        """
        if isinstance(start_time, datetime.datetime):
            start_time = start_time.isoformat()
        if isinstance(end_time, datetime.datetime):
            end_time = end_time.isoformat()

        entries = self.log_entries
        if event_type is not None:
            entries = [e for e in entries if e["event_type"] == event_type]
        if start_time is not None:
            entries = [e for e in entries if e["timestamp"] >= start_time]
        if end_time is not None:
            entries = [e for e in entries if e["timestamp"] <= end_time]
        return entries

    def get_run_summary(self) -> Dict[str, Any]:
        iterations = self.get_log_entries(event_type="iteration")
        ends = self.get_log_entries(event_type="run_end")
        summary = {
            "run_id": self.run_id,
            "total_events": len(self.log_entries),
            "iterations": len(iterations),
            "start_time": self.log_entries[0]["timestamp"] if self.log_entries else None,
            "end_time": self.log_entries[-1]["timestamp"] if self.log_entries else None
        }
        if iterations:
            summary["final_pgnorm"] = iterations[-1]["details"]["pgnorm"]
            summary["new_evaluations"] = sum(e["details"]["new_evaluations"] for e in iterations)
        if ends:
            summary["result"] = ends[-1]["details"]["summary"]
        return summary
