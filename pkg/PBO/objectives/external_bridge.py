"""
External Objective Bridge

This module provides objectives evaluated by external processes that speak the
line protocol of ``PBO.utils.bridge_protocol``. Each process serves one request
at a time; a pool of processes serves concurrent evaluations.
"""

import logging
import queue
import subprocess
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from PBO.exceptions import BridgeProcessException, ConfigException, NonFiniteValueException
from PBO.objectives.base_objective import BaseObjective
from PBO.utils.bridge_protocol import BYE_LINE, BridgeProtocol

logger = logging.getLogger(__name__)


class ExternalBridge:
    """
    One external objective process.

    The process is launched and greeted on first use and shut down with BYE on
    ``close``.
    """

    def __init__(self, command: Sequence[str], dimension: int, protocol: Optional[BridgeProtocol] = None):
        if not command:
            raise ConfigException("external objective requires a command")
        self.command = list(command)
        self.dimension = int(dimension)
        self.protocol = protocol or BridgeProtocol()
        self._process: Optional[subprocess.Popen] = None

    @property
    def running(self) -> bool:
        return self._process is not None and self._process.poll() is None

    def start(self) -> None:
        try:
            self._process = subprocess.Popen(self.command, stdin=subprocess.PIPE, stdout=subprocess.PIPE)
        except OSError as err:
            raise BridgeProcessException(f"cannot launch {self.command}: {err}") from err
        self._send(self.protocol.format_hello(self.dimension))
        self.protocol.parse_ready(self._receive())
        logger.info(f"External objective process {self._process.pid} ready (N={self.dimension})")

    def _send(self, line: str) -> None:
        try:
            self._process.stdin.write(line.encode("ascii"))
            self._process.stdin.flush()
        except (BrokenPipeError, OSError) as err:
            raise BridgeProcessException(f"external objective process is gone: {err}") from err

    def _receive(self) -> str:
        raw = self._process.stdout.readline()
        if not raw:
            code = self._process.wait()
            logger.error(f"External objective process exited with code {code}")
            raise BridgeProcessException(f"external objective process exited with code {code}")
        return raw.decode("ascii", errors="replace")

    def evaluate(self, d) -> float:
        """
        Send one design and read its value.

        Raises:
            BridgeProtocolException: If the response line is malformed
            BridgeProcessException: If the process died
            NonFiniteValueException: If the value is NaN or infinite
        """
        if self._process is None:
            self.start()
        elif not self.running:
            raise BridgeProcessException(f"external objective process exited with code {self._process.returncode}")
        self._send(self.protocol.format_eval(d))
        value = self.protocol.parse_value(self._receive())
        if not np.isfinite(value):
            raise NonFiniteValueException(f"external objective returned non-finite value {value}")
        return value

    def close(self) -> None:
        if self._process is None:
            return
        if self.running:
            try:
                self._send(BYE_LINE)
                self._process.stdin.close()
                self._process.wait(timeout=5)
            except (BridgeProcessException, subprocess.TimeoutExpired):
                self._process.kill()
                self._process.wait()
        for stream in (self._process.stdin, self._process.stdout):
            if stream and not stream.closed:
                stream.close()
        self._process = None

    def __enter__(self) -> "ExternalBridge":
        return self

    def __exit__(self, *exc_info) -> None:
        self.close()


class ExternalBridgePool:
    """Fixed set of bridges handed out to one caller at a time."""

    def __init__(self, command: Sequence[str], dimension: int, pool_size: int = 1):
        self.bridges: List[ExternalBridge] = [ExternalBridge(command, dimension) for _ in range(max(1, pool_size))]
        self._idle: "queue.Queue[ExternalBridge]" = queue.Queue()
        for bridge in self.bridges:
            self._idle.put(bridge)

    def evaluate(self, d) -> float:
        bridge = self._idle.get()
        try:
            return bridge.evaluate(d)
        finally:
            self._idle.put(bridge)

    def close(self) -> None:
        for bridge in self.bridges:
            bridge.close()


class ExternalObjective(BaseObjective):

    def __init__(self, command: Sequence[str], dimension: int, pool_size: int = 1,
                 name: str = "external", **kwargs):
        super().__init__(name, dimension, **kwargs)
        self.pool = ExternalBridgePool(command, dimension, pool_size)

    def _evaluate_impl(self, design: np.ndarray) -> float:
        return self.pool.evaluate(design)

    def close(self) -> None:
        self.pool.close()

    def __enter__(self) -> "ExternalObjective":
        return self

    def __exit__(self, *exc_info) -> None:
        self.close()


def external_eval(bridge_config: Dict[str, Any], d) -> float:
    """Evaluate one design with a short-lived bridge built from {'command': [...]}."""
    design = np.asarray(d)
    with ExternalBridge(bridge_config.get("command", []), design.size) as bridge:
        return bridge.evaluate(design)
