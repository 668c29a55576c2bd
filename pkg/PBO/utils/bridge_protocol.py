"""
Bridge Protocol

This module provides the line protocol spoken between the optimizer and an
external objective process over the child's standard streams:

    HELLO <N>\\n         ->  READY\\n
    EVAL <N> <bits>\\n   ->  VAL <decimal real>\\n
    BYE\\n

Framing is bit-exact; any other line is a protocol violation.
"""

import re
import logging

import numpy as np

from PBO.exceptions import BridgeProtocolException

logger = logging.getLogger(__name__)

READY_LINE = "READY\n"
BYE_LINE = "BYE\n"


class BridgeProtocol:
    """
    Formatter and parser for both ends of the external-objective protocol.
    """

    def __init__(self):
        """Initialize the protocol patterns."""
        real = r'[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?|[-+]?(?:nan|inf)'
        self.hello_pattern = re.compile(r'HELLO ([1-9]\d*)\n')
        self.eval_pattern = re.compile(r'EVAL ([1-9]\d*) ([01]+)\n')
        self.value_pattern = re.compile(rf'VAL ({real})\n')

    def format_hello(self, dimension: int) -> str:
        return f"HELLO {dimension}\n"

    def format_eval(self, design) -> str:
        bits = "".join("1" if b else "0" for b in np.asarray(design).ravel())
        return f"EVAL {len(bits)} {bits}\n"

    def format_value(self, value: float) -> str:
        return f"VAL {float(value)!r}\n"

    def parse_ready(self, line: str) -> None:
        if line != READY_LINE:
            raise BridgeProtocolException("expected READY after HELLO", line)

    def parse_value(self, line: str) -> float:
        """
        Parse a response line.

        Returns:
            The real value, which may be NaN or infinite

        Raises:
            BridgeProtocolException: If the line is not 'VAL <real>'
        """
        match = self.value_pattern.fullmatch(line)
        if match is None:
            raise BridgeProtocolException("malformed response", line)
        return float(match.group(1))

    def parse_hello(self, line: str) -> int:
        match = self.hello_pattern.fullmatch(line)
        if match is None:
            raise BridgeProtocolException("malformed handshake", line)
        return int(match.group(1))

    def parse_eval(self, line: str, dimension: int) -> np.ndarray:
        match = self.eval_pattern.fullmatch(line)
        if match is None:
            raise BridgeProtocolException("malformed request", line)
        n, bits = int(match.group(1)), match.group(2)
        if n != dimension or len(bits) != dimension:
            raise BridgeProtocolException(f"request dimension does not match N={dimension}", line)
        return np.frombuffer(bits.encode("ascii"), dtype=np.uint8) - ord("0")
