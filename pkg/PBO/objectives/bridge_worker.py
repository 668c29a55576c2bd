"""
Bridge Worker

Child-process side of the external objective protocol, serving a built-in
objective over standard input and output. Used as the echo bridge in tests and
as a template for wrapping other simulators:

    python -m PBO.objectives.bridge_worker --objective popcount

The 'malformed', 'nonfinite' and 'exit' modes misbehave on the first request
to exercise the error paths of the parent.
"""

import sys
from typing import BinaryIO, Callable, Dict

import click
import numpy as np

from PBO.exceptions import BridgeProtocolException
from PBO.objectives.bilinear import bilinear_eval
from PBO.utils.bridge_protocol import BYE_LINE, READY_LINE, BridgeProtocol

OBJECTIVES: Dict[str, Callable[[np.ndarray], float]] = {
    "popcount": lambda d: float(np.sum(d)),
    "bilinear": bilinear_eval
}

MODES = ("normal", "malformed", "nonfinite", "exit")


def serve(objective: str, mode: str, stdin: BinaryIO, stdout: BinaryIO) -> int:
    protocol = BridgeProtocol()
    function = OBJECTIVES[objective]

    def write(line: str) -> None:
        stdout.write(line.encode("ascii"))
        stdout.flush()

    try:
        dimension = protocol.parse_hello(stdin.readline().decode("ascii"))
    except BridgeProtocolException:
        return 2
    write(READY_LINE)
    for raw in stdin:
        line = raw.decode("ascii")
        if line == BYE_LINE:
            return 0
        design = protocol.parse_eval(line, dimension)
        if mode == "exit":
            return 3
        if mode == "malformed":
            write(f"VALUE {function(design)}\n")
        elif mode == "nonfinite":
            write(protocol.format_value(float("nan")))
        else:
            write(protocol.format_value(function(design)))
    return 0


@click.command()
@click.option("--objective", type=click.Choice(sorted(OBJECTIVES)), default="popcount")
@click.option("--mode", type=click.Choice(MODES), default="normal")
def main(objective: str, mode: str) -> None:
    sys.exit(serve(objective, mode, sys.stdin.buffer, sys.stdout.buffer))


if __name__ == "__main__":
    main()
