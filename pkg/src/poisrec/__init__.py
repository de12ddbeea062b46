"""Simulation and statistical verification of the record structure of a Poisson process."""

from poisrec.errors import InvalidInputError, InvalidParameterError, OutOfRangeError
from poisrec.randomness import RandomStream, ScriptedStream, make_stream

__version__ = "0.1.0"

__all__ = [
    "InvalidInputError",
    "InvalidParameterError",
    "OutOfRangeError",
    "RandomStream",
    "ScriptedStream",
    "make_stream",
]
