"""Interchange and exclusion processes on hypergraphs: exact chains, simulation, inequality checks."""

from .exact import build_generator, mixing_time, relaxation_time, transition_matrix
from .instances import generate_instance, parse_generator
from .model import Hyperedge, HypergraphInstance, PermutationLaw, ProcessSpec
from .report import VerificationReport

__all__ = [
    "Hyperedge",
    "HypergraphInstance",
    "PermutationLaw",
    "ProcessSpec",
    "VerificationReport",
    "build_generator",
    "generate_instance",
    "mixing_time",
    "parse_generator",
    "relaxation_time",
    "transition_matrix",
]

__version__ = "0.1.0"
