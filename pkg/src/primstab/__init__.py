"""Numerical certificates of regularity and primitive stability for
representations of free groups into ``PGL(n, R)``."""

from .cartan import (FlatDescriptor, NotLoxodromic, SpacePoint, WeylVector, cartan_projection,
                     delta_distance, distance_to_flat, jordan_projection, wall_margin)
from .freegroup import enumerate_primitive_classes, format_word, is_primitive, parse_word
from .grassmann import compound, plucker_embed, sequence_rank_classify
from .projective3 import classify_isometry
from .reps import Representation, evaluate, make_preset, perturb
from .stability import StabilityCertificate, Tolerances, certify

__version__ = "0.1.0"

__all__ = [
    "FlatDescriptor", "NotLoxodromic", "SpacePoint", "WeylVector", "cartan_projection",
    "delta_distance", "distance_to_flat", "jordan_projection", "wall_margin",
    "enumerate_primitive_classes", "format_word", "is_primitive", "parse_word",
    "compound", "plucker_embed", "sequence_rank_classify", "classify_isometry",
    "Representation", "evaluate", "make_preset", "perturb",
    "StabilityCertificate", "Tolerances", "certify",
]
