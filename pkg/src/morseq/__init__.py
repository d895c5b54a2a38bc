"""Exact integer chain complexes for Morse theory with a reflection symmetry."""

__version__ = "0.1.0"

from .errors import *  # noqa: F401,F403
from .linalg import HomologyGroup, IntMatrix, homology_of_pair, smith_normal_form  # noqa: F401
from .chain import (ChainMap, GradedComplex, Involution, homology,  # noqa: F401
                    is_quasi_isomorphism, mapping_cone, verify_boundary_squared)
from .instance import MorseInstance, builtin, load, save, validate  # noqa: F401
from .builders import build, g_action, hat_quotient_map, psi  # noqa: F401
