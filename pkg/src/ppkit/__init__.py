"""Numerical toolkit for potential-theoretic compactifications on model domains.

Classical and pluricomplex Green functions with exact closed forms, norming
weights built from certified mass-transport constants, a concrete L1 embedding
of poles as normalized Green functions, and numerical identification of the
boundary-limit kernels on the disk, complex 2-ball and bidisk.
"""

from .geometry import Domain, Exhaustion, dyadic_levels, exhaustion_level
from .sampling import sample_nodes, save_nodes_csv, load_nodes_csv

__version__ = "0.1.0"

__all__ = [
    "Domain",
    "Exhaustion",
    "dyadic_levels",
    "exhaustion_level",
    "sample_nodes",
    "save_nodes_csv",
    "load_nodes_csv",
]
