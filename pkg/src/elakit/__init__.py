"""Landscape analysis toolkit for large-scale black-box optimization.

Subpackages and modules:

- ``testbed``: scalable benchmark suite with seeded instances and labels
- ``sampling``: seeded space-filling designs and unit-box normalization
- ``dimred``: rank-weighted linear dimensionality reduction of designs
- ``features``: landscape feature groups computed from a sampled design
- ``ml``: small model zoo (OLS, LDA/QDA/MDA, random forest) and rank stats
- ``harness``: timing, classification and similarity experiment drivers
- ``cli``: command line entry points
"""

__version__ = "0.1.0"

from . import dimred, harness, ml, sampling, testbed
from .features import compute_group, compute_groups

__all__ = [
    "testbed",
    "sampling",
    "dimred",
    "ml",
    "harness",
    "compute_group",
    "compute_groups",
    "__version__",
]
