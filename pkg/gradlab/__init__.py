name = "gradlab"

"""
Desk-scale laboratory for multi-task optimization: gradient combiners,
interference monitors, synthetic problems and an experiment harness.
"""
# Import metadata from _meta module to avoid circular imports
from gradlab._meta import (
    Imports,
    version,
    DEFAULTS,
    HYPERPARAMS,
)

# Import core functionality
from gradlab.core import *

__version__ = version
__description__ = (
    "Gradient manipulation, balancing and regularization for multi-task "
    "learning with interference monitors and seeded experiment sweeps."
)
