"""The two-sample, one-neuron landscape used as a worked reference.

Samples ``x1 = (1, 0)`` and ``x2 = (0, 1)``, no bias input, ``z = 1``.  The
two sample hyperplanes cut weight space into four quadrant cells.
"""

import numpy as np

from .cells import ActivationPattern
from .model import Dataset

# activation of (x1, x2) in each quadrant cell
CELLS = {
    "r1": (0, 0),
    "r2": (0, 1),
    "r3": (1, 0),
    "r4": (1, 1),
}


def two_sample_dataset(y2=1.0):
    """The reference instance; ``y2 = -1`` gives the flipped-label variant."""
    return Dataset(np.eye(2), np.array([1.0, float(y2)]), homogeneous=False)


def cell_pattern(name):
    return ActivationPattern(np.array(CELLS[name], dtype=np.int8)[:, None])
