"""Day-to-night image translation and nighttime semantic segmentation.

The package trains a pair of unpaired image translators (day<->night),
uses the day->night direction to synthesize nighttime training data for a
semantic segmenter, and measures how the synthetic/real mixing ratio
affects day and night accuracy. Everything is seeded and reruns
bit-identically.
"""

from .errors import NightsegError
from .imaging import IGNORE, ImageTensor, LabelMap
from .seeding import derive_seed

__version__ = "0.1.0"

__all__ = [
    "NightsegError",
    "IGNORE",
    "ImageTensor",
    "LabelMap",
    "derive_seed",
    "__version__",
]
