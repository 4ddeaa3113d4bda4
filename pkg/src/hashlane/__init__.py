"""hashlane: binary-hashing nearest-neighbour search with hamming-ball probing.

Train sign-of-projection or label-coding hash functions, pack codes into
multi-table bucket indexes, and benchmark search precision against time.
"""

from hashlane.core import (
    BinaryCode,
    CodeSet,
    FeatureSet,
    FormatError,
    HashlaneError,
    SearchParams,
    ball_size,
    hamming_distance,
    pack_bits,
)

__all__ = [
    "BinaryCode",
    "CodeSet",
    "FeatureSet",
    "FormatError",
    "HashlaneError",
    "SearchParams",
    "ball_size",
    "hamming_distance",
    "pack_bits",
]

__version__ = "0.1.0"
