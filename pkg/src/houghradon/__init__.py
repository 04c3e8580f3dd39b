"""Fast Hough Transform, HoughToRadon/RadonToHough layers and a small
segmentation network built around them."""

from .fht import HoughImage, Quadrant, fht_full, fht_quadrant, naive_fht_quadrant, tfht
from .image import FormatError, read_pgm, read_tensor, write_pgm, write_tensor
from .metrics import miou
from .radon import RadonImage, hrt, radon_width, rht

__all__ = [
    "FormatError",
    "HoughImage",
    "Quadrant",
    "RadonImage",
    "fht_full",
    "fht_quadrant",
    "hrt",
    "miou",
    "naive_fht_quadrant",
    "radon_width",
    "read_pgm",
    "read_tensor",
    "rht",
    "tfht",
    "write_pgm",
    "write_tensor",
]
