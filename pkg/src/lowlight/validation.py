"""Input validation helpers for 8-bit images.

Images are plain numpy arrays: ``(H, W)`` for gray and ``(H, W, 3)`` for RGB,
both ``uint8``. These helpers coerce array-likes and raise
:class:`~lowlight.exceptions.InvalidInputError` with a useful message.
"""
import numpy as np

from .exceptions import InvalidInputError


def _as_uint8(img, name):
    arr = np.asarray(img)
    if arr.size == 0:
        raise InvalidInputError(f"{name} is empty")
    if arr.dtype == np.uint8:
        return arr
    if arr.dtype.kind not in "iu":
        raise InvalidInputError(f"{name} must hold integer intensities, got dtype {arr.dtype}")
    if arr.min() < 0 or arr.max() > 255:
        raise InvalidInputError(f"{name} intensities must lie in [0, 255]")
    return arr.astype(np.uint8)


def check_gray(img, name="image"):
    """Return ``img`` as a non-empty 2-D uint8 array."""
    arr = _as_uint8(img, name)
    if arr.ndim != 2:
        raise InvalidInputError(f"{name} must be 2-D (H, W), got shape {arr.shape}")
    return arr


def check_rgb(img, name="image"):
    """Return ``img`` as a non-empty (H, W, 3) uint8 array."""
    arr = _as_uint8(img, name)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise InvalidInputError(f"{name} must have shape (H, W, 3), got {arr.shape}")
    return arr


def check_image(img, name="image"):
    """Accept either a gray or an RGB image."""
    arr = _as_uint8(img, name)
    if arr.ndim == 2:
        return arr
    if arr.ndim == 3 and arr.shape[2] == 3:
        return arr
    raise InvalidInputError(f"{name} must be (H, W) or (H, W, 3), got shape {arr.shape}")


def check_same_shape(a, b, names=("reference", "test")):
    if a.shape != b.shape:
        raise InvalidInputError(
            f"{names[0]} and {names[1]} differ in shape: {a.shape} vs {b.shape}"
        )
