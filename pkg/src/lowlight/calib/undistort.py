"""Image undistortion by inverse mapping with bilinear sampling."""
import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from ..validation import check_gray, check_image
from .camera import CameraIntrinsics, DistortionCoeffs, distort_normalized

# sample positions this close to the border count as on it
_EDGE_TOL = 1e-6


def undistort_map(shape, intr, dist):
    """Source coordinates ``(map_x, map_y)`` for every output pixel.

    Each output pixel is taken through ``K^-1``, distorted with the forward
    lens model and brought back through ``K``.
    """
    h, w = shape
    v, u = np.indices((h, w), dtype=np.float64)
    xy = np.stack([(u - intr.cx) / intr.fx, (v - intr.cy) / intr.fy], axis=-1)
    if not dist.is_zero:
        xy = distort_normalized(xy, dist)
    return intr.fx * xy[..., 0] + intr.cx, intr.fy * xy[..., 1] + intr.cy


def remap_bilinear(img, map_x, map_y, fill=0):
    """Sample ``img`` at ``(map_x, map_y)`` bilinearly; outside samples get ``fill``."""
    arr = check_gray(img).astype(np.float64)
    h, w = arr.shape
    inside = (
        (map_x >= -_EDGE_TOL)
        & (map_x <= w - 1 + _EDGE_TOL)
        & (map_y >= -_EDGE_TOL)
        & (map_y <= h - 1 + _EDGE_TOL)
    )
    x = np.clip(map_x, 0, w - 1)
    y = np.clip(map_y, 0, h - 1)
    x0 = np.minimum(np.floor(x).astype(np.intp), max(w - 2, 0))
    y0 = np.minimum(np.floor(y).astype(np.intp), max(h - 2, 0))
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    fx = x - x0
    fy = y - y0
    top = arr[y0, x0] + fx * (arr[y0, x1] - arr[y0, x0])
    bottom = arr[y1, x0] + fx * (arr[y1, x1] - arr[y1, x0])
    value = top + fy * (bottom - top)
    out = np.clip(np.floor(value + 0.5), 0, 255).astype(np.uint8)
    out[~inside] = fill
    return out


def undistort(img, intr, dist):
    """Remove lens distortion from a gray or RGB image.

    With all-zero coefficients the output equals the input exactly.
    """
    arr = check_image(img)
    map_x, map_y = undistort_map(arr.shape[:2], intr, dist)
    if arr.ndim == 2:
        return remap_bilinear(arr, map_x, map_y)
    return np.stack([remap_bilinear(arr[..., c], map_x, map_y) for c in range(3)], axis=-1)


class Undistorter(TransformerMixin, BaseEstimator):
    """Undistort a collection of images with a fixed camera model."""

    def __init__(self, fx=1.0, fy=1.0, cx=0.0, cy=0.0, k1=0.0, k2=0.0, k3=0.0, p1=0.0, p2=0.0):
        self.fx = fx
        self.fy = fy
        self.cx = cx
        self.cy = cy
        self.k1 = k1
        self.k2 = k2
        self.k3 = k3
        self.p1 = p1
        self.p2 = p2

    @classmethod
    def from_camera(cls, intr, dist):
        return cls(intr.fx, intr.fy, intr.cx, intr.cy, *map(float, dist.as_array()))

    def fit(self, X=None, y=None):
        return self

    def transform(self, X):
        intr = CameraIntrinsics(self.fx, self.fy, self.cx, self.cy)
        dist = DistortionCoeffs(self.k1, self.k2, self.k3, self.p1, self.p2)
        if isinstance(X, np.ndarray) and X.ndim in (3, 4):
            return np.stack([undistort(im, intr, dist) for im in X])
        return [undistort(im, intr, dist) for im in X]

    def __sklearn_tags__(self):
        tags = super().__sklearn_tags__()
        tags.requires_fit = False
        return tags
