"""LED blob detection: threshold, 8-connected labelling, weighted centroids."""
from itertools import combinations

import numpy as np
from scipy import ndimage
from scipy.spatial import ConvexHull

from ..exceptions import BlobCountError, DegenerateGeometryError, EmptyTargetError
from ..validation import check_gray
from .homography import apply_homography, dlt_homography

_EIGHT_CONNECTED = np.ones((3, 3), dtype=bool)


def extract_centroids(img, threshold=127, grid=None):
    """Intensity-weighted centroids ``(x, y)`` of bright blobs.

    Pixels strictly above ``threshold`` are grouped into 8-connected
    components. Coordinates put pixel centres on integers (column ``x``,
    row ``y``).

    Without ``grid`` the centroids are sorted row-major, by ``y`` then ``x``.
    With a :class:`~lowlight.calib.camera.TargetGrid` the count must match
    ``grid.size`` and the points are ordered to follow the grid
    (see :func:`order_grid`).

    Raises
    ------
    EmptyTargetError
        If nothing exceeds the threshold.
    BlobCountError
        If ``grid`` is given and the blob count differs from ``grid.size``.
    """
    arr = check_gray(img)
    mask = arr > threshold
    labels, n = ndimage.label(mask, structure=_EIGHT_CONNECTED)
    if n == 0:
        raise EmptyTargetError(f"no pixel above threshold {threshold}")
    index = np.arange(1, n + 1)
    weights = arr.astype(np.float64)
    rows, cols = np.indices(arr.shape, dtype=np.float64)
    mass = ndimage.sum(weights, labels, index)
    cy = ndimage.sum(weights * rows, labels, index) / mass
    cx = ndimage.sum(weights * cols, labels, index) / mass
    pts = np.column_stack([cx, cy])
    if grid is not None:
        if n != grid.size:
            raise BlobCountError(n, grid.size)
        return order_grid(pts, grid.rows, grid.cols)
    return pts[np.lexsort((pts[:, 0], pts[:, 1]))]


def _grid_corners(pts):
    """Four hull points spanning the largest quadrilateral, clockwise from top-left."""
    hull = pts[ConvexHull(pts).vertices]
    best, best_area = None, -1.0
    for quad in combinations(range(len(hull)), 4):
        q = hull[list(quad)]
        x, y = q[:, 0], q[:, 1]
        area = 0.5 * abs(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))
        if area > best_area:
            best, best_area = q, area
    start = int(np.argmin(best[:, 0] + best[:, 1]))
    best = np.roll(best, -start, axis=0)
    # TL, TR, BR, BL has a positive shoelace sum when y points down
    x, y = best[:, 0], best[:, 1]
    if np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)) < 0:
        best = np.concatenate([best[:1], best[1:][::-1]])
    return best


def order_grid(points, rows, cols):
    """Order detected grid points row by row, left to right.

    The outer corners of the point set fix a homography to grid indices;
    every point is mapped through it and snapped to the nearest index. The
    corner nearest the image origin becomes grid ``(0, 0)``.

    Raises
    ------
    BlobCountError
        If the point count does not match the grid.
    DegenerateGeometryError
        If the snapped indices are not a permutation of the grid.
    """
    pts = np.asarray(points, dtype=np.float64)
    if len(pts) != rows * cols:
        raise BlobCountError(len(pts), rows * cols)
    corners = _grid_corners(pts)
    index_corners = np.array(
        [[0, 0], [cols - 1, 0], [cols - 1, rows - 1], [0, rows - 1]], dtype=np.float64
    )
    H = dlt_homography(corners, index_corners)
    idx = apply_homography(H, pts)
    col = np.rint(idx[:, 0]).astype(int)
    row = np.rint(idx[:, 1]).astype(int)
    flat = row * cols + col
    if (
        col.min() < 0 or col.max() >= cols or row.min() < 0 or row.max() >= rows
        or len(np.unique(flat)) != len(flat)
    ):
        raise DegenerateGeometryError("could not assign blobs to grid positions")
    out = np.empty_like(pts)
    out[flat] = pts
    return out


def render_blobs(centers, shape, sigma=1.5, peak=220.0, background=0.0):
    """Render isotropic Gaussian spots at sub-pixel ``centers`` into a uint8 image."""
    h, w = shape
    img = np.full(shape, background, dtype=np.float64)
    radius = int(np.ceil(4 * sigma))
    for x, y in np.asarray(centers, dtype=np.float64):
        x0, x1 = max(0, int(np.floor(x)) - radius), min(w, int(np.floor(x)) + radius + 2)
        y0, y1 = max(0, int(np.floor(y)) - radius), min(h, int(np.floor(y)) + radius + 2)
        if x0 >= x1 or y0 >= y1:
            continue
        yy, xx = np.mgrid[y0:y1, x0:x1]
        img[y0:y1, x0:x1] += peak * np.exp(-((xx - x) ** 2 + (yy - y) ** 2) / (2 * sigma**2))
    return np.clip(np.floor(img + 0.5), 0, 255).astype(np.uint8)
