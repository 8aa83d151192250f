"""Planar homography estimation: normalized DLT and geometric refinement."""
import numpy as np

from ..exceptions import DegenerateGeometryError, InsufficientDataError, NumericError
from .lm import levenberg_marquardt


def normalize_homography(H):
    """Scale ``H`` so that ``H[2, 2] == 1`` (left alone when that entry is ~0)."""
    H = np.asarray(H, dtype=np.float64)
    if abs(H[2, 2]) > 1e-15 * np.abs(H).max():
        return H / H[2, 2]
    return H / np.linalg.norm(H)


def apply_homography(H, pts):
    """Map ``(N, 2)`` points through ``H`` and dehomogenize."""
    pts = np.asarray(pts, dtype=np.float64)
    hom = np.column_stack([pts, np.ones(len(pts))]) @ H.T
    return hom[:, :2] / hom[:, 2:3]


def hartley_transform(pts):
    """Similarity moving the centroid to 0 and the mean distance to sqrt(2)."""
    centroid = pts.mean(axis=0)
    mean_dist = np.sqrt(((pts - centroid) ** 2).sum(axis=1)).mean()
    if mean_dist == 0:
        raise DegenerateGeometryError("all points coincide")
    s = np.sqrt(2.0) / mean_dist
    return np.array([[s, 0.0, -s * centroid[0]], [0.0, s, -s * centroid[1]], [0.0, 0.0, 1.0]])


def _check_correspondences(world, image):
    world = np.asarray(world, dtype=np.float64)[:, :2]
    image = np.asarray(image, dtype=np.float64)
    if world.shape != image.shape or world.ndim != 2 or world.shape[1] != 2:
        raise InsufficientDataError("world and image must be matching (N, 2) arrays")
    if len(world) < 4:
        raise InsufficientDataError(f"need at least 4 correspondences, got {len(world)}")
    return world, image


def dlt_homography(world, image):
    """Estimate ``H`` with ``image ~ H @ world`` by the normalized DLT.

    Both point sets are Hartley-normalized, the stacked ``2N x 9`` system is
    solved by its smallest right singular vector, and the result is mapped
    back and scaled so ``H[2, 2] == 1``.

    Raises
    ------
    DegenerateGeometryError
        When the system has more than one null direction, e.g. collinear points.
    """
    world, image = _check_correspondences(world, image)
    Tw = hartley_transform(world)
    Ti = hartley_transform(image)
    w = apply_homography(Tw, world)
    m = apply_homography(Ti, image)
    n = len(w)
    A = np.zeros((2 * n, 9))
    X, Y = w[:, 0], w[:, 1]
    u, v = m[:, 0], m[:, 1]
    A[0::2, 0] = -X
    A[0::2, 1] = -Y
    A[0::2, 2] = -1
    A[0::2, 6] = u * X
    A[0::2, 7] = u * Y
    A[0::2, 8] = u
    A[1::2, 3] = -X
    A[1::2, 4] = -Y
    A[1::2, 5] = -1
    A[1::2, 6] = v * X
    A[1::2, 7] = v * Y
    A[1::2, 8] = v
    _, sv, Vt = np.linalg.svd(A)
    if sv[-2] <= 1e-10 * sv[0]:
        raise DegenerateGeometryError("correspondences do not determine a unique homography")
    Hn = Vt[-1].reshape(3, 3)
    H = np.linalg.inv(Ti) @ Hn @ Tw
    if abs(np.linalg.det(H)) < 1e-300:
        raise DegenerateGeometryError("estimated homography is singular")
    return normalize_homography(H)


def transfer_residuals(H, world, image):
    return (apply_homography(H, world) - image).ravel()


def transfer_cost(H, world, image):
    """Sum of squared image-plane distances between ``image`` and ``H(world)``."""
    world, image = _check_correspondences(world, image)
    r = transfer_residuals(H, world, image)
    return float(r @ r)


def _transfer_jacobian(h, world):
    H = np.append(h, 1.0).reshape(3, 3)
    X, Y = world[:, 0], world[:, 1]
    hom = np.column_stack([X, Y, np.ones(len(X))]) @ H.T
    w = hom[:, 2]
    u = hom[:, 0] / w
    v = hom[:, 1] / w
    J = np.zeros((2 * len(X), 8))
    J[0::2, 0] = X / w
    J[0::2, 1] = Y / w
    J[0::2, 2] = 1.0 / w
    J[0::2, 6] = -u * X / w
    J[0::2, 7] = -u * Y / w
    J[1::2, 3] = X / w
    J[1::2, 4] = Y / w
    J[1::2, 5] = 1.0 / w
    J[1::2, 6] = -v * X / w
    J[1::2, 7] = -v * Y / w
    return J


def refine_homography(H0, world, image, max_iter=100, rtol=1e-12, return_info=False):
    """Refine ``H0`` by minimizing the squared transfer error.

    Uses damped Gauss-Newton on the eight free entries (``H[2, 2] == 1``).
    The returned homography never has a higher cost than ``H0``.
    """
    world, image = _check_correspondences(world, image)
    H0 = normalize_homography(H0)
    if abs(H0[2, 2] - 1.0) > 1e-12:
        raise NumericError("refinement needs H[2, 2] != 0")

    def residuals(h):
        return transfer_residuals(np.append(h, 1.0).reshape(3, 3), world, image)

    result = levenberg_marquardt(
        residuals,
        H0.ravel()[:8],
        jac=lambda h: _transfer_jacobian(h, world),
        max_iter=max_iter,
        rtol=rtol,
    )
    if not np.isfinite(result.cost):
        raise NumericError("refinement produced a non-finite cost")
    H = np.append(result.x, 1.0).reshape(3, 3)
    return (H, result) if return_info else H
