"""Pinhole camera with radial/tangential (Brown-Conrady) lens distortion."""
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.transform import Rotation

from ..exceptions import InvalidParamsError, ProjectionError


@dataclass(frozen=True)
class CameraIntrinsics:
    """Focal lengths and principal point in pixels; skew is always zero."""

    fx: float
    fy: float
    cx: float
    cy: float

    def __post_init__(self):
        if not (self.fx > 0 and self.fy > 0):
            raise InvalidParamsError("focal lengths must be positive")

    @property
    def K(self):
        return np.array([[self.fx, 0.0, self.cx], [0.0, self.fy, self.cy], [0.0, 0.0, 1.0]])

    @classmethod
    def from_matrix(cls, K):
        return cls(float(K[0, 0]), float(K[1, 1]), float(K[0, 2]), float(K[1, 2]))


@dataclass(frozen=True)
class DistortionCoeffs:
    k1: float = 0.0
    k2: float = 0.0
    k3: float = 0.0
    p1: float = 0.0
    p2: float = 0.0

    def __post_init__(self):
        if not np.all(np.isfinite(self.as_array())):
            raise InvalidParamsError("distortion coefficients must be finite")

    def as_array(self):
        return np.array([self.k1, self.k2, self.k3, self.p1, self.p2], dtype=np.float64)

    @property
    def is_zero(self):
        return not self.as_array().any()


@dataclass(frozen=True)
class CameraPose:
    """World-to-camera rigid transform ``X_cam = R @ X + t``."""

    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        R = np.asarray(self.rotation, dtype=np.float64)
        t = np.asarray(self.translation, dtype=np.float64).reshape(3)
        if R.shape != (3, 3):
            raise InvalidParamsError("rotation must be 3x3")
        if not np.allclose(R.T @ R, np.eye(3), atol=1e-9) or abs(np.linalg.det(R) - 1) > 1e-9:
            raise InvalidParamsError("rotation must be orthonormal with det +1")
        object.__setattr__(self, "rotation", R)
        object.__setattr__(self, "translation", t)

    @classmethod
    def identity(cls):
        return cls(np.eye(3), np.zeros(3))

    @classmethod
    def from_rotvec(cls, rvec, t):
        return cls(Rotation.from_rotvec(rvec).as_matrix(), t)

    @property
    def rotvec(self):
        return Rotation.from_matrix(self.rotation).as_rotvec()


@dataclass(frozen=True)
class TargetGrid:
    """Planar LED target on ``Z = 0``; LED ``(r, c)`` sits at ``(c * s, r * s)``."""

    rows: int = 8
    cols: int = 8
    spacing: float = 25.0
    points: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.rows < 2 or self.cols < 2 or not self.spacing > 0:
            raise InvalidParamsError("grid needs at least 2x2 points and positive spacing")
        r, c = np.mgrid[0 : self.rows, 0 : self.cols]
        pts = np.column_stack([c.ravel(), r.ravel()]).astype(np.float64) * self.spacing
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def size(self):
        return self.rows * self.cols

    @property
    def points3d(self):
        return np.column_stack([self.points, np.zeros(self.size)])


def distort_normalized(xy, dist):
    """Apply the radial + tangential model to normalized coordinates ``(N, 2)``."""
    k1, k2, k3, p1, p2 = np.asarray(dist.as_array() if hasattr(dist, "as_array") else dist)
    x = xy[..., 0]
    y = xy[..., 1]
    r2 = x * x + y * y
    radial = 1.0 + r2 * (k1 + r2 * (k2 + r2 * k3))
    xd = x * radial + 2.0 * p1 * x * y + p2 * (r2 + 2.0 * x * x)
    yd = y * radial + p1 * (r2 + 2.0 * y * y) + 2.0 * p2 * x * y
    return np.stack([xd, yd], axis=-1)


def _distortion_jacobian(x, y, k1, k2, k3, p1, p2):
    r2 = x * x + y * y
    radial = 1.0 + r2 * (k1 + r2 * (k2 + r2 * k3))
    dradial = k1 + r2 * (2.0 * k2 + 3.0 * k3 * r2)  # d radial / d r2
    dxx = radial + 2.0 * x * x * dradial + 2.0 * p1 * y + 6.0 * p2 * x
    dxy = 2.0 * x * y * dradial + 2.0 * p1 * x + 2.0 * p2 * y
    dyx = 2.0 * x * y * dradial + 2.0 * p1 * x + 2.0 * p2 * y
    dyy = radial + 2.0 * y * y * dradial + 6.0 * p1 * y + 2.0 * p2 * x
    return dxx, dxy, dyx, dyy


def undistort_normalized(xy_d, dist, max_iter=20, tol=1e-10):
    """Invert :func:`distort_normalized` by Newton iteration.

    Stops after ``max_iter`` steps or once every update is below ``tol``.
    Only well defined where the distortion map is locally invertible.
    """
    coeffs = dist.as_array() if hasattr(dist, "as_array") else np.asarray(dist)
    xy_d = np.asarray(xy_d, dtype=np.float64)
    xy = xy_d.copy()
    for _ in range(max_iter):
        res = distort_normalized(xy, coeffs) - xy_d
        a, b, c, d = _distortion_jacobian(xy[..., 0], xy[..., 1], *coeffs)
        det = a * d - b * c
        step_x = (d * res[..., 0] - b * res[..., 1]) / det
        step_y = (-c * res[..., 0] + a * res[..., 1]) / det
        xy[..., 0] -= step_x
        xy[..., 1] -= step_y
        if np.max(np.abs(np.concatenate([np.ravel(step_x), np.ravel(step_y)]))) < tol:
            break
    return xy


def project_points(points, intr, pose=None, dist=None):
    """Project world points ``(N, 3)`` to pixel coordinates ``(N, 2)``.

    Raises
    ------
    ProjectionError
        If any point has non-positive depth in the camera frame.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    if pts.shape[-1] == 2:
        pts = np.column_stack([pts, np.zeros(len(pts))])
    pose = pose or CameraPose.identity()
    cam = pts @ pose.rotation.T + pose.translation
    z = cam[:, 2]
    if np.any(z <= 0):
        raise ProjectionError("point at or behind the camera plane")
    xy = cam[:, :2] / z[:, None]
    if dist is not None and not dist.is_zero:
        xy = distort_normalized(xy, dist)
    u = intr.fx * xy[:, 0] + intr.cx
    v = intr.fy * xy[:, 1] + intr.cy
    return np.column_stack([u, v])


def project(point, intr, pose=None, dist=None):
    """Project a single world 3-vector; returns a length-2 array ``(u, v)``."""
    return project_points(np.asarray(point, dtype=np.float64)[None, :], intr, pose, dist)[0]


def pixels_to_normalized(uv, intr):
    uv = np.asarray(uv, dtype=np.float64)
    return np.stack([(uv[..., 0] - intr.cx) / intr.fx, (uv[..., 1] - intr.cy) / intr.fy], axis=-1)


def normalized_to_pixels(xy, intr):
    return np.stack([intr.fx * xy[..., 0] + intr.cx, intr.fy * xy[..., 1] + intr.cy], axis=-1)


def undistort_points(uv, intr, dist, max_iter=20, tol=1e-10):
    """Map distorted pixel coordinates to where an ideal pinhole would put them."""
    xy = undistort_normalized(pixels_to_normalized(uv, intr), dist, max_iter, tol)
    return normalized_to_pixels(xy, intr)
