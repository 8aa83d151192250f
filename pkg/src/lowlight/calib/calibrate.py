"""Plane-based camera calibration from several views of an LED grid.

Pipeline: per-view homography (normalized DLT, then geometric refinement),
closed-form intrinsics from the homography orthogonality constraints,
per-view pose from ``K^-1 H``, and a joint Levenberg-Marquardt refinement of
intrinsics, distortion and all poses against the reprojection error.
"""
import json
import math
import os
from dataclasses import dataclass

import numpy as np
from scipy.spatial.transform import Rotation
from sklearn.base import BaseEstimator

from ..exceptions import DegenerateGeometryError, FileFormatError, InsufficientDataError
from .camera import (
    CameraIntrinsics,
    CameraPose,
    DistortionCoeffs,
    TargetGrid,
    project_points,
)
from .homography import dlt_homography, refine_homography
from .lm import levenberg_marquardt

# Intrinsics and lens distortion of the reference IR camera (pixel units).
REFERENCE_INTRINSICS = CameraIntrinsics(fx=612.383958, fy=611.2666744, cx=501.484677, cy=378.459481)
REFERENCE_DISTORTION = DistortionCoeffs(
    k1=-0.3439249, k2=0.1697238, k3=-0.0360944, p1=0.00174822, p2=0.00352084
)
REFERENCE_IMAGE_SIZE = (1003, 757)  # (width, height)


@dataclass
class CalibrationResult:
    intrinsics: CameraIntrinsics
    distortion: DistortionCoeffs
    poses: list
    per_view_rms: list
    mean_reprojection_error: float
    converged: bool
    iterations: int

    def to_dict(self):
        d = {
            "fx": self.intrinsics.fx,
            "fy": self.intrinsics.fy,
            "cx": self.intrinsics.cx,
            "cy": self.intrinsics.cy,
        }
        d.update(zip(("k1", "k2", "k3", "p1", "p2"), map(float, self.distortion.as_array())))
        d["per_view_rms"] = [float(v) for v in self.per_view_rms]
        d["mean_reprojection_error"] = float(self.mean_reprojection_error)
        d["converged"] = bool(self.converged)
        d["iterations"] = int(self.iterations)
        return d


def camera_from_dict(d):
    """Read intrinsics and distortion back from a calibration JSON document."""
    intr = CameraIntrinsics(float(d["fx"]), float(d["fy"]), float(d["cx"]), float(d["cy"]))
    dist = DistortionCoeffs(*(float(d.get(k, 0.0)) for k in ("k1", "k2", "k3", "p1", "p2")))
    return intr, dist


def load_camera(path):
    with open(path) as fh:
        return camera_from_dict(json.load(fh))


def _v(H, i, j):
    h = H[:, i]
    g = H[:, j]
    return np.array(
        [
            h[0] * g[0],
            h[0] * g[1] + h[1] * g[0],
            h[1] * g[1],
            h[2] * g[0] + h[0] * g[2],
            h[2] * g[1] + h[1] * g[2],
            h[2] * g[2],
        ]
    )


def intrinsics_from_homographies(homographies):
    """Closed-form zero-skew intrinsics from three or more plane homographies.

    Each homography gives two linear constraints on ``B = K^-T K^-1``; a
    further row pins the skew term ``B12`` to zero.
    """
    rows = []
    for H in homographies:
        H = H / np.linalg.norm(H)
        rows.append(_v(H, 0, 1))
        rows.append(_v(H, 0, 0) - _v(H, 1, 1))
    skew_row = np.array([0.0, 1.0, 0.0, 0.0, 0.0, 0.0])
    V = np.vstack(rows + [skew_row * np.abs(np.array(rows)).max()])
    _, sv, Vt = np.linalg.svd(V)
    if sv[-2] <= 1e-12 * sv[0]:
        raise DegenerateGeometryError("views do not constrain the intrinsics")
    B11, B12, B22, B13, B23, B33 = Vt[-1]
    if B11 < 0:
        B11, B12, B22, B13, B23, B33 = -Vt[-1]
    denom = B11 * B22 - B12 * B12
    if B11 <= 0 or denom <= 0:
        raise DegenerateGeometryError("conic estimate is not positive definite")
    v0 = (B12 * B13 - B11 * B23) / denom
    lam = B33 - (B13 * B13 + v0 * (B12 * B13 - B11 * B23)) / B11
    if lam / B11 <= 0:
        raise DegenerateGeometryError("conic estimate is not positive definite")
    alpha = math.sqrt(lam / B11)
    beta = math.sqrt(lam * B11 / denom)
    u0 = -B13 * alpha * alpha / lam
    return CameraIntrinsics(fx=alpha, fy=beta, cx=u0, cy=v0)


def pose_from_homography(H, intr):
    """Extract ``[R | t]`` from a plane homography given the intrinsics.

    ``R`` is projected onto the nearest rotation; the sign is chosen so the
    target lies in front of the camera.
    """
    A = np.linalg.inv(intr.K) @ H
    scale = 1.0 / np.linalg.norm(A[:, 0])
    if A[2, 2] * scale < 0:
        scale = -scale
    r1 = scale * A[:, 0]
    r2 = scale * A[:, 1]
    t = scale * A[:, 2]
    R = np.column_stack([r1, r2, np.cross(r1, r2)])
    U, _, Vt = np.linalg.svd(R)
    R = U @ Vt
    if np.linalg.det(R) < 0:
        R = U @ np.diag([1.0, 1.0, -1.0]) @ Vt
    return CameraPose(R, t)


def _as_view(view):
    world, image = view
    if isinstance(world, TargetGrid):
        world = world.points
    world = np.asarray(world, dtype=np.float64)[:, :2]
    image = np.asarray(image, dtype=np.float64)
    if world.shape != image.shape or len(world) < 4:
        raise InsufficientDataError("each view needs at least 4 matching (world, image) points")
    return world, image


def _unpack(params, n_views):
    intr = params[:4]
    dist = params[4:9]
    poses = params[9:].reshape(n_views, 6)
    return intr, dist, poses


def _reproject(params, worlds):
    intr_p, dist_p, poses = _unpack(params, len(worlds))
    fx, fy, cx, cy = intr_p
    k1, k2, k3, p1, p2 = dist_p
    out = []
    for world, pose in zip(worlds, poses):
        R = Rotation.from_rotvec(pose[:3]).as_matrix()
        cam = world @ R[:, :2].T + pose[3:]
        x = cam[:, 0] / cam[:, 2]
        y = cam[:, 1] / cam[:, 2]
        r2 = x * x + y * y
        radial = 1.0 + r2 * (k1 + r2 * (k2 + r2 * k3))
        xd = x * radial + 2.0 * p1 * x * y + p2 * (r2 + 2.0 * x * x)
        yd = y * radial + p1 * (r2 + 2.0 * y * y) + 2.0 * p2 * x * y
        out.append(np.column_stack([fx * xd + cx, fy * yd + cy]))
    return out


def calibrate(views, max_iter=50, rtol=1e-10):
    """Calibrate a camera from ``views``, a sequence of ``(world, image)`` pairs.

    ``world`` is a :class:`TargetGrid` or an ``(N, 2)`` array of target-plane
    coordinates; ``image`` holds the matching detected pixel positions.

    Returns
    -------
    CalibrationResult
        ``converged`` is False when the joint refinement hit ``max_iter``;
        the best parameters found are still returned.

    Raises
    ------
    InsufficientDataError
        Fewer than three views.
    DegenerateGeometryError
        Views that cannot fix the intrinsics (e.g. all fronto-parallel).
    """
    views = [_as_view(v) for v in views]
    if len(views) < 3:
        raise InsufficientDataError(f"need at least 3 views, got {len(views)}")
    homographies = []
    for world, image in views:
        H = dlt_homography(world, image)
        homographies.append(refine_homography(H, world, image))
    intr0 = intrinsics_from_homographies(homographies)
    poses0 = [pose_from_homography(H, intr0) for H in homographies]

    worlds = [w for w, _ in views]
    observed = np.concatenate([img for _, img in views])
    x0 = np.concatenate(
        [
            [intr0.fx, intr0.fy, intr0.cx, intr0.cy],
            np.zeros(5),
            *[np.concatenate([p.rotvec, p.translation]) for p in poses0],
        ]
    )

    def residuals(params):
        return (np.concatenate(_reproject(params, worlds)) - observed).ravel()

    fit = levenberg_marquardt(residuals, x0, max_iter=max_iter, rtol=rtol)
    intr_p, dist_p, pose_p = _unpack(fit.x, len(views))
    intr = CameraIntrinsics(*map(float, intr_p))
    dist = DistortionCoeffs(*map(float, dist_p))
    poses = [CameraPose.from_rotvec(p[:3], p[3:]) for p in pose_p]
    projected = _reproject(fit.x, worlds)
    errors = [np.linalg.norm(proj - img, axis=1) for proj, (_, img) in zip(projected, views)]
    return CalibrationResult(
        intrinsics=intr,
        distortion=dist,
        poses=poses,
        per_view_rms=[float(np.sqrt(np.mean(e**2))) for e in errors],
        mean_reprojection_error=float(np.mean(np.concatenate(errors))),
        converged=fit.converged,
        iterations=fit.iterations,
    )


def reprojection_errors(result, views):
    """Per-point reprojection distance (pixels) of ``views`` under ``result``."""
    out = []
    for (world, image), pose in zip(map(_as_view, views), result.poses):
        proj = project_points(world, result.intrinsics, pose, result.distortion)
        out.append(np.linalg.norm(proj - image, axis=1))
    return out


def random_pose(grid, intr, image_size, rng, dist=None, margin=20.0, max_tries=1000):
    """Draw a tilted pose whose projected grid lies inside the image."""
    width, height = image_size
    center = np.array([(grid.cols - 1) * grid.spacing / 2, (grid.rows - 1) * grid.spacing / 2, 0.0])
    extent = max(grid.cols - 1, grid.rows - 1) * grid.spacing
    for _ in range(max_tries):
        tilt = rng.uniform(np.radians(12), np.radians(35), size=2) * rng.choice([-1, 1], size=2)
        spin = rng.uniform(-np.radians(15), np.radians(15))
        R = Rotation.from_euler("xyz", [tilt[0], tilt[1], spin]).as_matrix()
        depth = intr.fx * extent / rng.uniform(380.0, 560.0)
        offset = rng.uniform(-0.12, 0.12, size=2) * depth
        t = np.array([offset[0], offset[1], depth]) - R @ center
        pose = CameraPose(R, t)
        uv = project_points(grid.points3d, intr, pose, dist)
        if (
            uv[:, 0].min() >= margin
            and uv[:, 1].min() >= margin
            and uv[:, 0].max() <= width - 1 - margin
            and uv[:, 1].max() <= height - 1 - margin
        ):
            return pose
    raise RuntimeError("could not place the target inside the image")


def make_synthetic_views(
    intr=REFERENCE_INTRINSICS,
    dist=REFERENCE_DISTORTION,
    n_views=5,
    grid=None,
    image_size=REFERENCE_IMAGE_SIZE,
    noise=0.0,
    seed=0,
):
    """Simulate detections of an LED grid seen from ``n_views`` random poses.

    Returns ``(views, poses)`` where each view is ``(grid.points, image_xy)``.
    """
    grid = grid or TargetGrid()
    rng = np.random.default_rng(seed)
    views, poses = [], []
    for _ in range(n_views):
        pose = random_pose(grid, intr, image_size, rng, dist)
        uv = project_points(grid.points3d, intr, pose, dist)
        if noise:
            uv = uv + rng.normal(scale=noise, size=uv.shape)
        views.append((grid.points.copy(), uv))
        poses.append(pose)
    return views, poses


def read_centroid_csv(path):
    """Read a view file with lines ``wx,wy,ix,iy``; returns ``(world, image)``."""
    try:
        data = np.loadtxt(path, delimiter=",", ndmin=2, comments="#")
    except ValueError as exc:
        raise FileFormatError(f"{path}: {exc}") from None
    if data.shape[1] != 4:
        raise FileFormatError(f"{path}: expected 4 columns wx,wy,ix,iy")
    return data[:, :2], data[:, 2:]


def write_centroid_csv(world, image, path):
    tmp = f"{os.fspath(path)}.tmp{os.getpid()}"
    with open(tmp, "w") as fh:
        for (wx, wy), (ix, iy) in zip(world, image):
            fh.write(f"{float(wx)!r},{float(wy)!r},{float(ix)!r},{float(iy)!r}\n")
    os.replace(tmp, path)


class CameraCalibrator(BaseEstimator):
    """Estimator wrapper around :func:`calibrate`.

    ``fit`` takes a list of ``(world, image)`` views. Fitted attributes
    follow the usual trailing-underscore convention.

    Parameters
    ----------
    max_iter : int, default=50
        Cap on joint refinement iterations.
    tol : float, default=1e-10
        Relative cost decrease below which refinement stops.
    """

    def __init__(self, max_iter=50, tol=1e-10):
        self.max_iter = max_iter
        self.tol = tol

    def fit(self, X, y=None):
        result = calibrate(X, max_iter=self.max_iter, rtol=self.tol)
        self.result_ = result
        self.intrinsics_ = result.intrinsics
        self.distortion_ = result.distortion
        self.poses_ = result.poses
        self.per_view_rms_ = np.asarray(result.per_view_rms)
        self.converged_ = result.converged
        return self

    def score(self, X, y=None):
        """Negative mean reprojection error of the fitted poses on ``X``."""
        errors = reprojection_errors(self.result_, X)
        return -float(np.mean(np.concatenate(errors)))
