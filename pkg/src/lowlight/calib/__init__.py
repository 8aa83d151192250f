"""Camera calibration from an LED grid target and lens undistortion."""
from .calibrate import (
    REFERENCE_DISTORTION,
    REFERENCE_IMAGE_SIZE,
    REFERENCE_INTRINSICS,
    CalibrationResult,
    CameraCalibrator,
    calibrate,
    camera_from_dict,
    intrinsics_from_homographies,
    load_camera,
    make_synthetic_views,
    pose_from_homography,
    read_centroid_csv,
    reprojection_errors,
    write_centroid_csv,
)
from .camera import (
    CameraIntrinsics,
    CameraPose,
    DistortionCoeffs,
    TargetGrid,
    distort_normalized,
    project,
    project_points,
    undistort_normalized,
    undistort_points,
)
from .centroids import extract_centroids, order_grid, render_blobs
from .homography import (
    apply_homography,
    dlt_homography,
    normalize_homography,
    refine_homography,
    transfer_cost,
)
from .undistort import Undistorter, remap_bilinear, undistort, undistort_map
