"""Circular rectification of multiview rigs and fast inter-view projection."""

from .camera import (
    CameraParams,
    Extrinsics,
    ImagePoint,
    Intrinsics,
    ProjectionMatrix,
    build_projection,
    invert_projection,
    project_point,
    project_points,
)
from .circle import Circle, FitResult, camera_angle, fit_circle, snap_to_circle
from .projection import (
    CircularPair,
    LinearPair,
    disparity_predict,
    project_circular,
    project_circular_batch,
)
from .rectify import (
    CircularCameraParams,
    RectifiedRig,
    circular_to_full,
    rectified_rotation,
    rectify_intrinsics,
    rectify_rig,
)
from .warp import ViewFrame, WarpedFrame, depth_sample_to_z, fill_holes, warp_view, z_to_depth_sample

__version__ = "0.1.0"
