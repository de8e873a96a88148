"""Exception hierarchy shared by all modules."""


class CircRectError(Exception):
    """Base class for every error raised by circrect."""


class BehindCamera(CircRectError):
    pass


class SingularProjection(CircRectError):
    pass


class DegenerateInput(CircRectError):
    pass


class CollinearCameras(CircRectError):
    pass


class AtCenter(CircRectError):
    pass


class NotOnCircle(CircRectError):
    pass


class PointBehindCamera(CircRectError):
    """The o_x correction point lies behind a rectified camera."""


class RectificationFailure(CircRectError):
    def __init__(self, camera_id, cause):
        super().__init__(f"camera {camera_id}: {cause}")
        self.camera_id = camera_id
        self.cause = cause


class AllInvalid(CircRectError):
    pass


class PredictorMismatch(CircRectError):
    pass


class NoOverlap(CircRectError):
    pass


class IllConditioned(CircRectError):
    pass


class TruncatedFile(CircRectError):
    pass


class FormatError(CircRectError):
    """A file failed strict parsing; ``path`` names the offending field."""

    def __init__(self, path, message):
        super().__init__(f"{path}: {message}")
        self.path = path


class StageError(CircRectError):
    """Wraps an error with the pipeline stage that raised it."""

    def __init__(self, stage, cause):
        super().__init__(f"[{stage}] {cause}")
        self.stage = stage
        self.cause = cause
