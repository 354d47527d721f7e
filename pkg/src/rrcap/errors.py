"""Exception hierarchy. Every input-side failure derives from RRCapError."""


class RRCapError(ValueError):
    pass


# pointcloud_io
class PlyError(RRCapError):
    pass


class MalformedHeader(PlyError):
    pass


class UnsupportedFormat(PlyError):
    pass


class TruncatedData(PlyError):
    pass


class NonFiniteCoordinate(PlyError):
    pass


class EmptyCloud(RRCapError):
    pass


# projection / saliency
class DegenerateCloud(RRCapError):
    pass


class ScaleTooLarge(RRCapError):
    pass


# payload
class PayloadError(RRCapError):
    pass


class BadMagic(PayloadError):
    pass


class UnsupportedVersion(PayloadError):
    pass


class ChecksumMismatch(PayloadError):
    pass


class Truncated(PayloadError):
    pass


# quality / baselines
class DimensionMismatch(RRCapError):
    pass


class MapSmallerThanWindow(RRCapError):
    pass


class ImageTooSmall(RRCapError):
    pass


class LengthMismatch(RRCapError):
    pass


class ParamMismatch(RRCapError):
    pass


# evalstats
class ConstantInput(RRCapError):
    pass


class DegenerateInput(RRCapError):
    pass


class FitDiverged(RRCapError):
    pass
