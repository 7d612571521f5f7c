"""Exception hierarchy shared by all lut_softmax modules."""


class LutSoftmaxError(Exception):
    """Base class for every error raised by this package."""


class EmptyInput(LutSoftmaxError):
    pass


class NonFiniteInput(LutSoftmaxError):
    pass


class InvalidStep(LutSoftmaxError):
    pass


class InvalidScale(LutSoftmaxError):
    pass


class InvalidBoundary(LutSoftmaxError):
    pass


class InvalidParams(LutSoftmaxError):
    pass


class InvalidRange(LutSoftmaxError):
    pass


class MissingLut(LutSoftmaxError):
    pass


class AccumulatorOverflow(LutSoftmaxError):
    pass


class ExpOverflow(LutSoftmaxError):
    """Unnormalized exponential sum left the finite float range."""


class LengthMismatch(LutSoftmaxError):
    pass


class ShapeMismatch(LutSoftmaxError):
    pass


class MalformedHeader(LutSoftmaxError):
    pass


class ChecksumMismatch(LutSoftmaxError):
    pass


class UnsupportedVersion(LutSoftmaxError):
    pass
