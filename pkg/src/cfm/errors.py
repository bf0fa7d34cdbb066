"""Exception hierarchy shared by all modules."""


class CFMError(Exception):
    """Base class for every error raised by the package."""


class AmbiguousClosestPoint(CFMError):
    pass


class CornerPoint(CFMError):
    """Frame requested at a parameter where the curve is only C0."""


class CoverageFailure(CFMError):
    """A region does not contain every opposite-side tap of its owner node."""

    def __init__(self, node, message=None):
        self.node = node
        super().__init__(message or f"region for node {node} misses opposite-side taps")


class EmptyInterface(CFMError):
    pass


class IllConditioned(CFMError):
    def __init__(self, region_id, cond):
        self.region_id = region_id
        self.cond = cond
        super().__init__(f"region {region_id}: cond(M) = {cond:.3e}")


class MissingCorrection(CFMError):
    pass


class OutOfBox(CFMError):
    pass


class UnsupportedOrder(CFMError):
    pass


class InstabilityDetected(CFMError):
    def __init__(self, step, time, message="non-finite or unbounded solution"):
        self.step = step
        self.time = time
        super().__init__(f"step {step} (t={time:.6g}): {message}")
