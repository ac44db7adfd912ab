"""Exception hierarchy shared by the package."""


class SynergyError(Exception):
    """Base class for all errors raised by this package."""


class DimensionError(SynergyError, ValueError):
    pass


class DivergenceError(SynergyError):
    """Forward integration produced a non-finite state."""

    def __init__(self, step, time, signals=None):
        self.step = int(step)
        self.time = float(time)
        self.signals = list(signals) if signals is not None else []
        msg = f"integration diverged at step {self.step} (t = {self.time:.6g} s)"
        if self.signals:
            msg += f" for signal(s) {self.signals}"
        super().__init__(msg)


class ReachabilityError(SynergyError, ValueError):
    """Point outside the workspace annulus; ``deficit`` is the distance [m] to it."""

    def __init__(self, point, deficit):
        self.point = tuple(float(v) for v in point)
        self.deficit = float(deficit)
        super().__init__(f"point {self.point} is unreachable (outside workspace by {self.deficit:.6g} m)")


class RejectedProtoTaskError(SynergyError):
    def __init__(self, target, err_I, threshold):
        self.target = tuple(float(v) for v in target)
        self.err_I = float(err_I)
        self.threshold = float(threshold)
        super().__init__(
            f"proto-task at {self.target} rejected: err_I = {self.err_I:.3g} > {self.threshold:.3g}"
        )


class SaturationError(SynergyError):
    """No grid target is far enough from the existing proto-tasks."""


class FingerprintMismatchError(SynergyError):
    pass
