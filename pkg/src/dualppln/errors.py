"""Exception hierarchy shared by every module of the toolkit."""


class DualPPLNError(Exception):
    """Base class; the CLI maps these to exit status 3."""


class SchemaError(DualPPLNError):
    """Invalid run configuration. Carries the offending field path."""

    def __init__(self, message, path=()):
        self.path = tuple(path)
        where = ".".join(str(p) for p in self.path)
        super().__init__(f"{where}: {message}" if where else message)


class OutOfValidityRange(DualPPLNError, ValueError):
    pass


class NoGuidedMode(DualPPLNError):
    pass


class NonConvergence(DualPPLNError):
    pass


class GeometryMismatch(DualPPLNError, ValueError):
    pass


class ZeroOrderUnsupported(DualPPLNError, ValueError):
    pass


class SingularOrders(DualPPLNError, ValueError):
    pass


class NegativePeriod(DualPPLNError, ValueError):
    pass


class NonPhysical(DualPPLNError, ValueError):
    pass


class EmptyLocus(DualPPLNError):
    pass


class IntegratorFailure(DualPPLNError):
    pass


class ZeroPower(DualPPLNError, ValueError):
    pass


class Unreachable(DualPPLNError):
    pass


class GridTooNarrow(DualPPLNError):
    pass


class DegenerateState(DualPPLNError, ValueError):
    pass
