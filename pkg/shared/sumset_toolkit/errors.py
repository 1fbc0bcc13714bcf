"""
Exception types raised by the sumset toolkit services
"""


class DimensionMismatchError(ValueError):
    """Points or sets of differing dimension were combined"""


class NotMonotoneError(ValueError):
    """A set that must be monotone is not"""

    def __init__(self, coordinate: int, label: str = "set"):
        self.coordinate = coordinate
        self.label = label
        super().__init__(f"{label} is not monotone: coordinate {coordinate} decreases along the sorted order")


class ClusterAuditError(ValueError):
    """A cluster descriptor does not hold for its set"""


class SubsetViolationError(ValueError):
    """Query sets are not contained in the preprocessed universes"""


class PreconditionError(ValueError):
    """An operation precondition does not hold"""


class FlattenOverflowError(OverflowError):
    """Flattened coordinates would leave exact 64-bit range"""

    def __init__(self, magnitude: int):
        self.magnitude = magnitude
        super().__init__(f"flattened magnitude {magnitude} does not fit in 63 bits")


class ConvolutionCapError(ValueError):
    """Dense vector length above the configured cap"""


class ConstructionError(RuntimeError):
    """A randomized or deterministic construction gave up"""
