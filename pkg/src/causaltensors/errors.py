"""Exception types shared across the package."""


class CausalTensorsError(Exception):
    """Base class for all package-specific errors."""


class InvalidInput(CausalTensorsError):
    """Arguments are malformed: non-finite values, bad enum names, bad ranges."""


class DegenerateData(CausalTensorsError):
    """Data carries no usable variation (constant series, collapsed bins)."""


class InsufficientData(CausalTensorsError):
    """Not enough samples to build the requested windows or counts."""


class ShapeError(CausalTensorsError):
    """Array dimensions of the operands do not line up."""


class SingularChannel(CausalTensorsError):
    """Bayes inversion hit an output symbol with zero probability."""

    def __init__(self, zero_cells, message=None):
        self.zero_cells = list(zero_cells)
        if message is None:
            message = (
                "output pmf has zero entries at (subchannel, output) cells "
                f"{self.zero_cells}; pass fallback='uniform' to repair"
            )
        super().__init__(message)


class NumericalError(CausalTensorsError):
    """A simulation or iteration produced non-finite or out-of-range state."""
