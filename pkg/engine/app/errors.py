class OUNeumannError(RuntimeError):
    """Base class for failures raised by the numerical services"""


class DimensionMismatch(OUNeumannError, ValueError):
    def __init__(self, expected: int, got: int):
        super().__init__(f"expected a point in R^{expected}, got dimension {got}")
        self.expected = expected
        self.got = got


class NotOnBoundary(OUNeumannError, ValueError):
    def __init__(self, g_value: float, tolerance: float):
        super().__init__(f"|g(x)| = {abs(g_value):.3e} exceeds boundary tolerance {tolerance:.1e}")
        self.g_value = g_value
        self.tolerance = tolerance


class DegenerateGradient(OUNeumannError, ValueError):
    pass


class UnsupportedDomain(OUNeumannError, ValueError):
    pass


class PreconditionError(OUNeumannError, ValueError):
    pass


class ConfigError(OUNeumannError, ValueError):
    pass


class ConvergenceError(OUNeumannError):
    def __init__(self, iterations: int, residual: float, tolerance: float):
        super().__init__(
            f"CG stopped after {iterations} iterations with relative residual "
            f"{residual:.3e} (tolerance {tolerance:.1e})"
        )
        self.iterations = iterations
        self.residual = residual
        self.tolerance = tolerance
