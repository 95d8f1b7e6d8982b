"""Domain error hierarchy for the kernel library"""


class CrossKernelError(Exception):
    """Base class for all kernel library errors"""


class PrimalityError(CrossKernelError, ValueError):
    """Raised when a modulus fails the primality check"""


class ParameterRangeError(CrossKernelError, ValueError):
    """Raised when a value falls outside its admissible range"""


class RootOfUnityError(CrossKernelError, ValueError):
    """Raised when a requested root of unity cannot exist or has the wrong order"""


class ShapeError(CrossKernelError, ValueError):
    """Raised on mismatched lengths or non-conformable matrix shapes"""


class PrecisionError(CrossKernelError, ValueError):
    """Raised when an accumulator or merge would overflow its word width"""


class PrimeExhaustionError(CrossKernelError, ValueError):
    """Raised when no prime with the requested properties exists in range"""


class ConfigurationError(CrossKernelError, ValueError):
    """Raised on inconsistent bases, plans or settings"""


class SerializationError(CrossKernelError, ValueError):
    """Raised when a serialized container is malformed"""


class UsageError(CrossKernelError, ValueError):
    """Raised for invalid user-facing requests (unknown names, bad flags)"""


class BatCompileError(CrossKernelError, RuntimeError):
    """Raised when the fold/carry compile loop fails to converge"""


class VerificationError(CrossKernelError, RuntimeError):
    """Raised when a kernel output diverges from its oracle"""

    def __init__(self, message: str, index=None, expected=None, actual=None):
        super().__init__(message)
        self.index = index
        self.expected = expected
        self.actual = actual
