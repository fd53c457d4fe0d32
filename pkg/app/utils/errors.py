"""
Exception hierarchy shared by the library and the command line.

InputError maps to exit code 2, NumericalError to exit code 1.
"""


class SpecboundError(Exception):
    """Base class for every error raised by specbound"""
    exit_code = 1


class InputError(SpecboundError, ValueError):
    """Bad input: malformed files, invalid parameters, mismatched shapes"""
    exit_code = 2


class MalformedCsvError(InputError):
    def __init__(self, path, message, row=None, column=None):
        self.path = str(path)
        self.row = row
        self.column = column
        where = ''
        if row is not None:
            where += f' row {row}'
        if column is not None:
            where += f' column {column!r}'
        super().__init__(f"{self.path}:{where} {message}" if where else f"{self.path}: {message}")


class DuplicatePointError(InputError):
    pass


class DimensionMismatchError(InputError):
    pass


class ConfigFileError(InputError):
    pass


class NumericalError(SpecboundError):
    """A computation could not be carried out or failed its own checks"""
    exit_code = 1


class SingularSystemError(NumericalError):
    def __init__(self, factorization, detail=''):
        self.factorization = factorization
        message = f"{factorization} failed"
        if detail:
            message += f": {detail}"
        super().__init__(message)


class DenseGuardError(NumericalError):
    def __init__(self, grid_size, limit):
        self.grid_size = grid_size
        self.limit = limit
        super().__init__(
            f"dense path refused: grid has {grid_size} indices (limit {limit}); "
            f"use path='dual' instead"
        )


class NonHermitianError(NumericalError):
    def __init__(self, imag_magnitude, tolerance):
        self.imag_magnitude = float(imag_magnitude)
        self.tolerance = tolerance
        super().__init__(
            f"field requested as real but imaginary part reached {self.imag_magnitude:.3e} "
            f"(tolerance {tolerance:.0e})"
        )


class QuadratureError(NumericalError):
    def __init__(self, value, error_estimate, detail=''):
        self.value = value
        self.error_estimate = error_estimate
        super().__init__(
            f"quadrature did not converge: value {value:.6e}, error estimate {error_estimate:.3e}"
            + (f" ({detail})" if detail else '')
        )


class DiagonalDominanceError(NumericalError):
    def __init__(self, min_distance, sigma):
        self.min_distance = min_distance
        self.sigma = sigma
        super().__init__(
            f"Gaussian kernel matrix is not strictly diagonally dominant: "
            f"min pairwise distance {min_distance:.6g}, sigma {sigma:.6g}"
        )


class BandLimitError(NumericalError):
    def __init__(self, band, required):
        self.band = band
        self.required = required
        super().__init__(
            f"frequency band {band:.6g} too small, need at least {required:.6g} "
            f"(band_limit * mesh)"
        )


class EmptyProbeSetError(NumericalError):
    pass


class HalfLevelError(NumericalError):
    pass


class StabilityError(NumericalError):
    def __init__(self, dt, max_dt):
        self.dt = dt
        self.max_dt = max_dt
        super().__init__(f"time step {dt:.6g} violates the stability guard; maximum admissible dt is {max_dt:.6g}")


class NotConvergedError(NumericalError):
    pass


class InconsistentEvidenceError(NumericalError):
    pass
