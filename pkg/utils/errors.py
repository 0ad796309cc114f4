"""Exception types raised across densitylab.

Validation problems subclass ``ValueError`` and map to CLI exit code 2;
numerical failures subclass ``RuntimeError`` and map to exit code 3.
"""


class DensityLabError(Exception):
    """Base class for every densitylab error."""

    code = "error"


class ValidationError(DensityLabError, ValueError):
    """Input does not satisfy an operation's precondition."""

    code = "invalid_input"


class ComputationError(DensityLabError, RuntimeError):
    """A numerical routine could not produce a trustworthy result."""

    code = "compute_failed"


class NonSquare(ValidationError):
    code = "non_square"


class NotHermitian(ValidationError):
    code = "not_hermitian"


class DimensionMismatch(ValidationError):
    code = "dimension_mismatch"


class NotAFrame(ValidationError):
    code = "not_a_frame"


class NotRiesz(ValidationError):
    code = "not_riesz"


class GammaNotInLattice(ValidationError):
    code = "gamma_not_in_lattice"


class InvalidLattice(ValidationError):
    code = "invalid_lattice"


class OffGridShift(ValidationError):
    code = "off_grid_shift"


class InvalidDensity(ValidationError):
    code = "invalid_density"


class AlphaOutOfRange(ValidationError):
    code = "alpha_out_of_range"


class SingularBasis(ValidationError):
    code = "singular_basis"


class UnsupportedField(ValidationError):
    code = "unsupported_field"


class InvalidInvariant(ValidationError):
    code = "invalid_invariant"


class ConfigInvalid(ValidationError):
    """Raised with the full list of problems found in an experiment config."""

    code = "config_invalid"

    def __init__(self, errors):
        if isinstance(errors, str):
            errors = [errors]
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


class QuadratureFailure(ComputationError):
    code = "quadrature_failure"


class ComputeFailed(ComputationError):
    code = "compute_failed"
