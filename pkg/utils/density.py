"""Density engine: co-volumes, formal dimensions, Kleppner's condition and the trichotomy classifier.

For the Heisenberg cocycle on a lattice Gamma = A Z^{2d}, an element n is
sigma-regular exactly when (A^T J A) n is an integer vector, so Kleppner's
condition holds iff no nonzero integer n has that property.
"""
import itertools
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
import sympy
from sympy.matrices.normalforms import hermite_normal_form

from utils.errors import InvalidInvariant, SingularBasis, UnsupportedField
from utils.exact_field import ExactScalar

logger = logging.getLogger(__name__)

HOLDS = "holds"
FAILS = "fails"
UNKNOWN = "unknown"
HOLDS_UP_TO_RADIUS = "holds_up_to_radius"

PARSEVAL_FRAME_EXISTS = "parseval_frame_exists"
ONB_EXISTS = "onb_exists"
ON_SEQUENCE_EXISTS = "on_sequence_exists"
NO_CYCLIC_VECTOR = "no_cyclic_vector"
NO_SEPARATING_VECTOR = "no_separating_vector"
NO_RIESZ_VECTOR = "no_riesz_vector"

TRICHOTOMY_TABLE = {
    "subcritical": frozenset({PARSEVAL_FRAME_EXISTS, NO_SEPARATING_VECTOR}),
    "critical": frozenset({ONB_EXISTS}),
    "supercritical": frozenset({ON_SEQUENCE_EXISTS, NO_CYCLIC_VECTOR}),
}

# Float invariants without an explicit error bar get this one.
DEFAULT_FLOAT_ERROR = 1e-9


@dataclass(frozen=True)
class PiMultiple:
    """coefficient * pi**pi_power with an exact rational coefficient."""

    coefficient: Fraction
    pi_power: int = 0

    def __mul__(self, other):
        return PiMultiple(self.coefficient * other.coefficient, self.pi_power + other.pi_power)

    def __float__(self):
        return float(self.coefficient) * math.pi ** self.pi_power

    def exact(self):
        """The value as a Fraction when the powers of pi cancel, otherwise None."""
        return self.coefficient if self.pi_power == 0 else None

    def __str__(self):
        if self.pi_power == 0:
            return str(self.coefficient)
        if self.pi_power == 1:
            return f"{self.coefficient}*pi"
        return f"{self.coefficient}*pi^{self.pi_power}"


def exact_rational(value):
    """Fraction for ints, Fractions and floats written in decimal."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    return Fraction(str(value))


def formal_dimension(model, alpha=None):
    """
    Formal dimension of the registered discrete series models.

    Args:
        model: 'heisenberg', 'bergman' (lattice in PSL(2,R)) or
            'bergman_central' (lattice in SL(2,R) containing -I)
        alpha: Bergman weight

    Returns:
        PiMultiple
    """
    if model == "heisenberg":
        return PiMultiple(Fraction(1))
    if model == "bergman":
        return PiMultiple((exact_rational(alpha) - 1) / 4, -1)
    if model == "bergman_central":
        return PiMultiple((exact_rational(alpha) - 1) / 8, -1)
    raise UnsupportedField(f"No formal dimension registered for model {model!r}")


@dataclass(frozen=True)
class SymplecticLattice:
    """Basis A of Gamma = A Z^{2d}, rows given top to bottom."""

    basis: tuple

    def __post_init__(self):
        rows = tuple(tuple(row) for row in self.basis)
        size = len(rows)
        if size == 0 or size % 2 or any(len(row) != size for row in rows):
            raise SingularBasis(f"Basis must be a nonempty 2d x 2d matrix, got {size} rows")
        object.__setattr__(self, "basis", rows)

    @property
    def dim(self):
        return len(self.basis)

    @property
    def d(self):
        return self.dim // 2

    @property
    def exact(self):
        return all(isinstance(x, (ExactScalar, Fraction, int)) for row in self.basis for x in row)

    @property
    def separable(self):
        return all(
            _is_zero(self.basis[i][j])
            for i in range(self.dim)
            for j in range(self.dim)
            if i != j
        )

    def exact_basis(self):
        return [[ExactScalar.of(x) for x in row] for row in self.basis]

    def float_basis(self):
        return np.array([[float(x) for x in row] for row in self.basis])


def _is_zero(value):
    if isinstance(value, ExactScalar):
        return value.is_zero()
    return value == 0


def _determinant(matrix):
    # Laplace expansion along the first row; sizes here are at most 4 x 4.
    if len(matrix) == 1:
        return matrix[0][0]
    total = ExactScalar()
    for j, entry in enumerate(matrix[0]):
        if entry.is_zero():
            continue
        minor = [row[:j] + row[j + 1:] for row in matrix[1:]]
        term = entry * _determinant(minor)
        total = total + term if j % 2 == 0 else total - term
    return total


def covolume(lattice):
    """
    |det A|, exact when every entry is exact and the arithmetic stays in Q(theta).

    Returns:
        ExactScalar or float
    """
    if lattice.exact:
        try:
            det = abs(_determinant(lattice.exact_basis()))
        except UnsupportedField as e:
            logger.info("Exact determinant unavailable (%s); using floating point", e)
        else:
            if det.is_zero():
                raise SingularBasis("Basis is singular: determinant is 0")
            return det

    basis = lattice.float_basis()
    det = abs(float(np.linalg.det(basis)))
    scale = float(np.max(np.abs(basis))) ** lattice.dim
    if det <= 1e-14 * max(scale, 1.0):
        raise SingularBasis(f"Basis is numerically singular: |det| = {det:.3e}")
    return det


def _symplectic_form(lattice):
    """M = A^T J A with J = [[0, I], [-I, 0]]."""
    A = lattice.exact_basis()
    n, d = lattice.dim, lattice.d
    J = [[0] * n for _ in range(n)]
    for i in range(d):
        J[i][d + i] = 1
        J[d + i][i] = -1
    JA = [[sum((A[k][j] * J[i][k] for k in range(n) if J[i][k]), ExactScalar()) for j in range(n)] for i in range(n)]
    return [[sum((A[k][i] * JA[k][j] for k in range(n)), ExactScalar()) for j in range(n)] for i in range(n)]


def _split(M):
    """Rational and theta parts of M as sympy matrices."""
    theta = next((x.theta for row in M for x in row if x.theta is not None), None)
    R = sympy.Matrix([[sympy.Rational(x.rational.numerator, x.rational.denominator) for x in row] for row in M])
    T = sympy.Matrix([[sympy.Rational(x.coeff.numerator, x.coeff.denominator) for x in row] for row in M])
    return R, T, theta


def _is_witness(R, T, n):
    n = sympy.Matrix(n)
    return n != sympy.zeros(*n.shape) and all(v == 0 for v in T * n) and all(v.is_integer for v in R * n)


@dataclass(frozen=True)
class KleppnerResult:
    status: str
    witness: tuple = None
    method: str = "exact"
    radius: int = None
    note: str = ""

    def to_dict(self):
        return {
            "status": self.status,
            "witness": list(self.witness) if self.witness is not None else None,
            "method": self.method,
            "radius": self.radius,
            "note": self.note,
        }


def _integer_kernel(T):
    """Columns spanning ker(T) over Q, cleared to primitive integer vectors and put in Hermite normal form."""
    columns = []
    for vector in T.nullspace():
        denominator = sympy.ilcm(1, *[sympy.Rational(v).q for v in vector])
        scaled = [int(v * denominator) for v in vector]
        content = math.gcd(*scaled)
        columns.append([v // content for v in scaled])
    if not columns:
        return []
    K = sympy.Matrix(columns).T
    try:
        H = hermite_normal_form(K)
    except Exception as e:  # sympy raises several types on degenerate shapes
        logger.debug("Hermite normal form failed (%s); keeping the raw kernel basis", e)
        H = K
    kernel = [list(H.col(j)) for j in range(H.cols) if any(H.col(j))]
    return kernel or [list(K.col(j)) for j in range(K.cols)]


def kleppner_check(lattice):
    """
    Decide Kleppner's condition for the Heisenberg cocycle exactly.

    Splits M = A^T J A into R + theta * T. Since 1 and theta are independent
    over Q, M n is integral iff T n = 0 and R n is integral. Every integer
    kernel vector k of T yields the witness t * k with t the common
    denominator of R k.

    Args:
        lattice: SymplecticLattice with exact entries

    Returns:
        KleppnerResult
    """
    if not lattice.exact:
        return KleppnerResult(UNKNOWN, method="skipped", note="floating-point basis; Kleppner is not decidable from floats")
    if lattice.d > 1 and not lattice.separable:
        return KleppnerResult(UNKNOWN, method="skipped", note="non-separable basis with d > 1")

    M = _symplectic_form(lattice)
    R, T, theta = _split(M)
    kernel = _integer_kernel(T)
    if not kernel:
        logger.debug("theta part of A^T J A is nonsingular over Q(%s)", theta)
        return KleppnerResult(HOLDS, note=f"theta part of A^T J A is nonsingular (theta = {theta})")

    candidates = []
    for column in kernel:
        image = R * sympy.Matrix(column)
        t = sympy.ilcm(1, *[sympy.Rational(v).q for v in image])
        candidates.append(tuple(int(t * v) for v in column))
    witness = min(candidates, key=lambda n: (max(abs(v) for v in n), sum(abs(v) for v in n), tuple(-v for v in n)))
    if not _is_witness(R, T, witness):
        raise UnsupportedField(f"Witness {witness} failed verification")
    return KleppnerResult(FAILS, witness=witness, note="sigma-regular element found")


def _integer_scaled(matrix):
    denominator = int(sympy.ilcm(1, *[sympy.Rational(v).q for v in matrix]))
    scaled = np.array([[int(v * denominator) for v in matrix.row(i)] for i in range(matrix.rows)], dtype=object)
    return scaled, denominator


def _search_order(dim, radius):
    grid = np.array(list(itertools.product(range(-radius, radius + 1), repeat=dim)), dtype=np.int64)
    grid = grid[np.any(grid != 0, axis=1)]
    linf = np.max(np.abs(grid), axis=1)
    l1 = np.sum(np.abs(grid), axis=1)
    keys = tuple(-grid[:, j] for j in range(dim - 1, -1, -1)) + (l1, linf)
    return grid[np.lexsort(keys)]


def kleppner_brute(lattice, radius=10):
    """
    Exhaustive search for a sigma-regular n with ||n||_inf <= radius.

    Candidates are visited by increasing sup norm, then l1 norm, then
    decreasing lexicographic order, so the first witness is canonical.

    Returns:
        KleppnerResult: FAILS with a witness, or HOLDS_UP_TO_RADIUS
    """
    if not lattice.exact:
        return KleppnerResult(UNKNOWN, method="brute", radius=radius, note="floating-point basis")
    R, T, _ = _split(_symplectic_form(lattice))
    R_int, R_den = _integer_scaled(R)
    T_int, _ = _integer_scaled(T)
    candidates = _search_order(lattice.dim, radius)

    # object dtype keeps products exact for large denominators
    cand = candidates.astype(object)
    rational_ok = np.all((cand @ R_int.T) % R_den == 0, axis=1)
    theta_ok = np.all(cand @ T_int.T == 0, axis=1)
    hits = np.flatnonzero(rational_ok & theta_ok)
    if hits.size:
        witness = tuple(int(v) for v in candidates[hits[0]])
        return KleppnerResult(FAILS, witness=witness, method="brute", radius=radius)
    return KleppnerResult(HOLDS_UP_TO_RADIUS, method="brute", radius=radius, note=f"no witness with sup norm <= {radius}")


def kleppner_agrees(exact, brute):
    """True when a brute-force search of radius R is consistent with the exact decision."""
    if brute.status == FAILS:
        return exact.status == FAILS
    if exact.status == HOLDS:
        return True
    return exact.status == FAILS and max(abs(v) for v in exact.witness) > brute.radius


@dataclass(frozen=True)
class Verdict:
    invariant: object
    kleppner: str
    regime: str
    claims: frozenset = field(default_factory=frozenset)
    caveats: tuple = ()
    invariant_error: float = 0.0

    def to_dict(self):
        exact = not isinstance(self.invariant, float)
        return {
            "invariant": str(self.invariant) if exact else None,
            "invariant_float": float(self.invariant),
            "invariant_error": self.invariant_error,
            "exact": exact,
            "kleppner": self.kleppner,
            "regime": self.regime,
            "claims": sorted(self.claims),
            "caveats": list(self.caveats),
        }


def _regime(invariant, error):
    if isinstance(invariant, float):
        if abs(invariant - 1.0) <= error:
            return "undecided"
        return "subcritical" if invariant < 1.0 else "supercritical"
    sign = (ExactScalar.of(invariant) - 1).sign()
    return {-1: "subcritical", 0: "critical", 1: "supercritical"}[sign]


def classify(invariant, kleppner, contains_center=False, error=None):
    """
    Trichotomy verdict for the density invariant vol(G/Gamma) * d_pi.

    Args:
        invariant: ExactScalar, Fraction, int or float
        kleppner: 'holds', 'fails' or 'unknown'
        contains_center: lattice in SL(2,R) containing -I
        error: error bar for float invariants

    Returns:
        Verdict
    """
    if kleppner == HOLDS_UP_TO_RADIUS:
        kleppner = UNKNOWN
    if kleppner not in (HOLDS, FAILS, UNKNOWN):
        raise InvalidInvariant(f"Unknown Kleppner status {kleppner!r}")
    if isinstance(invariant, (np.floating, float)):
        invariant = float(invariant)
        if not math.isfinite(invariant) or invariant <= 0:
            raise InvalidInvariant(f"Invariant must be a positive finite number, got {invariant}")
        error = DEFAULT_FLOAT_ERROR if error is None else float(error)
    else:
        if isinstance(invariant, int):
            invariant = Fraction(invariant)
        if ExactScalar.of(invariant).sign() <= 0:
            raise InvalidInvariant(f"Invariant must be positive, got {invariant}")
        error = 0.0

    regime = _regime(invariant, error)
    caveats = []
    if regime == "undecided":
        claims = frozenset()
        caveats.append("invariant_within_error_of_critical")
    elif kleppner == HOLDS:
        claims = TRICHOTOMY_TABLE[regime]
    else:
        # Kleppner-free necessities only: cyclic => invariant <= 1, Riesz => invariant >= 1.
        claims = {
            "subcritical": frozenset({NO_RIESZ_VECTOR}),
            "critical": frozenset(),
            "supercritical": frozenset({NO_CYCLIC_VECTOR}),
        }[regime]
        caveats.append(f"kleppner_{kleppner}_existence_claims_withheld")
        caveats.append("non_kleppner_counterexample_sl2r_center_threshold_one_half")
    if contains_center:
        caveats.append("center_threshold_halves: completeness iff vol*d' <= 1/2 with d' = (alpha-1)/(8*pi)")

    verdict = Verdict(
        invariant=invariant,
        kleppner=kleppner,
        regime=regime,
        claims=claims,
        caveats=tuple(caveats),
        invariant_error=error,
    )
    logger.debug("classify %s kleppner=%s -> %s", invariant, kleppner, sorted(claims))
    return verdict


def heisenberg_invariant(lattice):
    """vol * d_pi with d_pi = 1 for the Heisenberg group."""
    return covolume(lattice)
