"""Finite-dimensional frame algebra.

A ``FrameSystem`` stores its vectors as the rows of an ``(n, dim)`` complex
array. Inner products are linear in the first slot, ``<a, b> = sum(a * conj(b))``.
"""
import logging
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from utils.errors import DimensionMismatch, NonSquare, NotAFrame, NotHermitian, NotRiesz

logger = logging.getLogger(__name__)

DEFAULT_TOL = 1e-10


def _freeze(array):
    array = np.array(array, dtype=complex, copy=True)
    array.setflags(write=False)
    return array


def _as_label(value):
    if isinstance(value, list):
        return tuple(_as_label(v) for v in value)
    return value


@dataclass(frozen=True, eq=False)
class FrameSystem:
    """Indexed family of vectors in C^dim. Repetitions are allowed."""

    dim: int
    vectors: np.ndarray
    labels: tuple = field(default=())

    def __post_init__(self):
        vectors = np.asarray(self.vectors, dtype=complex)
        if vectors.size == 0:
            vectors = vectors.reshape(0, self.dim)
        if vectors.ndim != 2 or vectors.shape[1] != self.dim:
            raise DimensionMismatch(
                f"Expected vectors of length {self.dim}, got array of shape {vectors.shape}"
            )
        if not np.all(np.isfinite(vectors)):
            raise DimensionMismatch("Frame vectors must have finite entries")
        labels = tuple(self.labels) if self.labels else tuple(range(vectors.shape[0]))
        if len(labels) != vectors.shape[0]:
            raise DimensionMismatch(
                f"Got {len(labels)} labels for {vectors.shape[0]} vectors"
            )
        object.__setattr__(self, "vectors", _freeze(vectors))
        object.__setattr__(self, "labels", labels)

    def __len__(self):
        return self.vectors.shape[0]

    @classmethod
    def from_vectors(cls, vectors, labels=()):
        vectors = np.atleast_2d(np.asarray(vectors, dtype=complex))
        return cls(dim=vectors.shape[1], vectors=vectors, labels=labels)

    def with_vectors(self, vectors):
        return FrameSystem(dim=self.dim, vectors=vectors, labels=self.labels)

    def to_json(self):
        return {
            "dim": self.dim,
            "labels": [list(l) if isinstance(l, tuple) else l for l in self.labels],
            "vectors": [
                [[float(z.real), float(z.imag)] for z in row] for row in self.vectors
            ],
        }

    @classmethod
    def from_json(cls, payload):
        dim = int(payload["dim"])
        rows = [[complex(re, im) for re, im in row] for row in payload["vectors"]]
        vectors = np.array(rows, dtype=complex).reshape(len(rows), dim)
        labels = tuple(_as_label(l) for l in payload.get("labels", []))
        return cls(dim=dim, vectors=vectors, labels=labels)


@dataclass(frozen=True)
class SpectralReport:
    """Ascending spectrum of a Hermitian matrix with rank information."""

    eigenvalues: tuple
    min_nonzero: float
    max: float
    rank: int
    tolerance_used: float

    @property
    def lower(self):
        return self.eigenvalues[0] if self.eigenvalues else 0.0

    def to_dict(self):
        return {
            "eigenvalues": list(self.eigenvalues),
            "min_nonzero": self.min_nonzero,
            "max": self.max,
            "rank": self.rank,
            "tolerance_used": self.tolerance_used,
        }


def hermitian_eigen(matrix, tol=DEFAULT_TOL):
    """
    Spectrum of a Hermitian matrix.

    Args:
        matrix: square complex array
        tol: relative tolerance for the symmetry test and for counting rank

    Returns:
        SpectralReport: eigenvalues in ascending order
    """
    matrix = np.asarray(matrix, dtype=complex)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise NonSquare(f"Expected a square matrix, got shape {matrix.shape}")
    if matrix.shape[0] == 0:
        return SpectralReport((), 0.0, 0.0, 0, tol)

    scale = max(1.0, float(np.max(np.abs(matrix))))
    asymmetry = float(np.max(np.abs(matrix - matrix.conj().T)))
    if asymmetry > tol * scale:
        raise NotHermitian(f"Matrix asymmetry {asymmetry:.3e} exceeds tolerance {tol * scale:.3e}")

    eigenvalues = linalg.eigvalsh((matrix + matrix.conj().T) / 2)
    largest = float(np.max(np.abs(eigenvalues)))
    threshold = tol * largest
    above = eigenvalues[eigenvalues > threshold] if largest > 0 else eigenvalues[:0]

    # min_nonzero <= max even when nothing clears the threshold
    return SpectralReport(
        eigenvalues=tuple(float(v) for v in eigenvalues),
        min_nonzero=float(above[0]) if above.size else min(0.0, float(eigenvalues[-1])),
        max=float(eigenvalues[-1]),
        rank=int(above.size),
        tolerance_used=tol,
    )


def gram(system):
    """G[i, j] = <v_j, v_i>."""
    v = system.vectors
    return v.conj() @ v.T


def frame_operator(system):
    """S = sum_i v_i v_i^*."""
    v = system.vectors
    return v.T @ v.conj()


def frame_bounds(system, tol=DEFAULT_TOL):
    return hermitian_eigen(frame_operator(system), tol)


def riesz_bounds(system, tol=DEFAULT_TOL):
    return hermitian_eigen(gram(system), tol)


def is_frame(system, tol=DEFAULT_TOL):
    report = frame_bounds(system, tol)
    return system.dim > 0 and report.rank == system.dim and report.min_nonzero > 0


def is_riesz(system, tol=DEFAULT_TOL):
    report = riesz_bounds(system, tol)
    return report.rank == len(system)


def is_parseval(system, tol=DEFAULT_TOL):
    deviation = np.abs(frame_operator(system) - np.eye(system.dim))
    return bool(deviation.size == 0 or deviation.max() < tol)


def _spectral_power(matrix, power, tol):
    # Directions with eigenvalue below tol * lambda_max are sent to zero.
    eigenvalues, vectors = linalg.eigh(matrix)
    largest = float(np.max(np.abs(eigenvalues))) if eigenvalues.size else 0.0
    keep = eigenvalues > tol * largest
    scaled = np.zeros_like(eigenvalues)
    scaled[keep] = eigenvalues[keep] ** power
    return (vectors * scaled) @ vectors.conj().T


def _require_frame(system, tol):
    report = frame_bounds(system, tol)
    if report.rank != system.dim or report.min_nonzero <= 0:
        raise NotAFrame(
            f"System of {len(system)} vectors has frame-operator rank {report.rank} in dimension {system.dim}"
        )
    return report


def parsevalize(system, tol=DEFAULT_TOL):
    """
    Replace each v_i by S^{-1/2} v_i so that the frame operator becomes the identity.

    Args:
        system: FrameSystem spanning C^dim
        tol: relative rank tolerance

    Returns:
        FrameSystem: Parseval frame with the same labels
    """
    _require_frame(system, tol)
    inv_sqrt = _spectral_power(frame_operator(system), -0.5, tol)
    return system.with_vectors(system.vectors @ inv_sqrt.T)


def orthonormalize_riesz(system, tol=DEFAULT_TOL):
    """S^{-1/2} v_i with S the frame operator restricted to the span of the system."""
    report = riesz_bounds(system, tol)
    if report.rank != len(system):
        raise NotRiesz(
            f"Gram matrix of {len(system)} vectors has rank {report.rank} (smallest eigenvalue {report.lower:.3e})"
        )
    inv_sqrt = _spectral_power(frame_operator(system), -0.5, tol)
    return system.with_vectors(system.vectors @ inv_sqrt.T)


def canonical_dual(system, tol=DEFAULT_TOL):
    _require_frame(system, tol)
    inverse = _spectral_power(frame_operator(system), -1.0, tol)
    return system.with_vectors(system.vectors @ inverse.T)


def analysis(system, f):
    """Coefficients c_i = <f, v_i>."""
    f = np.asarray(f, dtype=complex)
    if f.shape != (system.dim,):
        raise DimensionMismatch(f"Vector of shape {f.shape} does not live in C^{system.dim}")
    return system.vectors.conj() @ f


def synthesis(system, coefficients):
    """Vector sum_i c_i v_i."""
    c = np.asarray(coefficients, dtype=complex)
    if c.shape != (len(system),):
        raise DimensionMismatch(f"Expected {len(system)} coefficients, got shape {c.shape}")
    return system.vectors.T @ c


def frame_inequality_slack(system, samples, report=None, tol=DEFAULT_TOL):
    """
    Evaluate A||f||^2 <= sum |<f, v_i>|^2 <= B||f||^2 directly on sample vectors.

    Args:
        system: FrameSystem
        samples: array of shape (m, dim), one test vector per row
        report: SpectralReport from frame_bounds (computed when omitted)

    Returns:
        tuple: worst lower and upper violations, each <= 0 when the inequality holds
    """
    report = report or frame_bounds(system, tol)
    samples = np.asarray(samples, dtype=complex)
    energy = np.sum(np.abs(samples.conj() @ system.vectors.T) ** 2, axis=1)
    norms = np.sum(np.abs(samples) ** 2, axis=1)
    lower = np.max(report.min_nonzero * norms - energy)
    upper = np.max(energy - report.max * norms)
    return float(lower), float(upper)


def riesz_inequality_slack(system, coefficients, report=None, tol=DEFAULT_TOL):
    """Same as frame_inequality_slack for A||c||^2 <= ||sum c_i v_i||^2 <= B||c||^2."""
    report = report or riesz_bounds(system, tol)
    coefficients = np.asarray(coefficients, dtype=complex)
    energy = np.sum(np.abs(coefficients @ system.vectors) ** 2, axis=1)
    norms = np.sum(np.abs(coefficients) ** 2, axis=1)
    lower = np.max(report.lower * norms - energy)
    upper = np.max(energy - report.max * norms)
    return float(lower), float(upper)


def orthonormality_defect(system, tol=DEFAULT_TOL):
    """
    Check that a Parseval system of unit vectors is orthonormal.

    Returns:
        dict: parseval and unit_norm flags with the max deviation of the Gram matrix from I
    """
    norms = np.linalg.norm(system.vectors, axis=1)
    unit_norm = bool(np.all(np.abs(norms - 1.0) < tol)) if len(system) else True
    defect = float(np.max(np.abs(gram(system) - np.eye(len(system))))) if len(system) else 0.0
    result = {
        "parseval": is_parseval(system, tol),
        "unit_norm": unit_norm,
        "gram_defect": defect,
    }
    logger.debug("orthonormality defect %s", result)
    return result
