"""Finite Weyl-Heisenberg operators on C^N.

pi(k, l) = M_l T_k with (M_l f)(t) = w^{l t} f(t), (T_k f)(t) = f(t - k) and
w = exp(2 pi i / N). Products obey

    pi(k, l) pi(k', l') = w^{-l' k} pi(k + k', l + l'),

equivalently pi(k + k', l + l') = w^{l' k} pi(k, l) pi(k', l').

Finite abelian lattices never satisfy Kleppner's condition, so this module
checks identities of the frame algebra and says nothing about existence.
"""
import logging
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property

import numpy as np

from utils import frame_core
from utils.errors import DimensionMismatch, GammaNotInLattice, InvalidLattice

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class FiniteWHRep:
    N: int

    def __post_init__(self):
        if int(self.N) < 1:
            raise InvalidLattice(f"N must be at least 1, got {self.N}")

    @property
    def omega(self):
        return np.exp(2j * np.pi / self.N)

    def root(self, power):
        """w**power with the exponent reduced mod N first."""
        return np.exp(2j * np.pi * (int(power) % self.N) / self.N)


@dataclass(frozen=True)
class FiniteLattice:
    """Separable lattice aZ_N x bZ_N."""

    N: int
    a: int
    b: int

    def __post_init__(self):
        for name, step in (("a", self.a), ("b", self.b)):
            if step < 1 or self.N % step:
                raise InvalidLattice(f"{name}={step} does not divide N={self.N}")

    @cached_property
    def points(self):
        return tuple(
            (k, l)
            for k in range(0, self.N, self.a)
            for l in range(0, self.N, self.b)
        )

    def index(self, point):
        k, l = point[0] % self.N, point[1] % self.N
        if k % self.a or l % self.b:
            raise GammaNotInLattice(f"{tuple(point)} is not in {self.a}Z_{self.N} x {self.b}Z_{self.N}")
        return (k // self.a) * (self.N // self.b) + l // self.b

    @classmethod
    def full(cls, N):
        return cls(N, 1, 1)


@dataclass(frozen=True, eq=False)
class WHCoefficients:
    values: np.ndarray
    lattice: FiniteLattice

    def __post_init__(self):
        values = np.array(self.values, dtype=complex, copy=True).reshape(-1)
        if values.shape[0] != len(self.lattice.points):
            raise DimensionMismatch(
                f"Expected {len(self.lattice.points)} coefficients, got {values.shape[0]}"
            )
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def delta(cls, lattice, point):
        values = np.zeros(len(lattice.points), dtype=complex)
        values[lattice.index(point)] = 1.0
        return cls(values, lattice)


def wh_matrix(rep, k, l):
    """
    Matrix of pi(k, l) = M_l T_k.

    Args:
        rep: FiniteWHRep
        k: time shift (reduced mod N)
        l: frequency shift (reduced mod N)

    Returns:
        numpy.ndarray: unitary N x N matrix
    """
    N = rep.N
    t = np.arange(N)
    modulation = np.exp(2j * np.pi * ((l * t) % N) / N)
    shift = np.roll(np.eye(N, dtype=complex), int(k) % N, axis=0)
    return modulation[:, None] * shift


def cocycle(rep, gamma, gamma_prime):
    """Phase c with pi(gamma) pi(gamma') = c * pi(gamma + gamma')."""
    k, _ = gamma
    _, l_prime = gamma_prime
    return rep.root(-l_prime * k)


def wh_system(rep, lat, g):
    g = np.asarray(g, dtype=complex)
    if g.shape != (rep.N,):
        raise DimensionMismatch(f"Window of shape {g.shape} does not live in C^{rep.N}")
    vectors = np.array([wh_matrix(rep, k, l) @ g for k, l in lat.points])
    return frame_core.FrameSystem(dim=rep.N, vectors=vectors, labels=lat.points)


def synthesize_operator(rep, lat, coefficients):
    """pi(c) = sum_gamma c_gamma pi(gamma)."""
    result = np.zeros((rep.N, rep.N), dtype=complex)
    for value, (k, l) in zip(coefficients.values, lat.points):
        if value != 0:
            result += value * wh_matrix(rep, k, l)
    return result


def twisted_conjugation(rep, lat, gamma, coefficients):
    """
    Coefficients of pi(gamma) pi(c) pi(gamma)^*.

    The lattice is abelian, so each coefficient only picks up the phase
    w^{l k' - l' k} for gamma = (k, l) and gamma' = (k', l').
    """
    lat.index(gamma)
    k, l = gamma
    phases = np.array([rep.root(l * kp - lp * k) for kp, lp in lat.points])
    return WHCoefficients(coefficients.values * phases, lat)


def verify_conjugation(rep, lat, gamma, coefficients):
    """Max entrywise residual of pi(gamma) pi(c) pi(gamma)^* - pi(theta(gamma) c)."""
    twisted = twisted_conjugation(rep, lat, gamma, coefficients)
    u = wh_matrix(rep, *gamma)
    lhs = u @ synthesize_operator(rep, lat, coefficients) @ u.conj().T
    rhs = synthesize_operator(rep, lat, twisted)
    return float(np.max(np.abs(lhs - rhs)))


def expand_operator(rep, operator):
    """
    Expand an N x N matrix in the basis {pi(k, l)}.

    c_{kl} = tr(pi(k, l)^* T) / N.

    Returns:
        WHCoefficients: over the full lattice
    """
    operator = np.asarray(operator, dtype=complex)
    if operator.shape != (rep.N, rep.N):
        raise DimensionMismatch(f"Expected a {rep.N}x{rep.N} matrix, got shape {operator.shape}")
    lattice = FiniteLattice.full(rep.N)
    values = [
        np.vdot(wh_matrix(rep, k, l), operator) / rep.N for k, l in lattice.points
    ]
    return WHCoefficients(np.array(values), lattice)


def finite_density_invariant(rep, lat):
    """N / |Gamma| = ab / N."""
    return Fraction(lat.a * lat.b, rep.N)


def tight_window(rep, lat, g, tol=frame_core.DEFAULT_TOL):
    """
    S^{-1/2} g for the lattice orbit of g.

    The frame operator of a lattice orbit commutes with every pi(gamma), so the
    orbit of this window is exactly parsevalize(wh_system(rep, lat, g)).
    """
    system = wh_system(rep, lat, g)
    tight = frame_core.parsevalize(system, tol)
    return tight.vectors[lat.index((0, 0))].copy()


def wh_report(N, a, b, g, normalize=True, tol=frame_core.DEFAULT_TOL):
    """
    Summary of the orbit pi(aZ_N x bZ_N) g.

    Args:
        N, a, b: lattice parameters
        g: window in C^N
        normalize: rescale g to unit norm first

    Returns:
        dict: invariant, spectral bounds and the parseval/onb flags
    """
    rep = FiniteWHRep(N)
    lat = FiniteLattice(N, a, b)
    g = np.asarray(g, dtype=complex)
    if normalize:
        norm = np.linalg.norm(g)
        if norm == 0:
            raise DimensionMismatch("Window must be nonzero")
        g = g / norm
    system = wh_system(rep, lat, g)
    bounds = frame_core.frame_bounds(system, tol)
    riesz = frame_core.riesz_bounds(system, tol)
    parseval = frame_core.is_parseval(system, tol)
    onb = parseval and len(system) == N and frame_core.orthonormality_defect(system, tol)["gram_defect"] < tol
    invariant = finite_density_invariant(rep, lat)
    logger.info("finite-wh N=%d a=%d b=%d invariant=%s onb=%s", N, a, b, invariant, onb)
    return {
        "N": N,
        "a": a,
        "b": b,
        "invariant": invariant,
        "frame_bounds": bounds.to_dict(),
        "riesz_bounds": riesz.to_dict(),
        "parseval": bool(parseval),
        "onb": bool(onb),
    }
