"""Weighted Bergman spaces A^2_alpha on the upper half-plane and Fuchsian orbits.

The inner product is <f, g> = integral of f conj(g) y^{alpha - 2} dx dy and

    k_w(z) = 2^{alpha-2} pi^{-1} (alpha - 1) i^alpha (z - conj(w))^{-alpha}

reproduces point evaluation: <f, k_w> = f(w), ||k_w||^2 = (alpha - 1) / (4 pi Im(w)^alpha).
"""
import cmath
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy import special

from utils import frame_core
from utils.density import classify, exact_rational, formal_dimension, HOLDS, FAILS
from utils.errors import AlphaOutOfRange, ValidationError
from utils.quadrature import QuadratureParams, complex_dblquad, dblquad, quad

logger = logging.getLogger(__name__)

ORBIT_DEDUP_DISTANCE = 1e-10
BERGMAN_QUADRATURE = QuadratureParams(epsabs=1e-9, epsrel=1e-9, limit=200, max_error=1e-6)


@dataclass(frozen=True)
class UHPoint:
    z: complex

    def __post_init__(self):
        z = complex(self.z)
        if not z.imag > 1e-15:
            raise ValidationError(f"{z} is not in the upper half-plane")
        object.__setattr__(self, "z", z)

    @property
    def x(self):
        return self.z.real

    @property
    def y(self):
        return self.z.imag

    def to_dict(self):
        return {"re": self.x, "im": self.y}


def hyperbolic_distance(z, w):
    z, w = complex(getattr(z, "z", z)), complex(getattr(w, "z", w))
    return 2.0 * math.asinh(abs(z - w) / (2.0 * math.sqrt(z.imag * w.imag)))


@dataclass(frozen=True)
class MoebiusMap:
    """z -> (az + b)/(cz + d) with ad - bc = 1, stored with its first nonzero entry positive."""

    a: float
    b: float
    c: float
    d: float

    def __post_init__(self):
        det = self.a * self.d - self.b * self.c
        if abs(det - 1) >= 1e-12:
            raise ValidationError(f"Moebius map has determinant {det}, expected 1")
        entries = (self.a, self.b, self.c, self.d)
        first = next(v for v in entries if v != 0)
        if first < 0:
            for name, value in zip("abcd", entries):
                object.__setattr__(self, name, -value)

    @classmethod
    def identity(cls):
        return cls(1, 0, 0, 1)

    @property
    def entries(self):
        return self.a, self.b, self.c, self.d

    def key(self):
        return tuple(v if isinstance(v, int) else round(float(v), 12) + 0.0 for v in self.entries)

    def compose(self, other):
        """self o other."""
        return MoebiusMap(
            self.a * other.a + self.b * other.c,
            self.a * other.b + self.b * other.d,
            self.c * other.a + self.d * other.c,
            self.c * other.b + self.d * other.d,
        )

    __matmul__ = compose

    def inverse(self):
        return MoebiusMap(self.d, -self.b, -self.c, self.a)

    def apply(self, z):
        z = complex(getattr(z, "z", z))
        return UHPoint((self.a * z + self.b) / (self.c * z + self.d))

    def to_list(self):
        return list(self.entries)


S = MoebiusMap(0, -1, 1, 0)
T = MoebiusMap(1, 1, 0, 1)


@dataclass(frozen=True)
class FuchsianGroup:
    """
    Lattice in PSL(2, R) given by generators and co-volume.

    covolume_over_pi, when known, makes Bergman invariants exact rationals.
    """

    generators: tuple
    covolume: float
    name: str = "custom"
    covolume_over_pi: Fraction = None
    cocompact: bool = False
    contains_center: bool = False

    def __post_init__(self):
        if not self.covolume > 0:
            raise ValidationError(f"Co-volume must be positive, got {self.covolume}")
        object.__setattr__(self, "generators", tuple(self.generators))

    @classmethod
    def from_json(cls, payload):
        """Group file: {generators: [[a, b, c, d], ...], covolume, ...}."""
        try:
            generators = tuple(MoebiusMap(*entries) for entries in payload["generators"])
            covolume = float(payload["covolume"])
        except (KeyError, TypeError) as e:
            raise ValidationError(f"Group file needs 'generators' and 'covolume': {e}")
        over_pi = payload.get("covolume_over_pi")
        return cls(
            generators=generators,
            covolume=covolume,
            name=payload.get("name", "custom"),
            covolume_over_pi=Fraction(over_pi) if over_pi is not None else None,
            cocompact=bool(payload.get("cocompact", False)),
            contains_center=bool(payload.get("contains_center", False)),
        )

    def to_dict(self):
        return {
            "name": self.name,
            "generators": [m.to_list() for m in self.generators],
            "covolume": self.covolume,
            "covolume_over_pi": str(self.covolume_over_pi) if self.covolume_over_pi is not None else None,
            "cocompact": self.cocompact,
            "contains_center": self.contains_center,
        }


def psl2z():
    """The modular group with generators S, T and co-volume pi/3."""
    return FuchsianGroup(
        generators=(S, T),
        covolume=math.pi / 3,
        name="psl2z",
        covolume_over_pi=Fraction(1, 3),
        cocompact=False,
    )


BUNDLED_GROUPS = {"psl2z": psl2z}


@dataclass(frozen=True)
class BergmanKernelSpec:
    alpha: float
    w: UHPoint

    def __post_init__(self):
        if not self.alpha > 1:
            raise AlphaOutOfRange(f"Weight alpha must exceed 1, got {self.alpha}")
        if not isinstance(self.w, UHPoint):
            object.__setattr__(self, "w", UHPoint(self.w))

    def __call__(self, z):
        return kernel_eval(self, z)


def moebius_apply(m, z):
    return m.apply(z)


def j_cocycle(m, z, alpha):
    """(cz + d)^{-alpha} on the principal branch."""
    z = complex(getattr(z, "z", z))
    return complex(m.c * z + m.d) ** (-alpha)


def kernel_eval(spec, z):
    z = complex(getattr(z, "z", z))
    alpha = spec.alpha
    prefactor = 2.0 ** (alpha - 2) / math.pi * (alpha - 1) * cmath.exp(1j * math.pi * alpha / 2)
    return prefactor * (z - spec.w.z.conjugate()) ** (-alpha)


def kernel_norm_sq(spec):
    return (spec.alpha - 1) / (4 * math.pi * spec.w.y ** spec.alpha)


def _as_function(f):
    if f is None:
        return lambda z: 0.0j
    if isinstance(f, BergmanKernelSpec):
        return lambda z: kernel_eval(f, z)
    return f


def bergman_inner(f, g, alpha, params=None):
    """
    <f, g> in A^2_alpha by adaptive quadrature over the whole half-plane.

    Args:
        f, g: BergmanKernelSpec or callables of a complex argument
        alpha: weight
        params: QuadratureParams

    Returns:
        complex
    """
    if not alpha > 1:
        raise AlphaOutOfRange(f"Weight alpha must exceed 1, got {alpha}")
    params = params or BERGMAN_QUADRATURE
    f, g = _as_function(f), _as_function(g)

    def integrand(y, x):
        z = complex(x, y)
        return f(z) * np.conj(g(z)) * y ** (alpha - 2)

    value, error = complex_dblquad(integrand, -np.inf, np.inf, lambda x: 0.0, lambda x: np.inf, params, "bergman inner product")
    logger.debug("bergman_inner alpha=%s value=%s error=%.2e", alpha, value, error)
    return value


def _neighbors(G):
    moves = []
    for generator in G.generators:
        moves.append(generator)
        inverse = generator.inverse()
        if inverse.key() != generator.key():
            moves.append(inverse)
    return moves


def word_ball(G, word_radius):
    """Distinct group elements of word length <= word_radius, in breadth-first order."""
    ball = {MoebiusMap.identity().key(): MoebiusMap.identity()}
    frontier = list(ball.values())
    moves = _neighbors(G)
    for _ in range(word_radius):
        next_frontier = []
        for m in frontier:
            for move in moves:
                product = move @ m
                if product.key() not in ball:
                    ball[product.key()] = product
                    next_frontier.append(product)
        frontier = next_frontier
    return list(ball.values())


def orbit_ball(G, w, word_radius):
    """
    Distinct orbit points m.w for words of length <= word_radius.

    Points closer than 1e-10 in hyperbolic distance are merged; the first
    representing map in breadth-first order is kept.

    Returns:
        list of (UHPoint, MoebiusMap)
    """
    if word_radius < 0:
        raise ValidationError(f"word_radius must be non-negative, got {word_radius}")
    w = w if isinstance(w, UHPoint) else UHPoint(w)
    orbit = []
    for m in word_ball(G, word_radius):
        point = m.apply(w)
        if all(hyperbolic_distance(point, seen) >= ORBIT_DEDUP_DISTANCE for seen, _ in orbit):
            orbit.append((point, m))
    return orbit


def stabilizer_order(G, w, word_radius=4):
    """Number of distinct elements in the word ball fixing w; a lower bound on #F_w."""
    w = w if isinstance(w, UHPoint) else UHPoint(w)
    return sum(
        1 for m in word_ball(G, word_radius) if hyperbolic_distance(m.apply(w), w) < ORBIT_DEDUP_DISTANCE
    )


def modular_covolume(params=None, half=False):
    """
    Hyperbolic area of {|x| <= 1/2, x^2 + y^2 >= 1}, i.e. pi/3.

    Args:
        params: QuadratureParams
        half: integrate over x >= 0 only (pi/6)
    """
    params = params or QuadratureParams(epsabs=1e-11, epsrel=1e-11, max_error=1e-8)
    lower = 0.0 if half else -0.5
    value, error = dblquad(
        lambda y, x: y ** -2.0,
        lower,
        0.5,
        lambda x: math.sqrt(1.0 - x * x),
        lambda x: np.inf,
        params,
        "modular co-volume",
    )
    logger.info("modular co-volume %.12f (error %.1e)", value, error)
    return value


def _alpha_exact(alpha):
    try:
        return exact_rational(alpha)
    except (ValueError, TypeError):
        return None


def bergman_classification(alpha, G, w, word_radius=4):
    """
    Density verdict for pi_alpha restricted to G and the kernel orbit at w.

    Args:
        alpha: weight > 1
        G: FuchsianGroup
        w: base point
        word_radius: ball used to count the stabilizer

    Returns:
        dict: formal dimension, invariant, generic verdict and kernel-orbit verdict
    """
    if not alpha > 1:
        raise AlphaOutOfRange(f"Weight alpha must exceed 1, got {alpha}")
    w = w if isinstance(w, UHPoint) else UHPoint(w)
    model = "bergman_central" if G.contains_center else "bergman"
    dimension = formal_dimension(model, alpha)
    alpha_exact = _alpha_exact(alpha)

    if G.covolume_over_pi is not None and alpha_exact is not None:
        invariant = G.covolume_over_pi * dimension.coefficient
        generic_invariant = G.covolume_over_pi * formal_dimension("bergman", alpha).coefficient
    else:
        invariant = G.covolume * float(dimension)
        generic_invariant = G.covolume * (alpha - 1) / (4 * math.pi)

    # Lattices of the center-free group are ICC, so Kleppner holds.
    kleppner = FAILS if G.contains_center else HOLDS
    verdict = classify(invariant, kleppner, contains_center=G.contains_center)

    stabilizer = stabilizer_order(G, w, word_radius)
    threshold = 4 * math.pi / (alpha - 1)
    kernel_load = stabilizer * generic_invariant
    if kernel_load < 1:
        completeness, rule = True, "perelomov"
    elif kernel_load == 1:
        completeness, rule = True, "kelly_lyth_equality"
    else:
        completeness, rule = False, "kelly_lyth"

    kernel = {
        "stabilizer_order": stabilizer,
        "load": str(kernel_load) if isinstance(kernel_load, Fraction) else None,
        "load_float": float(kernel_load),
        "threshold": threshold,
        "stabilizer_times_covolume": stabilizer * G.covolume,
        "complete": completeness,
        "rule": rule,
        "frame": bool(G.cocompact and kernel_load < 1),
        "frame_note": None if G.cocompact else "group is not co-compact: kernel orbit is not a frame",
        "riesz": bool(stabilizer == 1 and kernel_load > 1),
        "reduced_orbit_note": (
            "orbit repeats each point stabilizer_order times; only the reduced orbit can be a Riesz sequence"
            if stabilizer > 1 and kernel_load > 1
            else None
        ),
        "laguerre_complete_necessary": bool(generic_invariant <= 1),
    }

    record = {
        "alpha": alpha,
        "group": G.to_dict(),
        "base": w.to_dict(),
        "formal_dimension": float(dimension),
        "formal_dimension_exact": str(dimension),
        "invariant": str(invariant) if isinstance(invariant, Fraction) else None,
        "invariant_float": float(invariant),
        "verdict": verdict.to_dict(),
        "kernel": kernel,
    }
    if G.contains_center:
        record["center"] = {
            "invariant": float(invariant),
            "complete_generic": bool(invariant <= Fraction(1, 2)),
            "riesz_generic": False,
        }
    logger.info("bergman alpha=%s group=%s invariant=%s kernel_complete=%s", alpha, G.name, invariant, completeness)
    return record


@dataclass(frozen=True, eq=False)
class KernelOrbitGram:
    matrix: np.ndarray
    points: tuple
    report: frame_core.SpectralReport = field(default=None)


def kernel_orbit_gram(alpha, G, w, word_radius, params=None, method="closed_form"):
    """
    Gram matrix of the normalized kernels k_z / ||k_z|| over the orbit ball.

    Args:
        method: 'closed_form' uses G[i, j] = k_{z_j}(z_i) / (||k_{z_i}|| ||k_{z_j}||);
            'quadrature' integrates every entry

    Returns:
        KernelOrbitGram
    """
    if not alpha > 1:
        raise AlphaOutOfRange(f"Weight alpha must exceed 1, got {alpha}")
    points = tuple(point for point, _ in orbit_ball(G, w, word_radius))
    specs = [BergmanKernelSpec(alpha, p) for p in points]
    norms = np.sqrt([kernel_norm_sq(s) for s in specs])
    n = len(points)
    matrix = np.zeros((n, n), dtype=complex)
    for i in range(n):
        for j in range(i, n):
            if method == "quadrature":
                value = bergman_inner(specs[j], specs[i], alpha, params)
            else:
                value = kernel_eval(specs[j], points[i])
            matrix[i, j] = value / (norms[i] * norms[j])
            matrix[j, i] = np.conj(matrix[i, j])
    report = frame_core.hermitian_eigen(matrix, 1e-8)
    return KernelOrbitGram(matrix=matrix, points=points, report=report)


def laguerre_window(alpha, n, t):
    """t^{alpha-1} e^{-t} L_n^{(alpha-1)}(2t)."""
    t = np.asarray(t, dtype=float)
    return t ** (alpha - 1) * np.exp(-t) * special.eval_genlaguerre(n, alpha - 1, 2 * t)


def laguerre_inner(alpha, n, m, params=None):
    """Inner product of two Laguerre windows in L^2(R+, t^{-(alpha-1)} dt)."""
    params = params or QuadratureParams(epsabs=1e-12, epsrel=1e-10, max_error=1e-8)
    value, _ = quad(
        lambda t: laguerre_window(alpha, n, t) * laguerre_window(alpha, m, t) * t ** (1 - alpha),
        0.0,
        np.inf,
        params,
        "laguerre inner product",
    )
    return value
