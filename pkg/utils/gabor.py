"""Gabor systems on L^2(R).

Time-frequency shifts act as pi(x, xi) f(t) = e^{2 pi i xi t} f(t - x), so

    pi(z) pi(z') = e^{-2 pi i xi' x} pi(z + z').

With the unit-norm Gaussian g(t) = 2^{1/4} e^{-pi t^2},

    <g, pi(x, xi) g> = e^{-pi i x xi} e^{-pi (x^2 + xi^2) / 2}.

Worked example: at z = (1, 1/2) the value is e^{-pi i/2} e^{-5 pi/8} = -0.1404i.
"""
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy import integrate, special

from utils import frame_core
from utils.density import SymplecticLattice, covolume as exact_covolume, kleppner_check, KleppnerResult, UNKNOWN
from utils.errors import InvalidDensity, InvalidLattice, OffGridShift, QuadratureFailure, ValidationError
from utils.exact_field import ExactScalar
from utils.quadrature import QuadratureParams, quad

logger = logging.getLogger(__name__)

GAUSSIAN = "gaussian"
BOX = "box"
SAMPLED = "sampled"

ZIBULSKI_ZEEVI = "ZibulskiZeevi"
TRUNCATED_GRAM = "TruncatedGram"

# exp(-37) ~ 1e-16
_NEGLIGIBLE_EXPONENT = 37.0


@dataclass(frozen=True, eq=False)
class Window:
    """
    Gabor window.

    gaussian: g_s(t) = (2/s^2)^{1/4} e^{-pi t^2 / s^2} with width s.
    box: indicator of [0, 1).
    sampled: values on the grid start + j * step.
    """

    kind: str
    width: float = 1.0
    step: float = None
    start: float = 0.0
    samples: np.ndarray = None

    def __post_init__(self):
        if self.kind not in (GAUSSIAN, BOX, SAMPLED):
            raise ValidationError(f"Unknown window kind {self.kind!r}")
        if self.kind == GAUSSIAN and not self.width > 0:
            raise ValidationError(f"Gaussian width must be positive, got {self.width}")
        if self.kind == SAMPLED:
            samples = np.array(self.samples, dtype=complex, copy=True).reshape(-1)
            if self.step is None or not self.step > 0 or samples.size == 0:
                raise ValidationError("Sampled window needs a positive step and at least one sample")
            samples.setflags(write=False)
            object.__setattr__(self, "samples", samples)

    @classmethod
    def gaussian(cls, width=1.0):
        return cls(GAUSSIAN, width=float(width))

    @classmethod
    def box(cls):
        return cls(BOX)

    @classmethod
    def sampled(cls, step, start, samples):
        return cls(SAMPLED, step=float(step), start=float(start), samples=samples)

    @property
    def grid(self):
        return self.start + self.step * np.arange(self.samples.size)

    @property
    def support(self):
        if self.kind == BOX:
            return 0.0, 1.0
        if self.kind == SAMPLED:
            return self.start, self.start + self.step * (self.samples.size - 1)
        reach = self.width * math.sqrt(_NEGLIGIBLE_EXPONENT / math.pi)
        return -reach, reach

    @property
    def norm(self):
        if self.kind == SAMPLED:
            return math.sqrt(integrate.trapezoid(np.abs(self.samples) ** 2, dx=self.step))
        return 1.0

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if self.kind == GAUSSIAN:
            s = self.width
            return (2.0 / s ** 2) ** 0.25 * np.exp(-np.pi * t ** 2 / s ** 2)
        if self.kind == BOX:
            return ((t >= 0.0) & (t < 1.0)).astype(float)
        raise ValidationError("Sampled windows are only defined on their grid")

    def sample(self, step, start, count):
        """Sampled copy of an analytic window."""
        t = start + step * np.arange(count)
        return Window.sampled(step, start, self(t).astype(complex))

    def to_dict(self):
        payload = {"kind": self.kind}
        if self.kind == GAUSSIAN:
            payload["width"] = self.width
        if self.kind == SAMPLED:
            payload.update(step=self.step, start=self.start, count=int(self.samples.size))
        return payload


def _grid_offset(x, step):
    ratio = x / step
    k = round(ratio)
    if abs(ratio - k) > 1e-12:
        raise OffGridShift(f"Shift {x} is not a multiple of the grid step {step}")
    return int(k)


def tf_shift(z, f):
    """
    Samples of pi(z) f.

    Args:
        z: (x, xi) with x a multiple of the grid step
        f: sampled Window

    Returns:
        Window: sampled on the grid moved by x
    """
    if f.kind != SAMPLED:
        raise ValidationError("tf_shift acts on sampled windows")
    x, xi = z
    k = _grid_offset(x, f.step)
    start = f.start + k * f.step
    grid = start + f.step * np.arange(f.samples.size)
    return Window.sampled(f.step, start, np.exp(2j * np.pi * xi * grid) * f.samples)


def continuous_cocycle(z, z_prime):
    """Phase c with pi(z) pi(z') = c * pi(z + z')."""
    x, _ = z
    _, xi_prime = z_prime
    return np.exp(-2j * np.pi * xi_prime * x)


def gaussian_ambiguity(z, width=1.0):
    """<g_s, pi(z) g_s> in closed form; accepts arrays of shape (..., 2)."""
    z = np.asarray(z, dtype=float)
    x, xi = z[..., 0] / width, z[..., 1] * width
    return np.exp(-1j * np.pi * x * xi) * np.exp(-np.pi * (x ** 2 + xi ** 2) / 2)


def _box_gaussian_stft_sq(width, x, xi):
    """
    |int_0^1 g_s(t - x) e^{-2 pi i xi t} dt|^2 through the Faddeeva function.

    erf(z1) - erf(z0) is written as e^{-z0^2} w(i z0) - e^{-z1^2} w(i z1)
    with the e^{-pi^2 xi^2 / a} factor folded in, so nothing overflows for
    large xi. The value is symmetric under x -> 1 - x; reflecting onto
    x <= 1/2 keeps both endpoints u >= -1/2.
    """
    a = np.pi / width ** 2
    scale = (2.0 / width ** 2) ** 0.25 * math.sqrt(np.pi) / (2 * math.sqrt(a))
    x = np.minimum(x, 1.0 - x)

    def edge(u):
        z = math.sqrt(a) * u + 1j * np.pi * xi / math.sqrt(a)
        return np.exp(-a * u ** 2 - 2j * np.pi * xi * u) * special.wofz(1j * z)

    return scale ** 2 * np.abs(edge(-x) - edge(1.0 - x)) ** 2


def stft_magnitude_sq(f, g, x, xi):
    """
    |<f, pi(x, xi) g>|^2 for any pair of Gaussian and box windows.

    Args:
        f, g: analytic Windows
        x, xi: broadcastable arrays
    """
    x = np.asarray(x, dtype=float)
    xi = np.asarray(xi, dtype=float)
    if f.kind == GAUSSIAN and g.kind == GAUSSIAN:
        a, b = 1.0 / f.width ** 2, 1.0 / g.width ** 2
        return (
            math.sqrt(4 * a * b) / (a + b)
            * np.exp(-2 * np.pi * a * b * x ** 2 / (a + b))
            * np.exp(-2 * np.pi * xi ** 2 / (a + b))
        )
    if f.kind == BOX and g.kind == BOX:
        overlap = np.clip(1.0 - np.abs(x), 0.0, None)
        return (overlap * np.sinc(xi * overlap)) ** 2
    if f.kind == BOX and g.kind == GAUSSIAN:
        return _box_gaussian_stft_sq(g.width, x, xi)
    if f.kind == GAUSSIAN and g.kind == BOX:
        return _box_gaussian_stft_sq(f.width, -x, xi)
    raise ValidationError(f"No closed-form STFT for the pair ({f.kind}, {g.kind})")


@dataclass(frozen=True, eq=False)
class PlaneLattice:
    """Lattice A Z^2 in the time-frequency plane; points are A @ nu."""

    basis: np.ndarray
    exact: SymplecticLattice = None
    covolume: object = field(default=None, compare=False)

    def __post_init__(self):
        basis = np.array(self.basis, dtype=float, copy=True)
        if basis.shape != (2, 2) or not np.all(np.isfinite(basis)):
            raise InvalidLattice(f"Expected a finite 2x2 basis, got shape {basis.shape}")
        basis.setflags(write=False)
        object.__setattr__(self, "basis", basis)
        source = self.exact or SymplecticLattice(tuple(map(tuple, basis.tolist())))
        object.__setattr__(self, "covolume", exact_covolume(source))

    @classmethod
    def from_rows(cls, rows):
        """Build from rows of ExactScalar, Fraction, int or float entries."""
        lattice = SymplecticLattice(tuple(tuple(row) for row in rows))
        exact = lattice if lattice.exact else None
        return cls(basis=lattice.float_basis(), exact=exact)

    @classmethod
    def separable_lattice(cls, alpha, beta):
        return cls.from_rows([[alpha, 0], [0, beta]])

    @property
    def volume(self):
        return float(self.covolume)

    @property
    def separable(self):
        if self.basis[0, 1] == 0 and self.basis[1, 0] == 0:
            return float(self.basis[0, 0]), float(self.basis[1, 1])
        return None

    def kleppner(self):
        if self.exact is None:
            return KleppnerResult(UNKNOWN, method="skipped", note="floating-point basis")
        return kleppner_check(self.exact)

    def points(self, radius):
        """Labels nu with ||nu||_inf <= radius (lexicographic) and the points A @ nu."""
        r = range(-radius, radius + 1)
        labels = tuple((i, j) for i in r for j in r)
        nu = np.array(labels, dtype=float).reshape(-1, 2)
        return labels, nu @ self.basis.T

    def to_dict(self):
        return {
            "basis": self.basis.tolist(),
            "covolume": str(self.covolume) if self.exact is not None else None,
            "covolume_float": self.volume,
        }


@dataclass(frozen=True, eq=False)
class GaborGram:
    matrix: np.ndarray
    labels: tuple
    points: np.ndarray
    lambda_min_raw: float

    def spectral_report(self, tol=frame_core.DEFAULT_TOL):
        return frame_core.hermitian_eigen(self.matrix, tol)


@dataclass(frozen=True)
class GaborBoundsReport:
    A: float
    B: float
    method: str
    params: dict
    certified: bool = False
    volume: float = None

    def to_dict(self):
        return {
            "A": self.A,
            "B": self.B,
            "method": self.method,
            "params": dict(self.params),
            "certified": self.certified,
            "volume": self.volume,
        }


def _box_inner(z_a, z_b, params):
    """<pi(z_a) chi, pi(z_b) chi> by quadrature over the overlap of the supports."""
    lo, hi = max(z_a[0], z_b[0]), min(z_a[0], z_b[0]) + 1.0
    if hi <= lo:
        return 0.0j
    omega = 2 * np.pi * (z_a[1] - z_b[1])
    if omega == 0:
        return complex(hi - lo)
    re, _ = quad(lambda t: 1.0, lo, hi, params, "box gram entry", weight="cos", wvar=omega)
    im, _ = quad(lambda t: 1.0, lo, hi, params, "box gram entry", weight="sin", wvar=omega)
    return complex(re, im)


def _sampled_vectors(w, points):
    offsets = [_grid_offset(x, w.step) for x, _ in points]
    lo, hi = min(offsets), max(offsets) + w.samples.size
    grid = w.start + w.step * np.arange(lo, hi)
    vectors = np.zeros((len(points), hi - lo), dtype=complex)
    for row, ((_, xi), k) in enumerate(zip(points, offsets)):
        vectors[row, k - lo:k - lo + w.samples.size] = w.samples
        vectors[row] *= np.exp(2j * np.pi * xi * grid)
    weights = np.full(hi - lo, w.step)
    weights[[0, -1]] *= 0.5
    return vectors, weights


def gabor_gram(w, lat, radius, params=None):
    """
    Gram matrix of pi(A nu) w over ||nu||_inf <= radius.

    Args:
        w: Window
        lat: PlaneLattice
        radius: truncation radius in lattice coordinates
        params: QuadratureParams for box windows

    Returns:
        GaborGram: G[i, j] = <pi(z_j) w, pi(z_i) w>
    """
    params = params or QuadratureParams(max_error=1e-10)
    labels, points = lat.points(radius)
    n = len(labels)

    if w.kind == GAUSSIAN:
        x, xi = points[:, 0], points[:, 1]
        diff = points[:, None, :] - points[None, :, :]
        phase = np.exp(-2j * np.pi * x[None, :] * (xi[:, None] - xi[None, :]))
        matrix = phase * gaussian_ambiguity(diff, w.width)
    elif w.kind == BOX:
        matrix = np.zeros((n, n), dtype=complex)
        for i in range(n):
            matrix[i, i] = 1.0
            for j in range(i + 1, n):
                matrix[i, j] = _box_inner(points[j], points[i], params)
                matrix[j, i] = np.conj(matrix[i, j])
    else:
        vectors, weights = _sampled_vectors(w, points)
        matrix = (vectors.conj() * weights) @ vectors.T

    lambda_min = float(np.linalg.eigvalsh((matrix + matrix.conj().T) / 2)[0]) if n else 0.0
    if lambda_min < -1e-10:
        logger.warning("Gram matrix has eigenvalue %.3e below zero", lambda_min)
    return GaborGram(matrix=matrix, labels=labels, points=points, lambda_min_raw=lambda_min)


def gram_bounds(w, lat, radius, params=None):
    """Riesz-side evidence from a truncated Gram; never certified."""
    gram = gabor_gram(w, lat, radius, params)
    report = gram.spectral_report()
    return GaborBoundsReport(
        A=max(report.lower, 0.0),
        B=report.max,
        method=TRUNCATED_GRAM,
        params={"radius": radius, "points": len(gram.labels)},
        certified=False,
        volume=lat.volume,
    )


def zak_transform(w, x, omega, trunc=16):
    """Zw(x, omega) = sum_{|k| <= trunc} w(x - k) e^{2 pi i k omega}."""
    x = np.asarray(x, dtype=float)
    omega = np.asarray(omega, dtype=float)
    total = np.zeros(np.broadcast_shapes(x.shape, omega.shape), dtype=complex)
    for k in range(-trunc, trunc + 1):
        total += w(x - k) * np.exp(2j * np.pi * k * omega)
    return total


def zz_frame_bounds(w, p, q, grid=256, trunc=16, alpha=1.0):
    """
    Frame bounds of the lattice alpha Z x (p / (q alpha)) Z by the Zibulski-Zeevi method.

    The lattice is dilated to Z x (p/q) Z, which turns a Gaussian of width s
    into one of width s / alpha. With G(y, omega) the p x q matrix
    G[j, s] = Zg(y + j/p, omega - s p/q) e^{2 pi i s (p y + j) / q},
    A and B are the extreme eigenvalues of G G^* / p over a midpoint grid
    of [0, 1/p) x [0, 1).

    Args:
        w: Gaussian or box window
        p, q: density p/q
        grid: samples per axis
        trunc: Zak series truncation

    Returns:
        GaborBoundsReport: certified is always False
    """
    if q == 0 or Fraction(p, q) <= 0:
        raise InvalidDensity(f"Density p/q = {p}/{q} must be positive")
    density = Fraction(p, q)
    p, q = density.numerator, density.denominator
    if w.kind == GAUSSIAN:
        window = Window.gaussian(w.width / alpha)
        tail = math.exp(-np.pi * (trunc - 1) ** 2 / window.width ** 2)
        if tail > 1e-14:
            logger.warning("Zak truncation %d leaves a tail of %.1e for width %.3g", trunc, tail, window.width)
    elif w.kind == BOX and alpha == 1.0:
        window = w
    else:
        raise ValidationError(f"Zibulski-Zeevi bounds need a Gaussian or an undilated box, got {w.kind}")

    y = (np.arange(grid) + 0.5) / (grid * p)
    omega = (np.arange(grid) + 0.5) / grid
    Y, W = np.meshgrid(y, omega, indexing="ij")
    j = np.arange(p)
    s = np.arange(q)
    points_x = Y[..., None, None] + j[:, None] / p
    points_w = W[..., None, None] - s[None, :] * p / q
    zak = zak_transform(window, points_x, points_w, trunc)
    phase = np.exp(2j * np.pi * s[None, :] * (p * Y[..., None, None] + j[:, None]) / q)
    G = zak * phase
    eigenvalues = np.linalg.eigvalsh(G @ np.conj(np.swapaxes(G, -1, -2)) / p)

    report = GaborBoundsReport(
        A=float(max(eigenvalues[..., 0].min(), 0.0)),
        B=float(eigenvalues[..., -1].max()),
        method=ZIBULSKI_ZEEVI,
        params={"p": p, "q": q, "grid": grid, "trunc": trunc, "alpha": alpha},
        certified=False,
        volume=float(density),
    )
    logger.info("ZZ bounds p/q=%s grid=%d: A=%.6g B=%.6g", density, grid, report.A, report.B)
    return report


def _breakpoints(f, g, alpha):
    if f.kind != BOX or g.kind != BOX:
        return [0.0, alpha]
    marks = {0.0, alpha}
    for edge in (-1.0, 0.0, 1.0):
        for m in range(-3, 4):
            x = edge - m * alpha
            if 0.0 < x < alpha:
                marks.add(x)
    return sorted(marks)


def _gauss_legendre(lo, hi, nodes):
    t, w = leggauss(nodes)
    return lo + (hi - lo) * (t + 1) / 2, w * (hi - lo) / 2


def _periodized_integral(f, g, alpha, beta, nodes, tail_tol):
    if f.kind == GAUSSIAN and g.kind == GAUSSIAN:
        a, b = 1.0 / f.width ** 2, 1.0 / g.width ** 2
        time_reach = math.sqrt(_NEGLIGIBLE_EXPONENT * (a + b) / (2 * np.pi * a * b))
        freq_reach = math.sqrt(_NEGLIGIBLE_EXPONENT * (a + b) / (2 * np.pi))
        freq_terms = int(math.ceil(freq_reach / beta)) + 1
    else:
        # A box on either side leaves jumps, so |V|^2 decays like 1 / (pi xi)^2.
        time_reach = 1.0
        for w in (f, g):
            if w.kind == GAUSSIAN:
                time_reach += w.width * math.sqrt(_NEGLIGIBLE_EXPONENT / (2 * np.pi))
        freq_terms = int(math.ceil(2.0 / (np.pi ** 2 * beta * tail_tol)))
    time_terms = int(math.ceil(time_reach / alpha)) + 1

    m = np.arange(-time_terms, time_terms + 1)
    n = np.arange(-freq_terms, freq_terms + 1)
    xi_nodes, xi_weights = _gauss_legendre(0.0, beta, nodes)
    xi = xi_nodes[:, None] + n[None, :] * beta

    total = 0.0
    marks = _breakpoints(f, g, alpha)
    for lo, hi in zip(marks[:-1], marks[1:]):
        x_nodes, x_weights = _gauss_legendre(lo, hi, nodes)
        for x0, wx in zip(x_nodes, x_weights):
            shifts = x0 + m * alpha
            shifts = shifts[np.abs(shifts) <= time_reach]
            for x in shifts:
                values = stft_magnitude_sq(f, g, x, xi).sum(axis=1)
                total += wx * float(values @ xi_weights)
    return total


def periodized_ortho_check(w, lat, f, params=None, tail_tol=1e-4):
    """
    Integral over [0, alpha) x [0, beta) of sum_gamma |<f, pi(x + gamma) w>|^2.

    The periodization unfolds to the integral of |V_w f|^2 over the plane,
    which equals ||f||^2 ||w||^2.

    Args:
        w: window g
        lat: separable PlaneLattice
        f: Gaussian or box test window
        params: QuadratureParams (nodes per axis, max_error between refinements)
        tail_tol: frequency truncation tolerance when a box is involved

    Returns:
        float
    """
    params = params or QuadratureParams(max_error=5e-4)
    if lat.separable is None:
        raise InvalidLattice("periodized_ortho_check needs a separable lattice")
    if SAMPLED in (w.kind, f.kind):
        raise ValidationError(f"Unsupported window pair ({f.kind}, {w.kind})")
    alpha, beta = (abs(v) for v in lat.separable)
    coarse = _periodized_integral(f, w, alpha, beta, params.nodes, tail_tol)
    fine = _periodized_integral(f, w, alpha, beta, 2 * params.nodes, tail_tol)
    if not math.isfinite(fine) or abs(fine - coarse) > params.max_error:
        raise QuadratureFailure(
            f"Periodized integral did not settle: {coarse!r} vs {fine!r} at {params.nodes} and {2 * params.nodes} nodes"
        )
    return fine


@dataclass(frozen=True)
class SandwichResult:
    ok: bool
    lower_slack: float
    upper_slack: float

    def to_dict(self):
        return {"ok": self.ok, "lower_slack": self.lower_slack, "upper_slack": self.upper_slack}


def sandwich_check(report, lat, w, slack=1e-6):
    """
    A vol <= ||w||^2 <= B vol with d_pi = 1.

    Returns:
        SandwichResult: slacks are ||w||^2 - A vol and B vol - ||w||^2
    """
    volume = lat.volume if isinstance(lat, PlaneLattice) else float(lat)
    energy = w.norm ** 2
    lower = energy - report.A * volume
    upper = report.B * volume - energy
    return SandwichResult(ok=bool(lower >= -slack and upper >= -slack), lower_slack=lower, upper_slack=upper)


def seip_wallsten_verdict(volume):
    """Gaussian reference thresholds: frame iff vol < 1, Riesz iff vol > 1, complete iff vol <= 1."""
    volume = float(volume)
    return {
        "frame": volume < 1.0,
        "riesz": volume > 1.0,
        "complete": volume <= 1.0,
    }


def gabor_report(w, lat, radius=3, method="zz", grid=256, trunc=16, params=None):
    """
    CLI summary for one window and lattice.

    Rational separable densities use the Zibulski-Zeevi method when the
    window survives the dilation to Z x (p/q) Z (any Gaussian, or a box with
    alpha = 1); every other case falls back to the truncated Gram.
    """
    kleppner = lat.kleppner()
    report = {
        "window": w.to_dict(),
        "lattice": lat.to_dict(),
        "kleppner": kleppner.to_dict(),
        "seip_wallsten": seip_wallsten_verdict(lat.volume) if w.kind == GAUSSIAN else None,
    }
    density = _rational_density(lat)
    alpha = abs(lat.separable[0]) if lat.separable is not None else None
    dilatable = w.kind == GAUSSIAN or (w.kind == BOX and alpha == 1.0)
    if method == "zz" and density is not None and alpha is not None and dilatable:
        bounds = zz_frame_bounds(w, density.numerator, density.denominator, grid, trunc, alpha)
        report["sandwich"] = sandwich_check(bounds, lat, w).to_dict()
    else:
        if method == "zz" and density is not None and alpha is not None:
            logger.info("Box window on a lattice with alpha = %g; reporting truncated Gram evidence only", alpha)
        elif method == "zz":
            logger.info("Lattice density is not a known rational; reporting truncated Gram evidence only")
        bounds = gram_bounds(w, lat, radius, params)
        report["sandwich"] = None
    report["bounds"] = bounds.to_dict()
    return report


def _rational_density(lat):
    if lat.exact is None:
        return None
    volume = lat.covolume
    if not isinstance(volume, ExactScalar) or not volume.is_rational:
        return None
    return volume.rational
