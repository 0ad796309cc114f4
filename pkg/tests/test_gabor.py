import math
from fractions import Fraction

import numpy as np
import pytest

from utils import gabor
from utils.errors import InvalidDensity, InvalidLattice, OffGridShift, ValidationError
from utils.exact_field import ExactScalar
from utils.gabor import GaborBoundsReport, PlaneLattice, Window
from utils.quadrature import QuadratureParams, complex_quad


def test_gaussian_window_has_unit_norm():
    for width in (1.0, 0.5, 2.0):
        w = Window.gaussian(width)
        energy, _ = complex_quad(lambda t: w(t) ** 2 + 0j, -10, 10, QuadratureParams(max_error=1e-9))
        assert energy.real == pytest.approx(1.0, abs=1e-10)


def test_gaussian_ambiguity_examples():
    assert gabor.gaussian_ambiguity((0.0, 0.0)) == pytest.approx(1.0)
    assert abs(gabor.gaussian_ambiguity((1.0, 0.0))) == pytest.approx(math.exp(-math.pi / 2), abs=1e-12)
    assert gabor.gaussian_ambiguity((1.0, 0.5)) == pytest.approx(-0.14037j, abs=1e-5)


def test_gaussian_ambiguity_matches_quadrature(rng):
    g = Window.gaussian()
    params = QuadratureParams(epsabs=1e-12, epsrel=1e-12, limit=400, max_error=1e-9)
    for x, xi in rng.uniform(-2, 2, size=(8, 2)):
        value, _ = complex_quad(
            lambda t: g(t) * g(t - x) * np.exp(-2j * np.pi * xi * t), -12, 12, params
        )
        assert abs(value - gabor.gaussian_ambiguity((x, xi))) < 1e-9


def test_ambiguity_magnitude_is_symmetric(rng):
    z = rng.uniform(-3, 3, size=(50, 2))
    np.testing.assert_allclose(np.abs(gabor.gaussian_ambiguity(z)), np.abs(gabor.gaussian_ambiguity(-z)))


def test_tf_shift_on_sampled_windows(rng, complex_normal):
    f = Window.sampled(0.5, -2.0, complex_normal(9))
    unchanged = gabor.tf_shift((0.0, 0.0), f)
    np.testing.assert_array_equal(unchanged.samples, f.samples)
    assert unchanged.start == f.start

    box = Window.box().sample(0.25, 0.0, 4)
    moved = gabor.tf_shift((1.0, 0.0), box)
    assert moved.support == (1.0, 1.75)

    z, z_prime = (1.0, 0.3), (0.5, 0.7)
    composed = gabor.tf_shift(z, gabor.tf_shift(z_prime, f))
    direct = gabor.tf_shift((1.5, 1.0), f)
    assert composed.start == direct.start
    phase = gabor.continuous_cocycle(z, z_prime)
    assert np.max(np.abs(composed.samples - phase * direct.samples)) < 1e-12

    with pytest.raises(OffGridShift):
        gabor.tf_shift((0.3, 0.0), f)


def test_plane_lattice_covolume():
    lattice = PlaneLattice.from_rows([[ExactScalar.sqrt(2), 0], [0, Fraction(1, 2)]])
    assert lattice.covolume == ExactScalar.sqrt(Fraction(1, 2))
    assert lattice.volume == pytest.approx(math.sqrt(0.5))
    assert lattice.separable == pytest.approx((math.sqrt(2), 0.5))
    assert lattice.kleppner().status == "holds"
    with pytest.raises(InvalidLattice):
        PlaneLattice(np.eye(3))


def test_box_gram_on_integer_lattice_is_identity():
    gram = gabor.gabor_gram(Window.box(), PlaneLattice.separable_lattice(1, 1), radius=2)
    assert gram.matrix.shape == (25, 25)
    assert np.max(np.abs(gram.matrix - np.eye(25))) < 1e-10


def test_gaussian_gram_examples():
    lattice = PlaneLattice.from_rows([[Fraction(1, 2), 1], [0, 1]])
    single = gabor.gabor_gram(Window.gaussian(), lattice, radius=0)
    np.testing.assert_allclose(single.matrix, [[1.0]])

    riesz = gabor.gabor_gram(Window.gaussian(), PlaneLattice.separable_lattice(2, 1), radius=3)
    assert riesz.lambda_min_raw > 0


def test_gaussian_gram_entries_follow_the_cocycle(rng):
    lattice = PlaneLattice.from_rows([[1, Fraction(1, 3)], [0, Fraction(3, 2)]])
    gram = gabor.gabor_gram(Window.gaussian(), lattice, radius=1)
    np.testing.assert_allclose(gram.matrix, gram.matrix.conj().T, atol=1e-12)
    assert gram.lambda_min_raw >= -1e-10


def test_riesz_lower_bound_is_monotone_in_radius():
    lattice = PlaneLattice.separable_lattice(Fraction(3, 2), 1)
    lower = [gabor.gram_bounds(Window.gaussian(), lattice, radius).A for radius in (0, 1, 2, 3)]
    assert all(a >= b - 1e-12 for a, b in zip(lower, lower[1:]))
    assert lower[-1] > 0


def test_sampled_gram_matches_analytic_gaussian():
    sampled = Window.gaussian().sample(0.01, -8.0, 1601)
    lattice = PlaneLattice.separable_lattice(1, Fraction(1, 2))
    numeric = gabor.gabor_gram(sampled, lattice, radius=1).matrix
    exact = gabor.gabor_gram(Window.gaussian(), lattice, radius=1).matrix
    assert np.max(np.abs(numeric - exact)) < 1e-6


@pytest.mark.parametrize("volume", [Fraction(1, 4), Fraction(1, 2), Fraction(3, 4)])
def test_zz_sandwich(volume):
    lattice = PlaneLattice.separable_lattice(1, volume)
    report = gabor.zz_frame_bounds(Window.gaussian(), volume.numerator, volume.denominator)
    assert 0 < report.A <= report.B
    assert report.certified is False
    result = gabor.sandwich_check(report, lattice, Window.gaussian())
    assert result.ok
    assert result.lower_slack >= -1e-6 and result.upper_slack >= -1e-6


def test_zz_half_density_brackets_two():
    report = gabor.zz_frame_bounds(Window.gaussian(), 1, 2)
    assert 0 < report.A <= 2 <= report.B
    assert report.A > 0.1 * report.B


def test_zz_critical_density_lower_bound_collapses():
    coarse = gabor.zz_frame_bounds(Window.gaussian(), 1, 1, grid=256)
    fine = gabor.zz_frame_bounds(Window.gaussian(), 1, 1, grid=512)
    assert coarse.A < 0.05 * coarse.B
    assert fine.A < coarse.A


def test_zz_supercritical_frame_bound_vanishes():
    report = gabor.zz_frame_bounds(Window.gaussian(), 2, 1, grid=64)
    assert report.A < 1e-10


def test_zz_dilation_matches_square_lattice():
    # alpha Z x (1/(2 alpha)) Z with width 1 equals Z x (1/2) Z with width 1/alpha
    dilated = gabor.zz_frame_bounds(Window.gaussian(), 1, 2, grid=64, alpha=math.sqrt(0.5))
    direct = gabor.zz_frame_bounds(Window.gaussian(math.sqrt(2)), 1, 2, grid=64)
    assert dilated.A == pytest.approx(direct.A)
    assert dilated.B == pytest.approx(direct.B)


def test_zz_rejects_non_positive_density():
    with pytest.raises(InvalidDensity):
        gabor.zz_frame_bounds(Window.gaussian(), 0, 1)
    with pytest.raises(InvalidDensity):
        gabor.zz_frame_bounds(Window.gaussian(), -1, 2)


@pytest.mark.parametrize(
    "window, test_window, alpha, beta, nodes",
    [
        (Window.gaussian(), Window.gaussian(), 1, 1, 64),
        (Window.gaussian(), Window.gaussian(), 2, Fraction(1, 2), 64),
        (Window.box(), Window.box(), 1, 1, 64),
        (Window.gaussian(), Window.box(), 1, 1, 32),
    ],
)
def test_periodized_orthogonality(window, test_window, alpha, beta, nodes):
    lattice = PlaneLattice.separable_lattice(alpha, beta)
    params = QuadratureParams(max_error=5e-4, nodes=nodes)
    value = gabor.periodized_ortho_check(window, lattice, test_window, params)
    assert value == pytest.approx(1.0, abs=5e-4)


def test_box_gaussian_stft_matches_quadrature():
    g, box = Window.gaussian(), Window.box()
    params = QuadratureParams(epsabs=1e-13, epsrel=1e-12, limit=400, max_error=1e-9)
    for x, xi in [(0.0, 0.0), (0.3, 1.7), (-1.2, 0.4), (2.5, -3.0), (0.5, 12.0)]:
        value, _ = complex_quad(lambda t: g(t - x) * np.exp(-2j * np.pi * xi * t), 0, 1, params)
        assert gabor.stft_magnitude_sq(box, g, x, xi) == pytest.approx(abs(value) ** 2, abs=1e-12)
        assert gabor.stft_magnitude_sq(g, box, -x, xi) == pytest.approx(abs(value) ** 2, abs=1e-12)


def test_box_gaussian_stft_origin():
    value = gabor.stft_magnitude_sq(Window.box(), Window.gaussian(), 0.0, 0.0)
    assert value == pytest.approx(math.sqrt(2) * math.erf(math.sqrt(math.pi)) ** 2 / 4, abs=1e-14)


def test_periodized_check_needs_a_separable_lattice():
    sheared = PlaneLattice.from_rows([[1, 1], [0, 1]])
    with pytest.raises(InvalidLattice):
        gabor.periodized_ortho_check(Window.gaussian(), sheared, Window.gaussian())
    sampled = Window.gaussian().sample(0.25, -4.0, 33)
    with pytest.raises(ValidationError):
        gabor.periodized_ortho_check(sampled, PlaneLattice.separable_lattice(1, 1), Window.box())


def test_sandwich_check_examples():
    onb = GaborBoundsReport(A=1.0, B=1.0, method=gabor.ZIBULSKI_ZEEVI, params={})
    result = gabor.sandwich_check(onb, 1.0, Window.box())
    assert result.ok
    assert result.lower_slack == pytest.approx(0.0) and result.upper_slack == pytest.approx(0.0)

    fabricated = GaborBoundsReport(A=3.0, B=4.0, method=gabor.ZIBULSKI_ZEEVI, params={})
    assert not gabor.sandwich_check(fabricated, 0.5, Window.gaussian()).ok


def test_seip_wallsten_thresholds():
    assert gabor.seip_wallsten_verdict(0.5) == {"frame": True, "riesz": False, "complete": True}
    assert gabor.seip_wallsten_verdict(1) == {"frame": False, "riesz": False, "complete": True}
    assert gabor.seip_wallsten_verdict(2) == {"frame": False, "riesz": True, "complete": False}


def test_gabor_report_falls_back_to_gram_for_irrational_density():
    lattice = PlaneLattice.from_rows([[ExactScalar.sqrt(2), 0], [0, 1]])
    report = gabor.gabor_report(Window.gaussian(), lattice, radius=2)
    assert report["bounds"]["method"] == gabor.TRUNCATED_GRAM
    assert report["sandwich"] is None
    assert report["seip_wallsten"]["riesz"] is True


def test_gabor_report_uses_zz_for_rational_density():
    report = gabor.gabor_report(Window.gaussian(), PlaneLattice.separable_lattice(1, Fraction(1, 2)), grid=64)
    assert report["bounds"]["method"] == gabor.ZIBULSKI_ZEEVI
    assert report["sandwich"]["ok"] is True
    assert report["kleppner"]["status"] == "fails"


@pytest.mark.parametrize("p, q", [(1, 2), (1, 4), (3, 4), (2, 3)])
def test_zz_bounds_bracket_frame_sums(rng, p, q):
    g = Window.gaussian()
    report = gabor.zz_frame_bounds(g, p, q)
    beta = p / q
    reach = int(12 / beta)
    x = np.arange(-12, 13)[:, None]
    xi = beta * np.arange(-reach, reach + 1)[None, :]
    for _ in range(50):
        f = Window.gaussian(rng.uniform(0.5, 2.0))
        x0, xi0 = rng.uniform(-1, 1, size=2)
        total = gabor.stft_magnitude_sq(f, g, x - x0, xi - xi0).sum()
        assert report.A * (1 - 1e-3) <= total <= report.B * (1 + 1e-3)


def test_gabor_report_box_on_a_dilated_lattice_uses_the_gram():
    lattice = PlaneLattice.from_rows([[2, 0], [0, Fraction(1, 4)]])
    report = gabor.gabor_report(Window.box(), lattice, radius=1)
    assert report["bounds"]["method"] == gabor.TRUNCATED_GRAM
    assert report["bounds"]["certified"] is False
    assert report["sandwich"] is None
    assert report["bounds"]["A"] > 0
