"""Thin wrappers around scipy.integrate with densitylab error semantics."""
import logging
import math
import warnings
from dataclasses import dataclass

from scipy import integrate

from utils.errors import QuadratureFailure

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class QuadratureParams:
    """
    Tolerances for adaptive quadrature.

    epsabs/epsrel go to QUADPACK; a result whose error estimate exceeds
    max_error is rejected.
    """

    epsabs: float = 1e-10
    epsrel: float = 1e-10
    limit: int = 200
    max_error: float = 1e-6
    nodes: int = 64

    def refined(self, factor=2):
        return QuadratureParams(
            epsabs=self.epsabs / factor,
            epsrel=self.epsrel / factor,
            limit=self.limit * factor,
            max_error=self.max_error,
            nodes=self.nodes * factor,
        )


def _checked(value, error, caught, what, params):
    for w in caught:
        logger.warning("%s: %s", what, w.message)
    if not math.isfinite(value) or not math.isfinite(error) or error > params.max_error:
        raise QuadratureFailure(
            f"{what}: value {value!r} with error estimate {error:.3e} exceeds {params.max_error:.1e}"
        )
    return value, error


def quad(func, a, b, params=None, what="quad", **kwargs):
    """scipy.integrate.quad returning (value, error); IntegrationWarnings are logged."""
    params = params or QuadratureParams()
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", integrate.IntegrationWarning)
        value, error = integrate.quad(
            func, a, b, epsabs=params.epsabs, epsrel=params.epsrel, limit=params.limit, **kwargs
        )
    return _checked(value, error, caught, what, params)


def dblquad(func, a, b, gfun, hfun, params=None, what="dblquad"):
    """scipy.integrate.dblquad of func(y, x) with x in [a, b] and y in [gfun(x), hfun(x)]."""
    params = params or QuadratureParams()
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", integrate.IntegrationWarning)
        value, error = integrate.dblquad(
            func, a, b, gfun, hfun, epsabs=params.epsabs, epsrel=params.epsrel
        )
    return _checked(value, error, caught, what, params)


def complex_quad(func, a, b, params=None, what="quad", **kwargs):
    """Integrate a complex-valued function as two real integrals."""
    re, re_err = quad(lambda t: func(t).real, a, b, params, f"{what} (real part)", **kwargs)
    im, im_err = quad(lambda t: func(t).imag, a, b, params, f"{what} (imaginary part)", **kwargs)
    return complex(re, im), math.hypot(re_err, im_err)


def complex_dblquad(func, a, b, gfun, hfun, params=None, what="dblquad"):
    re, re_err = dblquad(lambda y, x: func(y, x).real, a, b, gfun, hfun, params, f"{what} (real part)")
    im, im_err = dblquad(lambda y, x: func(y, x).imag, a, b, gfun, hfun, params, f"{what} (imaginary part)")
    return complex(re, im), math.hypot(re_err, im_err)
