"""Scale-function Laplace transform and convolution, as a verification surface.

The transform of z with respect to the scale function Phi anchored at m is

    L{z}(lam) = int_m^inf e^(-lam (Phi(l) - Phi(m))) z(l) Phi'(l) dl.

Only the truncated forward transform is computed here; it exists to check
the transform pairs and the convolution theorem numerically.  The solver
consumes the already inverted closed-form kernel, so no numerical inverse
is implemented anywhere.
"""

import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy.integrate import quad

from .errors import AccuracyError, DomainError
from .phi import SampledFunction


@dataclass(frozen=True)
class TransformQuery:
    """Transform variable, truncation horizon and requested tolerance."""

    lam: float
    horizon: float
    tol: float = 1e-8
    envelope: Optional[Tuple[float, float]] = None  # |z| <= c1 * e^(c2 (Phi - Phi(m)))

    def validate(self, m):
        if not (self.lam > 0.0):
            raise DomainError(f"transform variable must be positive, got {self.lam}")
        if not (self.horizon > m):
            raise DomainError(f"horizon must exceed the anchor {m}, got {self.horizon}")
        if not (self.tol > 0.0):
            raise DomainError(f"tolerance must be positive, got {self.tol}")


@dataclass(frozen=True)
class GltResult:
    value: float
    quad_error: float
    tail_bound: Optional[float]


def glt_detailed(z, phi, m, query):
    """Truncated transform with the quadrature error estimate and, when an
    exponential envelope for z is declared, a bound on the discarded tail."""
    query.validate(m)
    if not phi.has_inverse:
        raise DomainError("transform quadrature needs an invertible scale function")
    u0 = phi.eval(m)
    uT = phi.eval(query.horizon)
    lam = query.lam

    def integrand(u):
        return math.exp(-lam * (u - u0)) * z(phi.inverse(u))

    with np.errstate(all="ignore"):
        res = quad(integrand, u0, uT, epsabs=query.tol * 0.5, epsrel=1e-11,
                   limit=300, full_output=1)
    value, abserr = res[0], res[1]
    if len(res) > 3 or abserr > query.tol:
        raise AccuracyError(
            f"transform quadrature could not certify tol={query.tol:g} "
            f"(estimate {abserr:.2e})")
    tail = None
    if query.envelope is not None:
        c1, c2 = query.envelope
        if lam > c2:
            tail = c1 * math.exp(-(lam - c2) * (uT - u0)) / (lam - c2)
    return GltResult(value, abserr, tail)


def glt(z, phi, m, query):
    """Truncated scale-function Laplace transform of a callable z."""
    return glt_detailed(z, phi, m, query).value


def phi_convolve(z1, z2, phi, m):
    """Scale-function convolution of two functions sampled on one grid.

    Node values of int_m^l Phi'(e) z1(e) z2(Phi^-1(Phi(l) + Phi(m) - Phi(e))) de
    by product integration in u = Phi(e): both factors are interpolated
    piecewise linearly in u and the bilinear product is integrated exactly
    on every cell.
    """
    if not np.array_equal(z1.grid, z2.grid):
        raise DomainError("convolution factors must share one grid")
    from .fraccalc import check_anchor

    check_anchor(z1.grid, m)
    if not phi.has_inverse:
        raise DomainError("convolution needs an invertible scale function")
    u = np.array([phi.eval(float(x)) for x in z1.grid])
    u0 = u[0]
    f = z1.values
    g = z2.values
    n = u.size
    out = np.zeros(n)
    for i in range(1, n):
        refl = u[i] + u0 - u[: i + 1]
        lo = min(u0, u[i])
        hi = max(u0, u[i])
        if refl.min() < lo - 1e-12 * (1 + abs(lo)) or refl.max() > hi + 1e-12 * (1 + abs(hi)):
            raise DomainError(
                f"reflected argument leaves the sampled range at node {i}")
        gr = np.interp(refl, u, g)
        fj, fj1 = f[:i], f[1 : i + 1]
        gj, gj1 = gr[:i], gr[1 : i + 1]
        h = u[1 : i + 1] - u[:i]
        cells = h / 6.0 * (2.0 * fj * gj + fj * gj1 + fj1 * gj + 2.0 * fj1 * gj1)
        out[i] = cells.sum()
    return SampledFunction(z1.grid.copy(), out)
