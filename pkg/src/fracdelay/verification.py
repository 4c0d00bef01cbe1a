"""Named property suites for the operator identities and transform pairs.

Each check returns its observed error and the tolerance it was held to, so
the command-line `verify` subcommand can print one row per identity.  The
gamma and Mittag-Leffler evaluations are reached through the module
namespace on purpose: tests inject faults there to prove a corrupted
primitive is caught by name.
"""

import math
from dataclasses import dataclass
from typing import List

import numpy as np

from . import special
from .fraccalc import caputo_derivative, frac_integral, graded_grid, uniform_grid
from .laplace import TransformQuery, glt, phi_convolve
from .phi import SampledFunction, make_phi


@dataclass
class CheckResult:
    name: str
    observed: float
    tolerance: float

    @property
    def passed(self):
        return self.observed <= self.tolerance

    def row(self):
        flag = "pass" if self.passed else "FAIL"
        return f"{self.name:<44s} {self.observed:11.3e} {self.tolerance:9.1e} {flag}"


def calculus_suite():
    """Operator identities: power law, eigen-identity, estimate, inversion,
    linearity, refinement order."""
    checks = []
    phi = make_phi("identity")

    # power-law identity on a graded grid
    mu, kap = 0.4, 1.3
    phil = make_phi("logarithmic")
    g = graded_grid(1.0, math.e, 1024, 3.0)
    dphi = np.log(g) - 0.0
    z = SampledFunction(g, dphi ** (kap - 1.0))
    out = frac_integral(z, mu, phil, 1.0)
    exact = special.gamma(kap) / special.gamma(kap + mu) * dphi ** (kap + mu - 1.0)
    checks.append(CheckResult("power-law identity (log scale, graded)",
                              float(np.abs(out.values - exact).max()), 1e-5))

    # eigen-identity at beta in {0.5, 1, 2}
    for beta in (0.5, 1.0, 2.0):
        mu = 0.5
        g = graded_grid(1.0, 1.25, 1024, 3.0)
        dphi = g - 1.0
        vals = special.ml2_array(mu, 1.0, beta * dphi ** mu)
        out = frac_integral(SampledFunction(g, vals), mu, phi, 1.0)
        exact = (vals - 1.0) / beta
        checks.append(CheckResult(f"eigen-identity beta={beta}",
                                  float(np.abs(out.values - exact).max()), 1e-4))

    # estimate form at beta = 1: integral <= function nodewise
    mu = 0.5
    g = graded_grid(1.0, 2.0, 1024, 3.0)
    dphi = g - 1.0
    vals = special.ml2_array(mu, 1.0, dphi ** mu)
    out = frac_integral(SampledFunction(g, vals), mu, phi, 1.0)
    checks.append(CheckResult("estimate: integral below envelope",
                              float(np.max(out.values - vals)), 1e-10))

    # inversion both ways (data vanishing at the anchor for the D(I(z)) leg)
    g = uniform_grid(1.0, 2.0, 512)
    cut = g.size // 20
    z0 = SampledFunction(g, np.sin(2.0 * (g - 1.0)) * (g - 1.0))
    mu = 0.6
    di = caputo_derivative(frac_integral(z0, mu, phi, 1.0), mu, phi, 1.0)
    checks.append(CheckResult("derivative of integral recovers data",
                              float(np.abs(di.values - z0.values)[cut:].max()), 5e-3))
    zs = SampledFunction(g, np.sin(2.0 * g) + 2.0)
    idz = frac_integral(caputo_derivative(zs, mu, phi, 1.0), mu, phi, 1.0)
    checks.append(CheckResult("integral of derivative recovers increment",
                              float(np.abs(idz.values - (zs.values - zs.values[0]))[cut:].max()),
                              5e-3))

    # linearity
    mu = 0.5
    z1 = SampledFunction(g, np.cos(g))
    z2 = SampledFunction(g, g ** 2)
    lhs = frac_integral(SampledFunction(g, 2.5 * z1.values - 1.25 * z2.values),
                        mu, phi, 1.0)
    rhs = 2.5 * frac_integral(z1, mu, phi, 1.0).values \
        - 1.25 * frac_integral(z2, mu, phi, 1.0).values
    checks.append(CheckResult("linearity",
                              float(np.abs(lhs.values - rhs).max()), 1e-12))

    # refinement: halving the mesh shrinks the power-law error by >= 3
    def perr(nn):
        gg = graded_grid(1.0, 2.0, nn, 3.0)
        dd = gg - 1.0
        zz = SampledFunction(gg, dd ** 0.5)
        oo = frac_integral(zz, 0.5, phi, 1.0)
        ee = special.gamma(1.5) / special.gamma(2.0) * dd
        return np.abs(oo.values - ee).max()

    ratio = perr(512) / max(perr(1024), 1e-300)
    checks.append(CheckResult("refinement ratio 512->1024 (>= 3 required)",
                              -(ratio - 3.0), 0.0))
    return checks


def laplace_suite():
    """Transform pairs and the convolution theorem."""
    checks = []
    phi = make_phi("identity")
    m = 0.0

    for lam in (1.0, 2.0, 5.0):
        q = TransformQuery(lam=lam, horizon=m + 40.0 / lam, tol=1e-9)
        got = glt(lambda l: 1.0, phi, m, q)
        checks.append(CheckResult(f"transform of 1 at lam={lam}",
                                  abs(got - 1.0 / lam), 1e-4))

    r = 1.5
    for lam in (1.0, 2.0, 5.0):
        q = TransformQuery(lam=lam, horizon=m + 60.0 / lam, tol=1e-9)
        got = glt(lambda l: (l - m) ** (r - 1.0), phi, m, q)
        expect = special.gamma(r) / lam ** r
        checks.append(CheckResult(f"transform of power r=1.5 at lam={lam}",
                                  abs(got - expect), 1e-4))

    # one-parameter Mittag-Leffler pair, rho = 1
    p = 0.5
    for lam in (1.0, 2.0, 5.0):
        q = TransformQuery(lam=lam, horizon=m + 80.0 / lam, tol=1e-8)
        got = glt(lambda l: special.ml1(p, -((l - m) ** p)), phi, m, q)
        expect = lam ** (p - 1.0) / (lam ** p + 1.0)
        checks.append(CheckResult(f"one-parameter pair p=0.5 at lam={lam}",
                                  abs(got - expect), 1e-4))

    # two-parameter pair on the solver's exponent set p = mu - kappa, q = mu
    pp, qq = 0.05, 0.5
    for lam in (1.0, 2.0, 5.0):
        qy = TransformQuery(lam=lam, horizon=m + 120.0 / lam, tol=1e-8)
        got = glt(lambda l: (l - m) ** (qq - 1.0)
                  * special.ml2(pp, qq, -((l - m) ** pp)) if l > m else 0.0,
                  phi, m, qy)
        expect = lam ** (pp - qq) / (lam ** pp + 1.0)
        checks.append(CheckResult(f"two-parameter pair (0.05, 0.5) at lam={lam}",
                                  abs(got - expect), 1e-4))

    # transform of the fractional integral
    mu = 0.6
    g = uniform_grid(m, m + 30.0, 6001)
    zf = np.exp(-1.5 * g) * np.sin(g)
    zi = frac_integral(SampledFunction(g, zf), mu, phi, m)
    for lam in (1.0, 2.0, 5.0):
        q = TransformQuery(lam=lam, horizon=m + 30.0, tol=1e-6)
        lhs = glt(lambda l: float(zi(l)), phi, m, q)
        rhs = glt(lambda l: math.exp(-1.5 * l) * math.sin(l), phi, m, q) / lam ** mu
        checks.append(CheckResult(f"transform of fractional integral at lam={lam}",
                                  abs(lhs - rhs), 1e-4))

    # transform of the Caputo derivative (finite-difference floor, looser)
    zc = SampledFunction(g, np.exp(-1.5 * g))
    zd = caputo_derivative(zc, mu, phi, m)
    for lam in (1.0, 2.0, 5.0):
        q = TransformQuery(lam=lam, horizon=m + 30.0, tol=1e-5)
        lhs = glt(lambda l: float(zd(l)), phi, m, q)
        ztr = glt(lambda l: math.exp(-1.5 * l), phi, m, q)
        rhs = lam ** mu * ztr - lam ** (mu - 1.0) * 1.0
        checks.append(CheckResult(f"transform of Caputo derivative at lam={lam}",
                                  abs(lhs - rhs), 5e-3))

    # convolution theorem on smooth decaying factors
    gc = uniform_grid(m, m + 25.0, 4001)
    z1 = SampledFunction(gc, np.exp(-1.0 * gc))
    z2 = SampledFunction(gc, np.exp(-2.0 * gc) * gc)
    conv = phi_convolve(z1, z2, phi, m)
    for lam in (1.0, 2.0, 5.0):
        q = TransformQuery(lam=lam, horizon=m + 25.0, tol=1e-6)
        lhs = glt(lambda l: float(conv(l)), phi, m, q)
        rhs = glt(lambda l: math.exp(-l), phi, m, q) \
            * glt(lambda l: math.exp(-2.0 * l) * l, phi, m, q)
        checks.append(CheckResult(f"convolution theorem at lam={lam}",
                                  abs(lhs - rhs), 1e-4))
    return checks


def run_suite(name):
    """Run a named suite: calculus, laplace, or all."""
    if name == "calculus":
        return calculus_suite()
    if name == "laplace":
        return laplace_suite()
    if name == "all":
        return calculus_suite() + laplace_suite()
    raise ValueError(f"unknown suite {name!r}; choose calculus, laplace or all")


def format_table(checks: List[CheckResult]):
    header = f"{'check':<44s} {'observed':>11s} {'tol':>9s} result"
    body = "\n".join(c.row() for c in checks)
    summary = "all checks passed" if all(c.passed for c in checks) \
        else "FAILURES present"
    return f"{header}\n{body}\n{summary}\n"
