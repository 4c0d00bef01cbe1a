"""Scale functions and sampled data carriers.

A scale function maps the time axis through a strictly increasing,
differentiable change of variable; every fractional operator in this
package is taken with respect to one.  Four registry kinds are serializable
from configs; the library also accepts caller-supplied eval/deriv pairs.
"""

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import DomainError

PHI_KINDS = ("identity", "logarithmic", "power", "exponential")


@dataclass(frozen=True)
class PhiFunction:
    """Scale function with its derivative and (for registry kinds) inverse."""

    kind: str
    eval: Callable[[float], float]
    deriv: Callable[[float], float]
    inverse: Optional[Callable[[float], float]] = None
    exponent: Optional[float] = None

    def __call__(self, x):
        return self.eval(x)

    @property
    def has_inverse(self):
        return self.inverse is not None


def make_phi(kind, exponent=None):
    """Build a registry scale function.

    kind: one of identity, logarithmic, power, exponential.
    exponent: required for the power kind, must be > 0.
    """
    if kind == "identity":
        return PhiFunction("identity", lambda x: x, lambda x: 1.0, lambda u: u)
    if kind == "logarithmic":
        return PhiFunction("logarithmic", math.log, lambda x: 1.0 / x, math.exp)
    if kind == "power":
        if exponent is None or not (exponent > 0):
            raise DomainError("power scale function needs exponent > 0")
        r = float(exponent)
        return PhiFunction(
            "power",
            lambda x, r=r: x ** r,
            lambda x, r=r: r * x ** (r - 1.0),
            lambda u, r=r: u ** (1.0 / r),
            exponent=r,
        )
    if kind == "exponential":
        return PhiFunction("exponential", math.exp, math.exp, math.log)
    raise DomainError(f"unknown scale function kind {kind!r}; choose from {PHI_KINDS}")


def custom_phi(eval_fn, deriv_fn, inverse_fn=None):
    """Wrap caller-supplied callables as a scale function (kind 'custom')."""
    return PhiFunction("custom", eval_fn, deriv_fn, inverse_fn)


@dataclass(frozen=True)
class PhiViolation:
    sample: float
    reason: str

    def __str__(self):
        return f"scale function invalid at {self.sample}: {self.reason}"


def validate_phi(phi, domain, n_samples=100):
    """Check positivity of the derivative and strict monotonicity on a grid.

    Returns None when valid, otherwise a PhiViolation naming the first
    offending sample.  Evaluation failures (e.g. log at a non-positive
    point) are reported as violations, not raised.
    """
    lo, hi = domain
    if not (lo < hi):
        raise DomainError(f"domain must satisfy lo < hi, got [{lo}, {hi}]")
    if n_samples < 2:
        raise DomainError("n_samples must be at least 2")
    xs = np.linspace(lo, hi, n_samples)
    prev = None
    for x in xs:
        x = float(x)
        try:
            d = phi.deriv(x)
            v = phi.eval(x)
        except (ValueError, OverflowError, ZeroDivisionError) as e:
            return PhiViolation(x, f"evaluation failed ({e})")
        if not (d > 0.0) or not math.isfinite(d):
            return PhiViolation(x, f"derivative {d} is not positive")
        if not math.isfinite(v):
            return PhiViolation(x, f"value {v} is not finite")
        if prev is not None and not (v > prev):
            return PhiViolation(x, "values are not strictly increasing")
        prev = v
    return None


@dataclass
class SampledFunction:
    """Function known by its values on a strictly increasing grid."""

    grid: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        self.grid = np.asarray(self.grid, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.grid.ndim != 1 or self.grid.size < 2:
            raise DomainError("grid must be one-dimensional with at least 2 nodes")
        if self.values.shape != self.grid.shape:
            raise DomainError("grid and values must have equal length")
        if not np.all(np.diff(self.grid) > 0):
            raise DomainError("grid must be strictly increasing")

    @classmethod
    def from_callable(cls, fn, grid):
        grid = np.asarray(grid, dtype=float)
        return cls(grid, np.array([fn(float(x)) for x in grid]))

    def __call__(self, x):
        return np.interp(x, self.grid, self.values)

    def __len__(self):
        return self.grid.size
