"""Problem data, solution carrier, and solver configuration.

The equation being solved couples two fractional derivatives of orders
mu and kappa (0 < kappa < mu <= 1) of one unknown z on [m, n]:

    D^mu z(l) + rho * D^kappa z(l) = Q(l, z(l), z(f(l))),   l in [m, n],
    z(l) = alpha(l),                                        l in [m-sigma, m],

with a continuous delay map f satisfying f(l) <= l and values in
[m - sigma, n], and a prescribed history alpha on [m - sigma, m].
"""

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import DomainError
from .phi import PhiFunction

_H1_SAMPLES = 257


@dataclass
class ProblemSpec:
    """Full problem data plus the declared Lipschitz constant of the rhs.

    rhs(l, u, v) must be elementwise-safe for numpy arrays; lipschitz is the
    declared constant L with |rhs(l,b2,a2) - rhs(l,b1,a1)| <= L(|b2-b1| + |a2-a1|).
    It is trusted, not estimated; see refute_lipschitz for the probe that can
    only disprove it.
    """

    mu: float
    kappa: float
    rho: float
    sigma: float
    m: float
    n: float
    phi: PhiFunction
    rhs: Callable
    lipschitz: float
    delay: Callable[[float], float]
    history: Callable[[float], float]

    def validate(self):
        if not (0.0 < self.kappa < self.mu <= 1.0):
            raise DomainError(
                f"orders must satisfy 0 < kappa < mu <= 1, got kappa={self.kappa}, mu={self.mu}")
        if not (self.rho > 0.0):
            raise DomainError(f"damping coefficient must be positive, got {self.rho}")
        if not (self.sigma > 0.0):
            raise DomainError(f"delay span must be positive, got {self.sigma}")
        if not (0.0 < self.m < self.n):
            raise DomainError(f"interval must satisfy 0 < m < n, got [{self.m}, {self.n}]")
        if not (self.lipschitz > 0.0):
            raise DomainError(f"declared Lipschitz constant must be positive, got {self.lipschitz}")
        # delay map admissibility, sampled
        ls = np.linspace(self.m, self.n, _H1_SAMPLES)
        tol = 1e-12 * max(1.0, abs(self.n))
        for l in ls:
            d = self.delay(float(l))
            if d > l + tol:
                raise DomainError(f"delay map must satisfy f(l) <= l, violated at l={l} (f={d})")
            if d < self.m - self.sigma - tol or d > self.n + tol:
                raise DomainError(
                    f"delay map must land in [m-sigma, n], violated at l={l} (f={d})")
        # history continuity, sampled at two refinements
        d_coarse = _max_jump(self.history, self.m - self.sigma, self.m, 129)
        d_fine = _max_jump(self.history, self.m - self.sigma, self.m, 513)
        floor = 1e-9 * (1.0 + abs(self.history(self.m)))
        if d_fine > 0.75 * d_coarse + floor:
            raise DomainError(
                "history function looks discontinuous: adjacent-sample jumps do not "
                f"shrink under refinement ({d_coarse:.3e} -> {d_fine:.3e})")
        return self


def _max_jump(fn, lo, hi, n):
    xs = np.linspace(lo, hi, n)
    vals = np.array([fn(float(x)) for x in xs])
    return float(np.max(np.abs(np.diff(vals)))) if n > 1 else 0.0


@dataclass
class Trajectory:
    """Discretized solution on a grid spanning [m - sigma, n].

    history_len is the index of the node sitting exactly at m; everything
    strictly before it carries the history values.
    """

    grid: np.ndarray
    values: np.ndarray
    history_len: int

    def __post_init__(self):
        self.grid = np.asarray(self.grid, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.grid.shape != self.values.shape:
            raise DomainError("grid and values must have equal length")
        if not np.all(np.diff(self.grid) > 0):
            raise DomainError("grid must be strictly increasing")
        if not (0 <= self.history_len < self.grid.size):
            raise DomainError("history_len out of range")

    def __call__(self, x):
        return np.interp(x, self.grid, self.values)

    @property
    def anchor(self):
        return float(self.grid[self.history_len])

    @property
    def main_grid(self):
        return self.grid[self.history_len:]

    @property
    def main_values(self):
        return self.values[self.history_len:]

    @property
    def history_grid(self):
        return self.grid[: self.history_len + 1]

    @property
    def history_values(self):
        return self.values[: self.history_len + 1]

    def copy_with(self, values):
        return Trajectory(self.grid.copy(), np.asarray(values, dtype=float).copy(),
                          self.history_len)


def build_grid(spec, n_nodes):
    """Uniform grid on [m, n] with matching-pitch history nodes on [m-sigma, m].

    Returns (full_grid, history_len) with a node exactly at m.
    """
    if n_nodes < 2:
        raise DomainError("need at least 2 nodes on [m, n]")
    main = np.linspace(spec.m, spec.n, n_nodes)
    h = (spec.n - spec.m) / (n_nodes - 1)
    n_hist = max(2, int(math.ceil(spec.sigma / h)) + 1)
    hist = np.linspace(spec.m - spec.sigma, spec.m, n_hist)
    grid = np.concatenate([hist[:-1], main])
    return grid, n_hist - 1


@dataclass
class SolverConfig:
    """Grid resolution, stopping tolerance, iteration cap and contraction weight.

    beta defaults to 2 * lipschitz + 1, which always satisfies the strict
    contraction requirement beta > 2 * lipschitz.
    """

    n_nodes: int = 512
    tol: float = 1e-10
    max_iter: int = 100
    beta: Optional[float] = None

    def resolved_beta(self, lipschitz):
        beta = self.beta if self.beta is not None else 2.0 * lipschitz + 1.0
        if not (beta > 2.0 * lipschitz):
            raise DomainError(
                f"contraction weight must exceed twice the Lipschitz constant: "
                f"beta={beta}, 2L={2.0 * lipschitz}")
        return beta

    def validate(self, lipschitz):
        if self.n_nodes < 16:
            raise DomainError(f"n_nodes must be at least 16, got {self.n_nodes}")
        if not (self.tol > 0.0):
            raise DomainError(f"tol must be positive, got {self.tol}")
        if self.max_iter < 1:
            raise DomainError(f"max_iter must be at least 1, got {self.max_iter}")
        self.resolved_beta(lipschitz)
        return self


def refute_lipschitz(spec, n_samples=4000, seed=0, box=None):
    """Random pair probing of the declared Lipschitz constant.

    Returns None if no violation is found, otherwise a dict naming a witness
    (l, pair of states, observed ratio).  A None result certifies nothing.
    """
    rng = np.random.default_rng(seed)
    if box is None:
        hist_vals = [abs(spec.history(float(x)))
                     for x in np.linspace(spec.m - spec.sigma, spec.m, 33)]
        r = max(2.0, 3.0 * max(hist_vals))
        box = (-r, r)
    lo, hi = box
    ls = rng.uniform(spec.m, spec.n, n_samples)
    pts = rng.uniform(lo, hi, (n_samples, 4))
    margin = 1.0 + 1e-9
    for l, (u1, v1, u2, v2) in zip(ls, pts):
        denom = abs(u2 - u1) + abs(v2 - v1)
        if denom < 1e-12:
            continue
        diff = abs(spec.rhs(l, u2, v2) - spec.rhs(l, u1, v1))
        if diff > spec.lipschitz * denom * margin + 1e-12:
            return {
                "l": float(l),
                "pair": ((float(u1), float(v1)), (float(u2), float(v2))),
                "observed_ratio": float(diff / denom),
                "declared": spec.lipschitz,
            }
    return None
