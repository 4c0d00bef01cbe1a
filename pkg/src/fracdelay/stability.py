"""Ulam-Hyers-Mittag-Leffler stability certification.

An approximate solution is one whose equation residual is bounded by
eps * E(mu; (Phi(l) - Phi(m))^mu).  The theory promises every such function
stays within c * eps times the same envelope of the exact solution sharing
its history, with the stability constant

    c = E(mu; 2 L (Phi(n) - Phi(m))^mu).

This module builds admissible perturbations, solves perturbed problems,
checks the residual inequality, runs the trial loop that certifies the
bound empirically, and computes the Gronwall majorant chain that dominates
every observed deviation.
"""

import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional

import numpy as np

from . import special
from .errors import DomainError, NonConvergence
from .phi import SampledFunction
from .problem import Trajectory
from .solver import DiscreteOperator, PicardResult, picard_solve

_PASS_SLACK = 0.01  # relative slack on worst_ratio vs the stability constant


def uhml_constant(lipschitz, mu, phi, m, n):
    """Stability constant E(mu; 2 L (Phi(n) - Phi(m))^mu); always >= 1."""
    if not (lipschitz > 0.0):
        raise DomainError(f"Lipschitz constant must be positive, got {lipschitz}")
    if not (m < n):
        raise DomainError(f"interval endpoints must satisfy m < n, got [{m}, {n}]")
    dphi = phi.eval(n) - phi.eval(m)
    return special.ml1(mu, 2.0 * lipschitz * dphi ** mu)


def envelope(eps, mu, phi, m, ls):
    """eps * E(mu; (Phi(l) - Phi(m))^mu) at the given points."""
    u0 = phi.eval(m)
    dphi = np.clip(np.array([phi.eval(float(x)) for x in np.atleast_1d(ls)]) - u0,
                   0.0, None)
    return eps * special.ml2_array(mu, 1.0, dphi ** mu)


@dataclass
class Perturbation:
    """Admissible disturbance: |theta(l)| <= eps * envelope by construction."""

    eps: float
    theta: Callable
    seed: Optional[int]
    description: str = ""

    def sample(self, ls):
        return np.asarray(self.theta(np.asarray(ls, dtype=float)))


def admissible_perturbation(eps, mu, phi, m, n, seed=None, saturating=False):
    """Envelope times a bounded waveform.

    The waveform g is a seeded mixture of at most five sinusoids in the
    transformed variable with sum of amplitudes 1, so sup|g| <= 1 and the
    admissibility bound holds by construction.  saturating=True replaces g
    by the constant 1, probing the bound's worst direction.  The same seed
    reproduces the same disturbance bit for bit.
    """
    if not (eps > 0.0):
        raise DomainError(f"perturbation amplitude must be positive, got {eps}")
    u0 = phi.eval(m)

    if saturating:
        def g(us):
            return np.ones_like(us)
        desc = "saturating (g = 1)"
    else:
        rng = np.random.default_rng(seed)
        n_modes = int(rng.integers(2, 6))
        raw = rng.uniform(-1.0, 1.0, n_modes)
        amps = raw / np.sum(np.abs(raw))
        span = max(phi.eval(n) - u0, 1e-300)
        freqs = rng.uniform(0.5, 12.0, n_modes) / span
        phases = rng.uniform(0.0, 2.0 * math.pi, n_modes)

        def g(us, amps=amps, freqs=freqs, phases=phases):
            us = np.atleast_1d(us)
            acc = np.zeros_like(us, dtype=float)
            for a, w, ph in zip(amps, freqs, phases):
                acc += a * np.sin(w * us + ph)
            return acc
        desc = f"{n_modes} seeded sinusoids"

    def theta(ls, mu=mu, phi=phi, m=m, eps=eps):
        ls = np.atleast_1d(np.asarray(ls, dtype=float))
        us = np.array([phi.eval(float(x)) for x in ls]) - phi.eval(m)
        env = eps * special.ml2_array(mu, 1.0, np.clip(us, 0.0, None) ** mu)
        return env * g(us)

    return Perturbation(eps, theta, seed, desc)


def perturbed_solve(spec, pert, cfg, op=None):
    """Solve with the disturbance added to the right-hand side.

    The disturbance is state independent, so the declared Lipschitz constant
    and the contraction certificate are unchanged.  Returns the PicardResult.
    """
    if op is None:
        op = DiscreteOperator(spec, cfg.n_nodes)
    theta_vec = pert.sample(op.main_grid)
    return picard_solve(spec, cfg, op=op, extra_rhs=theta_vec)


def verify_lhus(z_tilde, spec, pert, op=None):
    """Check the integral residual inequality of an approximate solution.

    Computes max over main nodes of
      |z(l) - z(m) - int kernel * Q(., z, z(f))| - eps * envelope(l)
    and passes iff that maximum is below a small quadrature slack.
    """
    if op is None:
        op = DiscreteOperator(spec, z_tilde.main_grid.size)
    if not op.matches(z_tilde):
        raise DomainError("trajectory grid does not match the operator grid")
    q = op.rhs_vector(z_tilde.values)
    integral = op.K @ q
    zm = z_tilde.values[op.history_len]
    lhs = np.abs(z_tilde.main_values - zm - integral)
    env = envelope(pert.eps, spec.mu, spec.phi, spec.m, op.main_grid)
    c_scale = uhml_constant(spec.lipschitz, spec.mu, spec.phi, spec.m, spec.n)
    slack = 1e-6 * pert.eps * c_scale
    max_violation = float(np.max(lhs - env))
    return max_violation, bool(max_violation <= slack)


@dataclass
class StabilityReport:
    """Certificate of the empirical UHML check."""

    eps: float
    c_ml: float
    trials: int
    worst_ratio: float
    history_max_dev: float
    pass_: bool
    per_trial_ratios: List[float] = field(default_factory=list)
    failed_trials: List[int] = field(default_factory=list)

    def as_text(self):
        lines = [
            f"epsilon: {self.eps!r}",
            f"c_ml: {self.c_ml!r}",
            f"trials: {self.trials}",
            f"worst_ratio: {self.worst_ratio!r}",
            f"history_max_dev: {self.history_max_dev!r}",
            f"pass: {str(self.pass_).lower()}",
        ]
        return "\n".join(lines) + "\n"


def verify_uhml(spec, eps, trials, cfg, seed=0, op=None, collect=None):
    """Empirical UHML certification over seeded perturbation trials.

    Every trial solves a perturbed problem and compares it against the
    unperturbed solution with the identical shared history; the ratio
    |z_pert - z| / (eps * envelope) is recorded nodewise on [m, n].  The
    report passes iff the worst ratio stays within the stability constant
    (plus 1% certification slack) and the history deviation is exactly zero.
    Trials whose solve diverges are marked failed and fail the report.
    """
    if trials < 1:
        raise DomainError("need at least one trial")
    if op is None:
        op = DiscreteOperator(spec, cfg.n_nodes)
    base = picard_solve(spec, cfg, op=op).trajectory
    env = envelope(eps, spec.mu, spec.phi, spec.m, op.main_grid)
    c_ml = uhml_constant(spec.lipschitz, spec.mu, spec.phi, spec.m, spec.n)
    worst = 0.0
    hist_dev = 0.0
    per_trial = []
    failed = []
    for t in range(trials):
        pert = admissible_perturbation(eps, spec.mu, spec.phi, spec.m, spec.n,
                                       seed=seed + t)
        try:
            res = perturbed_solve(spec, pert, cfg, op=op)
        except NonConvergence:
            failed.append(t)
            per_trial.append(math.inf)
            continue
        zt = res.trajectory
        hdev = float(np.max(np.abs(
            zt.values[: op.history_len] - base.values[: op.history_len])))
        hist_dev = max(hist_dev, hdev)
        dev = np.abs(zt.main_values - base.main_values)
        ratio = float(np.max(dev / env))
        per_trial.append(ratio)
        worst = max(worst, ratio)
        if collect is not None:
            collect.append((pert, zt, dev))
    ok = (not failed) and worst <= c_ml * (1.0 + _PASS_SLACK) and hist_dev == 0.0
    return StabilityReport(eps, c_ml, trials, worst, hist_dev, bool(ok),
                           per_trial, failed)


def gronwall_majorant(c2, c3, mu, phi, m):
    """Explicit Gronwall bound c2(l) * E(mu; Gamma(mu) c3 (Phi(l) - Phi(m))^mu).

    c2 must be sampled nondecreasing; c3 must be nonnegative.
    """
    if c3 < 0.0:
        raise DomainError(f"growth coefficient must be nonnegative, got {c3}")
    diffs = np.diff(c2.values)
    bad = np.nonzero(diffs < -1e-14 * (1.0 + np.abs(c2.values[:-1])))[0]
    if bad.size:
        i = int(bad[0])
        raise DomainError(
            f"majorant input must be nondecreasing; decreases at node {i} "
            f"(l={c2.grid[i]} -> {c2.grid[i + 1]})")
    u0 = phi.eval(m)
    dphi = np.clip(np.array([phi.eval(float(x)) for x in c2.grid]) - u0, 0.0, None)
    factor = special.ml2_array(mu, 1.0, math.gamma(mu) * c3 * dphi ** mu)
    return SampledFunction(c2.grid.copy(), c2.values * factor)


def majorant_operator(b_values, op, env):
    """One application of the majorant map to full-grid values b >= 0.

    History nodes (strictly before the anchor) map to 0; on [m, n] the map is
    envelope + L * int W/Gamma(mu) * (b(e) + b(f(e))) de.
    """
    spec = op.spec
    b_delayed = np.interp(op.delay_pos, op.grid, b_values)
    b_main = b_values[op.history_len:]
    out = np.zeros_like(b_values)
    out[op.history_len:] = env + spec.lipschitz * (op.K2 @ (b_main + b_delayed))
    return out


def majorant_fixed_point(eps, spec, cfg, op=None):
    """Fixed point of the majorant map, iterated from zero.

    The map is affine in b, so the iteration is stopped on a residual scaled
    by eps; that keeps the iteration count independent of eps and makes the
    fixed point exactly linear under doubling of eps.  Returns a Trajectory
    (zero on the history segment).
    """
    cfg.validate(spec.lipschitz)
    beta = cfg.resolved_beta(spec.lipschitz)
    if op is None:
        op = DiscreteOperator(spec, cfg.n_nodes)
    env = envelope(eps, spec.mu, spec.phi, spec.m, op.main_grid)
    weights = op.bielecki_weights(beta)
    b = np.zeros(op.grid.size)
    residuals = []
    for _ in range(cfg.max_iter):
        nb = majorant_operator(b, op, env)
        residual = float(np.max(np.abs(nb - b) / weights))
        residuals.append(residual)
        b = nb
        if residual <= cfg.tol * eps:
            return Trajectory(op.grid.copy(), b, op.history_len)
    raise NonConvergence(
        f"majorant iteration did not reach tol in {cfg.max_iter} sweeps",
        residual_history=residuals)
