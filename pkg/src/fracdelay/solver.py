"""Integral-equation solver for the multi-term fractional delay problem.

The differential problem is equivalent to the weakly singular Volterra
equation

    z(l) = alpha(m) + int_m^l W(l, e) E(mu-kappa, mu; -rho (Phi(l)-Phi(e))^(mu-kappa))
                      * Q(e, z(e), z(f(e))) de,
    W(l, e) = Phi'(e) (Phi(l) - Phi(e))^(mu-1),

solved here two independent ways: globally by Picard iteration of the
fixed-point operator (contractive in the Mittag-Leffler-weighted Bielecki
norm once beta > 2 L), and node by node by Volterra marching with a scalar
fixed point per node.  Quadrature weight tables are precomputed once per
grid and shared across sweeps.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import special
from .errors import DomainError, NonConvergence
from .fraccalc import abel_weights
from .phi import SampledFunction
from .problem import Trajectory, build_grid


def contraction_certificate(lipschitz, beta):
    """True iff 2 L / beta < 1, the strict contraction requirement."""
    if not (lipschitz > 0.0) or not (beta > 0.0):
        raise DomainError("contraction certificate needs lipschitz > 0 and beta > 0")
    return 2.0 * lipschitz / beta < 1.0


def kernel(l, e, spec):
    """Pointwise solution kernel W(l, e) * E(mu-kappa, mu; -rho dPhi^(mu-kappa)).

    Singular as e -> l for mu < 1; quadrature never evaluates it there, the
    singular factor is integrated in closed form instead.
    """
    if not (spec.m <= e < l <= spec.n):
        raise DomainError(f"kernel needs m <= e < l <= n, got e={e}, l={l}")
    dphi = spec.phi.eval(l) - spec.phi.eval(e)
    p2 = spec.mu - spec.kappa
    return (spec.phi.deriv(e) * dphi ** (spec.mu - 1.0)
            * special.ml2(p2, spec.mu, -spec.rho * dphi ** p2))


def _gml_series_coefficients(mu, p2, rho, span):
    """Coefficients c_j = (-rho)^j / Gamma(j p2 + mu) of the kernel expansion

        (du)^(mu-1) E(p2, mu; -rho du^p2) = sum_j c_j (du)^(mu + j p2 - 1),

    truncated once the terms are negligible at the largest distance on the
    grid.  The expansion converges like the Mittag-Leffler series itself.
    """
    coefs = []
    scale = rho * span ** p2 if span > 0 else 0.0  # per-term growth at max distance
    powr = 1.0  # (-rho)^j
    mag_max = 0.0
    mag_prev = math.inf
    for j in range(20_000):
        a = j * p2 + mu
        inv_g = 1.0 / math.gamma(a) if a <= 170.0 else math.exp(-math.lgamma(a))
        mag = (scale ** j if scale > 0 else (1.0 if j == 0 else 0.0)) * inv_g
        coefs.append(powr * inv_g)
        powr *= -rho
        mag_max = max(mag_max, mag)
        if not math.isfinite(mag) or not math.isfinite(powr):
            raise DomainError("kernel series overflows; damping or span too large")
        if j > 4 and mag < 1e-17 * max(1.0, mag_max) and mag_prev < 1e-17 * max(1.0, mag_max):
            break
        mag_prev = mag
    else:
        raise DomainError("kernel series did not converge in 20000 terms")
    return np.array(coefs)


def _kernel_table(u, mu, p2, rho):
    """Lower-triangular weights K with (K @ q)[i] approximating

        int_{u_0}^{u_i} (u_i - s)^(mu-1) E(p2, mu; -rho (u_i - s)^p2) qhat(s) ds

    where qhat interpolates the data piecewise linearly.  The singular factor
    TIMES the Mittag-Leffler factor is integrated exactly per cell by
    expanding the latter into its power series (exact moments per power), so
    only the data itself is interpolated.
    """
    n = u.size
    span = float(u[-1] - u[0])
    coefs = _gml_series_coefficients(mu, p2, rho, span)
    du = np.diff(u)
    h = du[0] if n > 1 else 0.0
    uniform = n > 1 and np.all(np.abs(du - h) <= 1e-12 * abs(h))
    if uniform:
        # distances only depend on i - j: accumulate per-cell left/right
        # weights on the distance index and spread along diagonals
        k = np.arange(n, dtype=float)
        b = k * h                     # b_k = distance to the cell's left node
        a = np.maximum(b - h, 0.0)    # a_k = distance to the cell's right node
        t_left = np.zeros(n)
        t_right = np.zeros(n)
        for j, c in enumerate(coefs):
            s = mu + j * p2
            bs = b ** s
            as_ = a ** s
            d1 = (bs - as_) / s
            d2 = (bs * b - as_ * a) / (s + 1.0)
            t_left += c * (d2 - a * d1) / h
            t_right += c * (b * d1 - d2) / h
        t_left[0] = 0.0
        t_right[0] = 0.0
        g = t_left.copy()
        g[:-1] += t_right[1:]
        idx = np.arange(n)[:, None] - np.arange(n)[None, :]
        K = np.where(idx >= 1, g[np.clip(idx, 0, n - 1)], 0.0)
        K[np.arange(n), np.arange(n)] = t_right[1] if n > 1 else 0.0
        K[:, 0] = t_left[np.clip(np.arange(n), 0, n - 1)]
        return K
    B = np.clip(u[:, None] - u[None, :], 0.0, None)
    hcell = du
    K = np.zeros((n, n))
    cols = np.arange(n - 1)
    cell_mask = cols[None, :] < np.arange(n)[:, None]
    for j, c in enumerate(coefs):
        s = mu + j * p2
        Ps = B ** s
        Ps1 = Ps * B
        d1 = (Ps[:, :-1] - Ps[:, 1:]) / s
        d2 = (Ps1[:, :-1] - Ps1[:, 1:]) / (s + 1.0)
        wl = np.where(cell_mask, (d2 - B[:, 1:] * d1) / hcell, 0.0)
        wr = np.where(cell_mask, (B[:, :-1] * d1 - d2) / hcell, 0.0)
        K[:, :-1] += c * wl
        K[:, 1:] += c * wr
        if abs(c) * (span ** s if span > 0 else 0.0) < 1e-18 * max(1.0, abs(K).max()):
            break
    return K


def _eval_rhs(rhs, ls, us, vs):
    """Evaluate Q elementwise, tolerating scalar-only callables."""
    try:
        out = np.asarray(rhs(ls, us, vs), dtype=float)
        if out.shape == ls.shape:
            return out
    except (TypeError, ValueError):
        pass
    return np.array([float(rhs(float(l), float(u), float(v)))
                     for l, u, v in zip(ls, us, vs)])


class DiscreteOperator:
    """Quadrature tables and delay bookkeeping for one (problem, grid) pair.

    Immutable after construction; every solve on the same grid reuses it.
    """

    def __init__(self, spec, n_nodes):
        spec.validate()
        self.spec = spec
        self.grid, self.history_len = build_grid(spec, n_nodes)
        self.main_grid = self.grid[self.history_len:]
        self.u = np.array([spec.phi.eval(float(x)) for x in self.main_grid])
        if not np.all(np.diff(self.u) > 0):
            raise DomainError("scale function is not strictly increasing on the grid")
        p2 = spec.mu - spec.kappa
        self.K = _kernel_table(self.u, spec.mu, p2, spec.rho)
        self.K2 = abel_weights(self.u, spec.mu) / math.gamma(spec.mu)
        self.delay_pos = np.array([spec.delay(float(x)) for x in self.main_grid])
        self.alpha_m = float(spec.history(spec.m))
        self.hist_vals = np.array([spec.history(float(x))
                                   for x in self.grid[: self.history_len + 1]])

    @property
    def n_main(self):
        return self.main_grid.size

    def initial_trajectory(self):
        """Constant first guess alpha(m) on [m, n], history values elsewhere."""
        values = np.concatenate([self.hist_vals[:-1],
                                 np.full(self.n_main, self.alpha_m)])
        return Trajectory(self.grid.copy(), values, self.history_len)

    def trajectory_from_main(self, main_values):
        values = np.concatenate([self.hist_vals[:-1], main_values])
        return Trajectory(self.grid.copy(), values, self.history_len)

    def rhs_vector(self, values_full):
        z_main = values_full[self.history_len:]
        z_delayed = np.interp(self.delay_pos, self.grid, values_full)
        return _eval_rhs(self.spec.rhs, self.main_grid, z_main, z_delayed)

    def apply(self, values_full, extra_rhs=None):
        """One application of the fixed-point operator to full-grid values."""
        q = self.rhs_vector(values_full)
        if extra_rhs is not None:
            q = q + extra_rhs
        out = values_full.copy()
        out[: self.history_len] = self.hist_vals[:-1]
        out[self.history_len:] = self.alpha_m + self.K @ q
        return out

    def bielecki_weights(self, beta):
        """Node weights E(mu; beta (Phi(l) - Phi(m))^mu), clamped to 1 before m."""
        if not (beta > 0.0):
            raise DomainError(f"Bielecki weight needs beta > 0, got {beta}")
        dphi = np.clip(self.u - self.u[0], 0.0, None)
        w_main = special.ml2_array(self.spec.mu, 1.0, beta * dphi ** self.spec.mu)
        return np.concatenate([np.ones(self.history_len), w_main])

    def matches(self, traj):
        return (traj.history_len == self.history_len
                and traj.grid.size == self.grid.size
                and np.allclose(traj.grid, self.grid, rtol=0.0,
                                atol=1e-12 * max(1.0, abs(self.spec.n))))

    def check_history(self, traj):
        hv = traj.values[: self.history_len + 1]
        if not np.allclose(hv, self.hist_vals, rtol=0.0,
                           atol=1e-12 * (1.0 + np.abs(self.hist_vals).max())):
            raise DomainError("trajectory history branch does not equal the history function")


def bielecki_norm(traj_diff, beta, mu, phi, m):
    """Weighted sup norm: sup |v(l)| / E(mu; beta (Phi(max(l, m)) - Phi(m))^mu).

    Nodes in the history segment get weight E(mu; 0) = 1 (the weight argument
    is clamped at the anchor).
    """
    if not (beta > 0.0):
        raise DomainError(f"Bielecki norm needs beta > 0, got {beta}")
    u0 = phi.eval(m)
    u = np.array([phi.eval(float(x)) for x in traj_diff.grid])
    args = beta * np.clip(u - u0, 0.0, None) ** mu
    weights = special.ml2_array(mu, 1.0, args)
    return float(np.max(np.abs(traj_diff.values) / weights))


@dataclass
class PicardResult:
    trajectory: Trajectory
    iterations: int
    final_residual: float
    residuals: list = field(default_factory=list)
    ratios: list = field(default_factory=list)

    def __iter__(self):
        # allows: traj, iterations, residual = picard_solve(...)
        return iter((self.trajectory, self.iterations, self.final_residual))


def picard_solve(spec, cfg, op=None, extra_rhs=None):
    """Global Picard iteration of the fixed-point operator.

    Starts from the constant guess alpha(m), iterates until the Bielecki
    norm of successive differences drops below cfg.tol, and records the
    empirical contraction ratios.  Raises NonConvergence (with the residual
    history) if cfg.max_iter is exhausted.
    """
    cfg.validate(spec.lipschitz)
    beta = cfg.resolved_beta(spec.lipschitz)
    if not contraction_certificate(spec.lipschitz, beta):
        raise DomainError("contraction certificate 2L/beta < 1 failed")
    if op is None:
        op = DiscreteOperator(spec, cfg.n_nodes)
    elif op.spec is not spec:
        raise DomainError("precomputed operator belongs to a different problem")
    weights = op.bielecki_weights(beta)
    values = op.initial_trajectory().values
    residuals = []
    for k in range(cfg.max_iter):
        new_values = op.apply(values, extra_rhs=extra_rhs)
        residual = float(np.max(np.abs(new_values - values) / weights))
        residuals.append(residual)
        values = new_values
        if residual <= cfg.tol:
            ratios = [residuals[i] / residuals[i - 1]
                      for i in range(1, len(residuals)) if residuals[i - 1] > 0]
            traj = Trajectory(op.grid.copy(), values, op.history_len)
            return PicardResult(traj, k + 1, residual, residuals, ratios)
    raise NonConvergence(
        f"Picard iteration did not reach tol={cfg.tol:g} in {cfg.max_iter} sweeps "
        f"(last residual {residuals[-1]:.3e})",
        residual_history=residuals)


def march_solve(spec, cfg, op=None, extra_rhs=None):
    """Sequential Volterra marching, an independent cross-check of the solver.

    Nodes are computed left to right; each node solves a scalar fixed-point
    equation (damped iteration to cfg.tol / 10) because the last quadrature
    cell and possibly the delayed value involve the unknown itself.
    """
    cfg.validate(spec.lipschitz)
    if op is None:
        op = DiscreteOperator(spec, cfg.n_nodes)
    elif op.spec is not spec:
        raise DomainError("precomputed operator belongs to a different problem")
    tol_inner = cfg.tol / 10.0
    values = op.initial_trajectory().values
    nmain = op.n_main
    hl = op.history_len
    q = np.zeros(nmain)
    zd0 = float(np.interp(op.delay_pos[0], op.grid, values))
    q[0] = float(spec.rhs(float(op.main_grid[0]), op.alpha_m, zd0))
    if extra_rhs is not None:
        q[0] += extra_rhs[0]
    for i in range(1, nmain):
        base = op.alpha_m + float(op.K[i, :i] @ q[:i])
        kii = float(op.K[i, i])
        li = float(op.main_grid[i])
        # delayed value as c0 + c1 * z_i (c1 != 0 only if f(l_i) falls past l_{i-1})
        dpos = float(op.delay_pos[i])
        j = int(np.clip(np.searchsorted(op.grid, dpos), 1, op.grid.size - 1))
        w = (dpos - op.grid[j - 1]) / (op.grid[j] - op.grid[j - 1])
        w = min(max(w, 0.0), 1.0)
        fi = hl + i
        if j == fi:
            c0 = (1.0 - w) * values[j - 1]
            c1 = w
        elif j > fi:
            raise DomainError(f"delay map is anticausal at node {i} (f(l) > l)")
        else:
            c0 = (1.0 - w) * values[j - 1] + w * values[j]
            c1 = 0.0
        z = values[fi - 1]
        omega = 1.0
        prev_delta = math.inf
        ei = extra_rhs[i] if extra_rhs is not None else 0.0
        for _ in range(200):
            qi = float(spec.rhs(li, z, c0 + c1 * z)) + ei
            g = base + kii * qi
            delta = g - z
            if abs(delta) <= tol_inner:
                z = g
                break
            if abs(delta) > prev_delta:
                omega *= 0.5
            prev_delta = abs(delta)
            z = z + omega * delta
        else:
            raise NonConvergence(
                f"marching fixed point stalled at node {i} (l={li})", node=i)
        values[fi] = z
        q[i] = float(spec.rhs(li, z, c0 + c1 * z)) + ei
    return Trajectory(op.grid.copy(), values, op.history_len)


def apply_P(traj, spec):
    """One application of the fixed-point operator to an existing trajectory."""
    op = DiscreteOperator(spec, traj.main_grid.size)
    if not op.matches(traj):
        raise DomainError("trajectory grid does not match the solver grid")
    op.check_history(traj)
    return Trajectory(op.grid.copy(), op.apply(traj.values), op.history_len)


def linear_solution(h, alpha_m, spec, n_nodes):
    """Closed-kernel solution of the linear problem with forcing h.

    z(l) = alpha_m + int_m^l kernel(l, e) h(e) de on [m, n]; history branch
    carries the history function.  h must be sampled across [m, n].
    """
    op = DiscreteOperator(spec, n_nodes)
    tol = 1e-9 * max(1.0, abs(spec.n))
    if h.grid[0] > spec.m + tol or h.grid[-1] < spec.n - tol:
        raise DomainError("forcing must be sampled across the whole solve interval")
    hv = np.interp(op.main_grid, h.grid, h.values)
    z_main = alpha_m + op.K @ hv
    z_main[0] = alpha_m
    return op.trajectory_from_main(z_main)
