"""Flat text configuration: one `section.key = value` per line.

The right-hand side, delay map and history come from closed registries so
configs stay auditable; arbitrary expressions are deliberately unsupported.
Unknown keys are rejected by name, and serialization is canonical so that
serialize(parse(text)) is idempotent.
"""

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DomainError
from .phi import PHI_KINDS, make_phi
from .problem import ProblemSpec, SolverConfig


class ConfigError(ValueError):
    """A configuration problem, carrying the offending field name."""

    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field
        self.message = message


RHS_KINDS = ("zero", "constant", "linear", "paper_example")
DELAY_KINDS = ("constant_lag", "proportional")
HISTORY_KINDS = ("constant", "polynomial")

_KNOWN_KEYS = {
    "problem.mu", "problem.kappa", "problem.rho", "problem.sigma",
    "problem.m", "problem.n",
    "problem.phi.kind", "problem.phi.exponent",
    "problem.q.kind", "problem.q.c", "problem.q.a", "problem.q.b",
    "problem.lipschitz",
    "problem.delay.kind", "problem.delay.lag", "problem.delay.q",
    "problem.history.kind", "problem.history.c", "problem.history.coeffs",
    "solver.n_nodes", "solver.tol", "solver.max_iter", "solver.beta",
    "stability.epsilon", "stability.trials", "stability.seed",
}

_REQUIRED = ("problem.mu", "problem.kappa", "problem.rho", "problem.sigma",
             "problem.m", "problem.n", "problem.q.kind")


@dataclass
class StabilityParams:
    epsilon: float
    trials: int
    seed: int


@dataclass
class RunConfig:
    problem: ProblemSpec
    solver: SolverConfig
    stability: Optional[StabilityParams]
    raw: dict


def _parse_lines(text):
    out = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}", f"expected `key = value`, got {line.strip()!r}")
        key, _, value = stripped.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in _KNOWN_KEYS:
            raise ConfigError(key, "unknown key")
        if key in out:
            raise ConfigError(key, "duplicate key")
        out[key] = value
    return out


def _get_float(raw, key, default=None):
    if key not in raw:
        if default is None:
            raise ConfigError(key, "required key missing")
        return default
    try:
        return float(raw[key])
    except ValueError:
        raise ConfigError(key, f"not a number: {raw[key]!r}")


def _get_int(raw, key, default=None):
    if key not in raw:
        if default is None:
            raise ConfigError(key, "required key missing")
        return default
    try:
        return int(raw[key])
    except ValueError:
        raise ConfigError(key, f"not an integer: {raw[key]!r}")


def _get_choice(raw, key, choices, default=None):
    val = raw.get(key, default)
    if val is None:
        raise ConfigError(key, "required key missing")
    if val not in choices:
        raise ConfigError(key, f"must be one of {choices}, got {val!r}")
    return val


def _build_rhs(raw):
    kind = _get_choice(raw, "problem.q.kind", RHS_KINDS)
    if kind == "zero":
        def rhs(l, u, v):
            return np.zeros_like(np.asarray(l, dtype=float))
        return kind, rhs, 1e-6, {}
    if kind == "constant":
        c = _get_float(raw, "problem.q.c")

        def rhs(l, u, v, c=c):
            return np.full_like(np.asarray(l, dtype=float), c)
        return kind, rhs, 1e-6, {"problem.q.c": c}
    if kind == "linear":
        a = _get_float(raw, "problem.q.a")
        b = _get_float(raw, "problem.q.b")

        def rhs(l, u, v, a=a, b=b):
            return a * u + b * v
        return kind, rhs, max(abs(a) + abs(b), 1e-6), {"problem.q.a": a, "problem.q.b": b}
    # the worked example: half-sine state gain plus sine of the delayed state
    def rhs(l, u, v):
        return np.sin(l) / 2.0 * (u + np.sqrt(1.0 + u * u)) + np.sin(v)
    return kind, rhs, 1.0, {}


def _build_delay(raw, sigma):
    kind = _get_choice(raw, "problem.delay.kind", DELAY_KINDS, default="constant_lag")
    if kind == "constant_lag":
        lag = _get_float(raw, "problem.delay.lag", default=sigma)
        if not (0.0 <= lag <= sigma):
            raise ConfigError("problem.delay.lag", f"must lie in [0, sigma], got {lag}")
        return kind, (lambda l, lag=lag: l - lag), {"problem.delay.lag": lag}
    q = _get_float(raw, "problem.delay.q")
    if not (0.0 < q <= 1.0):
        raise ConfigError("problem.delay.q", f"must lie in (0, 1], got {q}")
    return kind, (lambda l, q=q: q * l), {"problem.delay.q": q}


def _build_history(raw):
    kind = _get_choice(raw, "problem.history.kind", HISTORY_KINDS, default="constant")
    if kind == "constant":
        c = _get_float(raw, "problem.history.c", default=1.0)
        return kind, (lambda l, c=c: c), {"problem.history.c": c}
    text = raw.get("problem.history.coeffs")
    if text is None:
        raise ConfigError("problem.history.coeffs", "required key missing")
    try:
        coeffs = [float(t) for t in text.split(",") if t.strip() != ""]
    except ValueError:
        raise ConfigError("problem.history.coeffs", f"not a comma list of numbers: {text!r}")
    if not coeffs:
        raise ConfigError("problem.history.coeffs", "need at least one coefficient")

    def history(l, coeffs=tuple(coeffs)):
        return sum(c * l ** i for i, c in enumerate(coeffs))
    return kind, history, {"problem.history.coeffs": ",".join(repr(c) for c in coeffs)}


def parse_config(text):
    """Parse and fully validate a configuration; raises ConfigError."""
    raw = _parse_lines(text)
    for key in _REQUIRED:
        if key not in raw:
            raise ConfigError(key, "required key missing")

    mu = _get_float(raw, "problem.mu")
    kappa = _get_float(raw, "problem.kappa")
    rho = _get_float(raw, "problem.rho")
    sigma = _get_float(raw, "problem.sigma")
    m = _get_float(raw, "problem.m")
    n = _get_float(raw, "problem.n")

    phi_kind = _get_choice(raw, "problem.phi.kind", PHI_KINDS, default="identity")
    exponent = None
    if phi_kind == "power":
        exponent = _get_float(raw, "problem.phi.exponent")
    elif "problem.phi.exponent" in raw:
        raise ConfigError("problem.phi.exponent", "only valid for the power scale function")
    try:
        phi = make_phi(phi_kind, exponent=exponent)
    except DomainError as e:
        raise ConfigError("problem.phi.kind", str(e))

    rhs_kind, rhs, default_lip, rhs_params = _build_rhs(raw)
    lipschitz = _get_float(raw, "problem.lipschitz", default=default_lip)
    delay_kind, delay, delay_params = _build_delay(raw, sigma)
    history_kind, history, history_params = _build_history(raw)

    spec = ProblemSpec(mu=mu, kappa=kappa, rho=rho, sigma=sigma, m=m, n=n,
                       phi=phi, rhs=rhs, lipschitz=lipschitz,
                       delay=delay, history=history)
    try:
        spec.validate()
    except DomainError as e:
        raise ConfigError("problem", str(e))

    solver = SolverConfig(
        n_nodes=_get_int(raw, "solver.n_nodes", default=512),
        tol=_get_float(raw, "solver.tol", default=1e-10),
        max_iter=_get_int(raw, "solver.max_iter", default=100),
        beta=_get_float(raw, "solver.beta") if "solver.beta" in raw else None,
    )
    try:
        solver.validate(spec.lipschitz)
    except DomainError as e:
        raise ConfigError("solver", str(e))

    stability = None
    if any(k.startswith("stability.") for k in raw):
        stability = StabilityParams(
            epsilon=_get_float(raw, "stability.epsilon"),
            trials=_get_int(raw, "stability.trials", default=20),
            seed=_get_int(raw, "stability.seed", default=0),
        )
        if not (stability.epsilon > 0.0):
            raise ConfigError("stability.epsilon", "must be positive")
        if stability.trials < 1:
            raise ConfigError("stability.trials", "must be at least 1")

    canonical = {
        "problem.mu": mu, "problem.kappa": kappa, "problem.rho": rho,
        "problem.sigma": sigma, "problem.m": m, "problem.n": n,
        "problem.phi.kind": phi_kind,
    }
    if exponent is not None:
        canonical["problem.phi.exponent"] = exponent
    canonical["problem.q.kind"] = rhs_kind
    canonical.update(rhs_params)
    canonical["problem.lipschitz"] = lipschitz
    canonical["problem.delay.kind"] = delay_kind
    canonical.update(delay_params)
    canonical["problem.history.kind"] = history_kind
    canonical.update(history_params)
    canonical["solver.n_nodes"] = solver.n_nodes
    canonical["solver.tol"] = solver.tol
    canonical["solver.max_iter"] = solver.max_iter
    if solver.beta is not None:
        canonical["solver.beta"] = solver.beta
    if stability is not None:
        canonical["stability.epsilon"] = stability.epsilon
        canonical["stability.trials"] = stability.trials
        canonical["stability.seed"] = stability.seed

    return RunConfig(problem=spec, solver=solver, stability=stability, raw=canonical)


_CANONICAL_ORDER = [
    "problem.mu", "problem.kappa", "problem.rho", "problem.sigma",
    "problem.m", "problem.n", "problem.phi.kind", "problem.phi.exponent",
    "problem.q.kind", "problem.q.c", "problem.q.a", "problem.q.b",
    "problem.lipschitz", "problem.delay.kind", "problem.delay.lag",
    "problem.delay.q", "problem.history.kind", "problem.history.c",
    "problem.history.coeffs", "solver.n_nodes", "solver.tol",
    "solver.max_iter", "solver.beta", "stability.epsilon",
    "stability.trials", "stability.seed",
]


def serialize_config(cfg):
    """Canonical text form; parse(serialize(parse(t))) reproduces itself."""
    lines = []
    for key in _CANONICAL_ORDER:
        if key in cfg.raw:
            val = cfg.raw[key]
            if isinstance(val, float):
                lines.append(f"{key} = {val!r}")
            else:
                lines.append(f"{key} = {val}")
    return "\n".join(lines) + "\n"
