"""Two-qubit realizations and the quantum-realizable efficiency bound.

A realization is a pure state ``cos(theta)|00> + sin(theta)|11>`` measured
along four X-Z-plane directions, one pair per party.  The module provides the
closed-form probability table of such a realization, an independent dense
Born-rule evaluation used to cross-check it, the multi-start inner
maximization of the noisy violation over the five angles, and the bisection
that turns it into the upper bound ``eta_qr`` on the minimum efficiency
compatible with an observed violation.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import minimize

from .behavior import Behavior, DomainError

__all__ = [
    "Q_MAX_VIOLATION",
    "ETA_THRESHOLD",
    "QuantumRealization",
    "SearchConfig",
    "BisectionResult",
    "InfeasibleViolationError",
    "probability_table",
    "realization_probabilities",
    "born_rule_oracle",
    "noisy_eberhard_values",
    "max_noisy_eberhard",
    "min_efficiency_qr",
]

# Largest quantum violation (sqrt(2) - 1) / 2 and the efficiency below which
# no violation is possible.
Q_MAX_VIOLATION = (math.sqrt(2.0) - 1.0) / 2.0
ETA_THRESHOLD = 2.0 / 3.0

_ANGLE_LOWER = np.array([0.0, 0.0, 0.0, 0.0, 0.0])
_ANGLE_UPPER = np.array([math.pi / 2.0, 2 * math.pi, 2 * math.pi, 2 * math.pi, 2 * math.pi])

_FD_STEP = 1e-6


class InfeasibleViolationError(ValueError):
    """The requested violation exceeds what the noise level permits."""

    def __init__(self, e_obs: float, achievable_max: float):
        self.e_obs = float(e_obs)
        self.achievable_max = float(achievable_max)
        super().__init__(
            f"violation {e_obs:.6g} unreachable: maximum achievable at this "
            f"noise level is {achievable_max:.6g}"
        )


@dataclass(frozen=True)
class QuantumRealization:
    """State angle plus the four measurement angles, all in radians."""

    theta: float
    theta_a0: float
    theta_a1: float
    theta_b0: float
    theta_b1: float

    def __post_init__(self):
        angles = self.angles
        if not (np.all(angles >= _ANGLE_LOWER - 1e-12) and np.all(angles <= _ANGLE_UPPER + 1e-12)):
            raise DomainError(
                "angles out of range: theta in [0, pi/2], measurement angles in [0, 2 pi]"
            )

    @property
    def angles(self) -> np.ndarray:
        return np.array(
            [self.theta, self.theta_a0, self.theta_a1, self.theta_b0, self.theta_b1]
        )

    @classmethod
    def from_angles(cls, angles) -> "QuantumRealization":
        t, a0, a1, b0, b1 = (float(v) for v in angles)
        return cls(t, a0, a1, b0, b1)


@dataclass(frozen=True)
class SearchConfig:
    """Multi-start settings for the inner five-angle maximization."""

    restarts: int = 32
    inner_tolerance: float = 1e-9
    max_iterations: int = 300
    rng_seed: int = 0

    def __post_init__(self):
        if self.restarts < 1:
            raise DomainError("need at least one restart")
        if self.inner_tolerance <= 0:
            raise DomainError("inner tolerance must be positive")


@dataclass(frozen=True)
class BisectionResult:
    """Outcome of the efficiency bisection over quantum realizations."""

    eta: float
    realization: QuantumRealization
    iterations: int
    achieved_value: float
    e_obs: float
    xi: float

    def to_json(self) -> str:
        return json.dumps(
            {
                "eta": self.eta,
                "angles": list(self.realization.angles),
                "achieved_value": self.achieved_value,
                "iterations": self.iterations,
                "e_obs": self.e_obs,
                "xi": self.xi,
            }
        )


# ---------------------------------------------------------------------------
# probabilities of a realization
# ---------------------------------------------------------------------------

def probability_table(theta, theta_a0, theta_a1, theta_b0, theta_b1) -> np.ndarray:
    """Closed-form joint probabilities, vectorized over leading dimensions.

    Returns an array of shape ``(..., 2, 2, 2, 2)`` indexed ``[a, b, x, y]``.
    """
    theta, ta0, ta1, tb0, tb1 = np.broadcast_arrays(
        *(np.asarray(v, dtype=float) for v in (theta, theta_a0, theta_a1, theta_b0, theta_b1))
    )
    shape = theta.shape
    out = np.empty(shape + (2, 2, 2, 2))
    c2t = np.cos(2.0 * theta)
    s2t = np.sin(2.0 * theta)
    st2 = np.sin(theta) ** 2
    ct2 = np.cos(theta) ** 2
    tx = (ta0, ta1)
    ty = (tb0, tb1)
    for x in range(2):
        cx, sx = np.cos(tx[x]), np.sin(tx[x])
        cx2, sx2 = np.cos(tx[x] / 2.0) ** 2, np.sin(tx[x] / 2.0) ** 2
        for y in range(2):
            cy, sy = np.cos(ty[y]), np.sin(ty[y])
            cy2, sy2 = np.cos(ty[y] / 2.0) ** 2, np.sin(ty[y] / 2.0) ** 2
            cross = sx * sy * s2t
            out[..., 0, 0, x, y] = 0.125 * (
                2.0
                + np.cos(2.0 * theta - tx[x])
                + np.cos(2.0 * theta + tx[x])
                + 2.0 * cy * (c2t + cx)
                + 2.0 * cross
            )
            out[..., 0, 1, x, y] = sx2 * cy2 * st2 + cx2 * sy2 * ct2 - 0.25 * cross
            out[..., 1, 0, x, y] = 0.125 * (
                2.0
                + np.cos(2.0 * theta + ty[y])
                + np.cos(2.0 * theta - ty[y])
                - 2.0 * cx * (c2t + cy)
                - 2.0 * cross
            )
            out[..., 1, 1, x, y] = 0.25 * (
                1.0 + cx * cy - (cx + cy) * c2t + cross
            )
    return out


def realization_probabilities(r: QuantumRealization) -> Behavior:
    """Behavior of a realization from the closed forms."""
    return Behavior(
        probability_table(r.theta, r.theta_a0, r.theta_a1, r.theta_b0, r.theta_b1)
    )


def born_rule_oracle(r: QuantumRealization) -> Behavior:
    """Behavior from explicit state vector and projectors.

    Builds the four-component state and the rank-1 projectors as dense real
    matrices and evaluates <psi| Pi_a otimes Pi_b |psi> directly.  Kept free
    of the closed forms above so the two paths check each other.
    """
    psi = np.array([math.cos(r.theta), 0.0, 0.0, math.sin(r.theta)])

    def projectors(angle: float) -> tuple[np.ndarray, np.ndarray]:
        direction = np.array(
            [[math.cos(angle), math.sin(angle)], [math.sin(angle), -math.cos(angle)]]
        )
        eye = np.eye(2)
        return 0.5 * (eye + direction), 0.5 * (eye - direction)

    alice = [projectors(a) for a in (r.theta_a0, r.theta_a1)]
    bob = [projectors(a) for a in (r.theta_b0, r.theta_b1)]
    p = np.empty((2, 2, 2, 2))
    for x in range(2):
        for y in range(2):
            for a in range(2):
                for b in range(2):
                    op = np.kron(alice[x][a], bob[y][b])
                    p[a, b, x, y] = psi @ op @ psi
    return Behavior(p)


# ---------------------------------------------------------------------------
# inner maximization
# ---------------------------------------------------------------------------

def noisy_eberhard_values(angle_batch: np.ndarray, eta: float, xi: float) -> np.ndarray:
    """Noisy violation K eta^2 - L eta + M xi eta - N xi + O xi^2, batched.

    ``angle_batch`` has shape ``(..., 5)``; one polynomial value per row.
    """
    angle_batch = np.asarray(angle_batch, dtype=float)
    p = probability_table(
        angle_batch[..., 0],
        angle_batch[..., 1],
        angle_batch[..., 2],
        angle_batch[..., 3],
        angle_batch[..., 4],
    )
    K = p[..., 0, 0, 0, 0] - p[..., 0, 0, 1, 1] + p[..., 0, 0, 0, 1] + p[..., 0, 0, 1, 0]
    L = (
        p[..., 0, 0, 0, 1]
        + p[..., 0, 0, 1, 0]
        + p[..., 0, 1, 0, 1]
        + p[..., 1, 0, 1, 0]
    )
    value = K * eta * eta - L * eta
    if xi != 0.0:
        M = (
            p[..., 1, 0, 0, 0]
            + p[..., 0, 1, 0, 0]
            + p[..., 1, 0, 0, 1]
            + p[..., 0, 1, 1, 0]
            + p[..., 0, 1, 0, 1]
            + p[..., 1, 0, 1, 0]
            - p[..., 1, 0, 1, 1]
            - p[..., 0, 1, 1, 1]
        )
        N = (
            p[..., 1, 1, 0, 1]
            + p[..., 1, 1, 1, 0]
            + p[..., 1, 0, 0, 1]
            + p[..., 0, 1, 1, 0]
        )
        O = (
            p[..., 1, 1, 0, 0]
            + p[..., 1, 1, 0, 1]
            + p[..., 1, 1, 1, 0]
            - p[..., 1, 1, 1, 1]
        )
        value = value + M * xi * eta - N * xi + O * xi * xi
    return value


def _objective_with_gradient(eta: float, xi: float):
    """Negated violation and central-difference gradient, one batched call."""
    steps = _FD_STEP * np.eye(5)

    def fun(angles: np.ndarray):
        batch = np.concatenate(
            [angles[None, :], angles[None, :] + steps, angles[None, :] - steps]
        )
        values = noisy_eberhard_values(batch, eta, xi)
        grad = (values[1:6] - values[6:11]) / (2.0 * _FD_STEP)
        return -values[0], -grad

    return fun


def max_noisy_eberhard(
    eta: float,
    xi: float,
    cfg: SearchConfig | None = None,
    initial_guesses: tuple = (),
) -> tuple[float, QuantumRealization]:
    """Best noisy violation over the five-angle box, by multi-start ascent.

    Local searches start from ``initial_guesses`` (warm starts) plus a
    deterministic batch of ``cfg.restarts`` uniform draws.  The returned value
    is a lower bound on the true maximum.
    """
    if not (0.0 <= eta <= 1.0) or not (0.0 <= xi < 1.0):
        raise DomainError("eta must lie in [0, 1] and xi in [0, 1)")
    cfg = cfg or SearchConfig()
    rng = np.random.default_rng(cfg.rng_seed)
    starts = [np.asarray(g, dtype=float) for g in initial_guesses]
    starts += list(rng.uniform(_ANGLE_LOWER, _ANGLE_UPPER, size=(cfg.restarts, 5)))
    fun = _objective_with_gradient(eta, xi)
    bounds = list(zip(_ANGLE_LOWER, _ANGLE_UPPER))
    best_value = -np.inf
    best_angles = starts[0]
    for start in starts:
        res = minimize(
            fun,
            np.clip(start, _ANGLE_LOWER, _ANGLE_UPPER),
            jac=True,
            method="L-BFGS-B",
            bounds=bounds,
            options={
                "maxiter": cfg.max_iterations,
                "ftol": 1e-15,
                "gtol": 1e-2 * cfg.inner_tolerance,
            },
        )
        if -res.fun > best_value:
            best_value = -res.fun
            best_angles = res.x
    return float(best_value), QuantumRealization.from_angles(best_angles)


def min_efficiency_qr(
    e_obs: float,
    xi: float = 0.0,
    tol: float = 1e-7,
    cfg: SearchConfig | None = None,
) -> BisectionResult:
    """Bisection for the lowest efficiency whose best violation reaches e_obs.

    The feasible set of efficiencies is upper-closed, so the bisection keeps
    the upper endpoint on the achievable side and returns it together with
    the witness realization found there.
    """
    if not (0.0 < e_obs <= Q_MAX_VIOLATION + 1e-12):
        raise DomainError(
            f"observed violation must lie in (0, {Q_MAX_VIOLATION:.6f}], got {e_obs}"
        )
    if tol <= 0:
        raise DomainError("tolerance must be positive")
    cfg = cfg or SearchConfig()
    seeds = np.random.SeedSequence(cfg.rng_seed).generate_state(128)

    value, witness = max_noisy_eberhard(1.0, xi, replace(cfg, rng_seed=int(seeds[0])))
    if value < e_obs:
        raise InfeasibleViolationError(e_obs, value)

    lower, upper = ETA_THRESHOLD, 1.0
    achieved = value
    iterations = 0
    while upper - lower > tol:
        iterations += 1
        eta = 0.5 * (upper + lower)
        value, candidate = max_noisy_eberhard(
            eta,
            xi,
            replace(cfg, rng_seed=int(seeds[min(iterations, 127)])),
            initial_guesses=(witness.angles,),
        )
        if value >= e_obs:
            upper, witness, achieved = eta, candidate, value
        else:
            lower = eta
    return BisectionResult(
        eta=float(upper),
        realization=witness,
        iterations=iterations,
        achieved_value=float(achieved),
        e_obs=float(e_obs),
        xi=float(xi),
    )
