"""Closed-form no-signaling lower bound on the minimum detector efficiency.

Relaxing the quantum set to no-signaling behaviors that respect the maximal
quantum violation makes the minimization analytic: the most noise-robust
behavior mixes PR-box weight ``sqrt(2) - 1`` with the three deterministic
points that contribute nothing to the noisy violation, and the resulting
quadratic gives the bound in closed form.  This module holds that bound, the
extremal mixture construction, and numerical verification of the inequality
chain showing the bound dominates every admissible decomposition.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .behavior import Behavior, DomainError, NsDecomposition, ns_mixture

__all__ = [
    "Q_PR",
    "AnalyticBound",
    "ChainReport",
    "eta_ns",
    "p_ns",
    "noisy_eberhard_ns_mixture",
    "verify_proposition1",
]

# PR-box weight saturating the maximal quantum violation.
Q_PR = math.sqrt(2.0) - 1.0

_E_MAX = Q_PR / 2.0


@dataclass(frozen=True)
class AnalyticBound:
    e_obs: float
    eta_ns: float

    def quadratic_residual(self) -> float:
        """How well the bound solves (3 q/2) eta^2 - q eta = E."""
        q = Q_PR
        return abs(1.5 * q * self.eta_ns**2 - q * self.eta_ns - self.e_obs)


def eta_ns(e_obs: float) -> float:
    """Closed-form bound 1/3 + (1/3) sqrt(1 + 6 E / (sqrt(2) - 1)).

    Strictly increasing on the admissible violations (0, (sqrt(2)-1)/2],
    ranging over (2/3, 1].  The ratio is computed as 6 (E / q) so that the
    endpoint maps to exactly 1.0 in floating point.
    """
    if not (0.0 < e_obs <= _E_MAX + 1e-15):
        raise DomainError(
            f"violation must lie in (0, {_E_MAX:.6f}], got {e_obs}"
        )
    return (1.0 + math.sqrt(1.0 + 6.0 * (e_obs / Q_PR))) / 3.0


def p_ns(p4: float, p8: float, p12: float) -> Behavior:
    """The extremal mixture: PR weight sqrt(2)-1, remainder on D4, D8, D12.

    Its Eberhard violation is (sqrt(2)-1)/2 regardless of the three-way
    split, and its noisy violation curve is q_PR (3/2 eta^2 - eta).
    """
    if min(p4, p8, p12) < -1e-12:
        raise DomainError("weights must be nonnegative")
    if abs((p4 + p8 + p12) - (1.0 - Q_PR)) > 1e-9:
        raise DomainError(
            f"weights must sum to 1 - (sqrt(2)-1) = {1.0 - Q_PR:.12f}, "
            f"got {p4 + p8 + p12}"
        )
    return ns_mixture(NsDecomposition(p_pr=Q_PR, p4=p4, p8=p8, p12=p12))


def noisy_eberhard_ns_mixture(d: NsDecomposition, eta: float) -> float:
    """Violation of a mixture after symmetric efficiency noise.

    Evaluates ((3/2) p_PR + alpha) eta^2 - (p_PR + alpha) eta directly; the
    weights on D4, D8, D12 never enter.
    """
    if not (0.0 <= eta <= 1.0):
        raise DomainError("eta must lie in [0, 1]")
    coeff = d.alpha
    return (1.5 * d.p_pr + coeff) * eta * eta - (d.p_pr + coeff) * eta


@dataclass(frozen=True)
class ChainReport:
    """Per-link record of the domination argument at one decomposition."""

    e_obs: float
    eta: float
    eta_ns_value: float | None
    alpha_term: float
    pr_excess: float
    g_eta: float
    links: tuple[tuple[str, bool], ...]

    @property
    def passed(self) -> bool:
        return all(ok for _, ok in self.links)


def verify_proposition1(d: NsDecomposition, eta: float, tol: float = 1e-12) -> ChainReport:
    """Check every link of the chain bounding the decomposition's violation.

    Links: the non-PR weight only lowers the noisy violation; the PR weight
    respects the maximal quantum violation; the PR-only curve is nonnegative
    from the threshold up; and finally the closed-form bound does not exceed
    the supplied efficiency.  Violated preconditions surface as failed links
    rather than exceptions.
    """
    alpha_term = d.alpha * (eta * eta - eta)
    pr_excess = d.p_pr - Q_PR
    g_eta = 1.5 * eta * eta - eta
    e_obs = noisy_eberhard_ns_mixture(d, eta)
    links = [
        ("alpha term nonpositive", alpha_term <= tol),
        ("PR weight within q_PR", pr_excess <= tol),
        ("violation positive", e_obs > 0.0),
    ]
    eta_ns_value = None
    if e_obs > 0.0:
        links.append(("PR-only curve nonnegative", g_eta >= -tol))
        eta_ns_value = eta_ns(min(e_obs, _E_MAX))
        links.append(("closed form below eta", eta_ns_value <= eta + tol))
    return ChainReport(
        e_obs=float(e_obs),
        eta=float(eta),
        eta_ns_value=eta_ns_value,
        alpha_term=float(alpha_term),
        pr_excess=float(pr_excess),
        g_eta=float(g_eta),
        links=tuple(links),
    )
